"""Shared forecasting machinery: lag windows, scaling and the forecast loop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import SizeError
from ..timeseries import Difference, TimeSeries, difference_values, next_from_difference


@dataclass(frozen=True)
class MinMaxScaler:
    """Affine map of [lo, hi] onto [0, 1]; fitted on training data only."""

    lo: float
    hi: float

    @classmethod
    def fit(cls, values) -> "MinMaxScaler":
        values = np.asarray(values, dtype=float)
        lo, hi = float(values.min()), float(values.max())
        if hi == lo:
            hi = lo + 1.0
        return cls(lo, hi)

    def transform(self, x):
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)

    def inverse(self, x):
        return np.asarray(x, dtype=float) * (self.hi - self.lo) + self.lo


def lag_windows(z: np.ndarray, lags: int, n_out: int = 1, stride: int = 1):
    """Input rows ``z[i:i+lags]`` with targets ``z[i+lags:i+lags+n_out]``.

    Windows are anchored so the last one ends at the final observation.
    """
    z = np.asarray(z, dtype=float)
    n = len(z) - lags - n_out + 1
    if n < 1:
        raise SizeError(f"{len(z)} observations cannot fill a ({lags} -> {n_out}) window")
    starts = np.arange((n - 1) % stride, n, stride)
    X = np.stack([z[s:s + lags] for s in starts])
    Y = np.stack([z[s + lags:s + lags + n_out] for s in starts])
    return X, Y, starts


class Forecaster:
    """Base for fitted models.

    Subclasses work on the "model scale": the input series after the
    optional ``difference`` operator.  ``predict_next(z)`` returns the
    model-scale prediction for the observation following ``z``.
    """

    difference: Optional[Difference] = None

    @property
    def min_history(self) -> int:
        """Model-scale observations needed before a prediction can be made."""
        raise NotImplementedError

    def predict_next(self, z: np.ndarray) -> float:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def to_text(self) -> str:
        """Plain-text ``key = value`` dump of the fitted parameters."""
        lines = [f"model = {type(self).__name__}"]
        if self.difference is not None:
            lines.append(f"difference = {self.difference}")
        for key, value in self.params().items():
            lines.append(f"{key} = {format_value(value)}")
        return "\n".join(lines) + "\n"


def format_value(value) -> str:
    if isinstance(value, (np.ndarray, list, tuple)):
        arr = np.asarray(value, dtype=float).ravel()
        return ", ".join(repr(float(v)) for v in arr)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def model_scale(values: np.ndarray, difference: Optional[Difference]) -> np.ndarray:
    if difference is None or difference.span == 0:
        return np.asarray(values, dtype=float)
    return difference_values(values, difference)


def forecast(model: Forecaster, history: TimeSeries, horizon: int, mode: str = "rolling",
             actuals: Optional[Sequence[float]] = None) -> np.ndarray:
    """Forecast the ``horizon`` observations following ``history``.

    In ``rolling`` mode every step is one step ahead from actual data:
    after each prediction the observed value from ``actuals`` joins the
    history.  In ``iterated`` mode the model's own predictions are fed
    forward.  Forecasts are returned in the units of ``history``.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if mode not in ("rolling", "iterated"):
        raise ValueError(f"unknown forecast mode {mode!r}")
    if mode == "rolling" and horizon > 1:
        if actuals is None or len(actuals) < horizon - 1:
            raise SizeError("rolling mode needs the observed values of the forecast window")

    y = list(np.asarray(history.values, dtype=float))
    diff = model.difference
    span = 0 if diff is None else diff.span
    if len(y) - span < model.min_history:
        raise SizeError(
            f"history of {len(y)} too short: model needs {model.min_history + span}")

    out = np.empty(horizon)
    for k in range(horizon):
        arr = np.asarray(y)
        z = model_scale(arr, diff)
        zhat = model.predict_next(z)
        out[k] = zhat if span == 0 else next_from_difference(zhat, diff, arr)
        if k < horizon - 1:
            y.append(out[k] if mode == "iterated" else float(actuals[k]))
    return out
