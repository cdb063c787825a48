"""Linear combination baselines.

Simple average, trimmed average (worst models by validation error removed),
Winsorized average, median, inverse-error weighting and variance-based
(least squares with intercept) pooling.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, PerfectModelError, SingularityError, SizeError
from ..timeseries import ErrorReport, evaluate
from .forecast_set import ForecastSet

KINDS = ("simple_average", "trimmed", "winsorized", "median", "error_based", "variance_based")


@dataclass(frozen=True)
class LinearCombinerSpec:
    """A linear combination rule plus whatever it learned on validation data.

    ``param`` is the trim percentage for ``trimmed``, the count ``i`` for
    ``winsorized`` and the metric name for ``error_based``.
    """

    kind: str
    param: object = None
    weights: Optional[np.ndarray] = None
    intercept: float = 0.0
    excluded: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown combiner {self.kind!r}")
        if self.kind == "trimmed" and not (0 <= float(self.param) < 50):
            raise ConfigError("trim percentage must lie in [0, 50)")
        if self.kind == "winsorized" and (int(self.param) < 0):
            raise ConfigError("winsorizing count must be nonnegative")
        if self.kind == "error_based" and self.param not in ("mape", "mse", "arv"):
            raise ConfigError(f"unknown error metric {self.param!r}")

    @property
    def label(self) -> str:
        if self.kind == "trimmed":
            return f"trimmed({self.param:g}%)"
        if self.kind == "winsorized":
            return f"winsorized({self.param})"
        if self.kind == "error_based":
            return f"error_based({self.param})"
        return self.kind

    @property
    def needs_fit(self) -> bool:
        return self.kind in ("trimmed", "error_based", "variance_based")


def simple_average():
    return LinearCombinerSpec("simple_average")


def trimmed(k_percent: float = 20.0):
    return LinearCombinerSpec("trimmed", float(k_percent))


def winsorized(i: int = 1):
    return LinearCombinerSpec("winsorized", int(i))


def median():
    return LinearCombinerSpec("median")


def error_based(metric: str = "mape"):
    return LinearCombinerSpec("error_based", metric)


def variance_based():
    return LinearCombinerSpec("variance_based")


def winsorize_rows(values: np.ndarray, i: int) -> np.ndarray:
    """Replace the ``i`` smallest and ``i`` largest entries of every row by their neighbours."""
    n = values.shape[1]
    if i >= n // 2 + 1:
        raise ConfigError(f"cannot winsorize {i} values per side among {n} forecasts")
    s = np.sort(values, axis=1)
    if i == 0:
        return s
    out = s.copy()
    out[:, :i] = s[:, [i]]
    out[:, n - i:] = s[:, [n - i - 1]]
    return out


def error_based_weights(validation_reports: Sequence[ErrorReport], metric: str = "mape") -> np.ndarray:
    """Weights proportional to the inverse validation error, summing to one."""
    errs = np.array([getattr(r, metric) for r in validation_reports], dtype=float)
    if errs.size == 0:
        raise SizeError("no validation reports given")
    zero = np.flatnonzero(errs == 0.0)
    if zero.size:
        raise PerfectModelError(f"model {zero[0]} has zero validation {metric}",
                                model_index=int(zero[0]))
    if np.any(errs < 0) or not np.all(np.isfinite(errs)):
        raise ValueError(f"validation {metric} values must be positive and finite")
    inv = 1.0 / errs
    return inv / inv.sum()


def variance_based_weights(forecasts: ForecastSet, actuals) -> tuple:
    """Least squares of ``actuals`` on ``[1 | forecasts]``: returns (intercept, weights)."""
    y = np.asarray(actuals, dtype=float).ravel()
    if y.size != len(forecasts):
        raise SizeError("actuals and forecasts differ in length")
    F = np.column_stack([np.ones(len(forecasts)), forecasts.values])
    beta, _, rank, sv = np.linalg.lstsq(F, y, rcond=None)
    if rank < F.shape[1] or sv[-1] <= sv[0] * 1e-13:
        raise SingularityError("forecast columns are collinear; F'F is singular")
    return float(beta[0]), beta[1:]


def fit_linear_combiner(spec: LinearCombinerSpec, forecasts: ForecastSet, actuals,
                        validation_reports: Optional[Sequence[ErrorReport]] = None,
                        arv: str = "paper") -> LinearCombinerSpec:
    """Learn the validation-dependent parts of ``spec`` (exclusions or weights)."""
    names = forecasts.names
    if not spec.needs_fit:
        return replace(spec, names=names)
    if spec.kind == "variance_based":
        c, w = variance_based_weights(forecasts, actuals)
        return replace(spec, weights=w, intercept=c, names=names)
    if validation_reports is None:
        validation_reports = [evaluate(actuals, forecasts.values[:, i], arv=arv)
                              for i in range(forecasts.n_models)]
    if spec.kind == "error_based":
        return replace(spec, weights=error_based_weights(validation_reports, spec.param),
                       names=names)
    # trimmed: drop the worst floor(k% * n) models by validation MAPE
    n = forecasts.n_models
    n_drop = int(np.floor(float(spec.param) / 100.0 * n))
    if n_drop >= n:
        raise ConfigError("trimming would exclude every model")
    mape = np.array([r.mape for r in validation_reports])
    worst = np.argsort(-mape, kind="stable")[:n_drop]
    return replace(spec, excluded=tuple(names[i] for i in sorted(worst)), names=names)


def combine_pointwise(forecasts: ForecastSet, spec: LinearCombinerSpec) -> np.ndarray:
    """Combined forecast at every time index."""
    F = forecasts.values
    if spec.names and tuple(spec.names) != forecasts.names:
        F = forecasts.reorder(spec.names).values
    kind = spec.kind
    if kind == "simple_average":
        return F.mean(axis=1)
    if kind == "median":
        return np.median(F, axis=1)
    if kind == "winsorized":
        return winsorize_rows(F, int(spec.param)).mean(axis=1)
    if kind == "trimmed":
        names = spec.names or forecasts.names
        keep = [i for i, n in enumerate(names) if n not in spec.excluded]
        if not keep:
            raise ConfigError("trimming excluded every model")
        return F[:, keep].mean(axis=1)
    if spec.weights is None:
        raise ConfigError(f"{spec.label} combiner has not been fitted")
    return spec.intercept + F @ spec.weights
