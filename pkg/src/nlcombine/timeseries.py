"""Series container, chronological splitting, value transforms and error metrics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import lfilter, lfiltic

from .errors import DomainError, ParseError, SizeError


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Log10:
    """Base-10 logarithm of every observation."""

    def __str__(self):
        return "log10"


@dataclass(frozen=True)
class Difference:
    """Regular differencing of order ``d`` combined with seasonal order ``D``.

    The operator is ``(1 - L)^d (1 - L^period)^D``; it consumes
    ``d + D * period`` leading observations.
    """

    d: int = 1
    D: int = 0
    period: Optional[int] = None

    def __post_init__(self):
        if self.d < 0 or self.D < 0:
            raise ValueError("differencing orders must be nonnegative")
        if self.D > 0 and (self.period is None or self.period < 2):
            raise ValueError("seasonal differencing needs a period >= 2")

    @property
    def span(self) -> int:
        return self.d + self.D * (self.period or 0)

    def polynomial(self) -> np.ndarray:
        """Coefficients ``c`` with ``c[k]`` multiplying ``y[t-k]``; ``c[0] == 1``."""
        c = np.array([1.0])
        for _ in range(self.d):
            c = np.convolve(c, [1.0, -1.0])
        if self.D:
            seasonal = np.zeros(self.period + 1)
            seasonal[0], seasonal[-1] = 1.0, -1.0
            for _ in range(self.D):
                c = np.convolve(c, seasonal)
        return c

    def __str__(self):
        if self.D:
            return f"diff(d={self.d},D={self.D},s={self.period})"
        return f"diff(d={self.d})"


Transform = Union[Log10, Difference]


def difference_values(values: np.ndarray, diff: Difference) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if len(values) <= diff.span:
        raise SizeError(
            f"series of length {len(values)} too short for {diff} (needs > {diff.span})")
    return np.convolve(values, diff.polynomial(), mode="valid")


def undifference_values(diffed: np.ndarray, diff: Difference, anchor: np.ndarray) -> np.ndarray:
    """Integrate ``diffed`` back given the ``span`` observations that precede it."""
    m = diff.span
    if m == 0:
        return np.asarray(diffed, dtype=float).copy()
    anchor = np.asarray(anchor, dtype=float)
    if len(anchor) < m:
        raise SizeError(f"{diff} inversion needs {m} anchor values, got {len(anchor)}")
    c = diff.polynomial()
    zi = lfiltic([1.0], c, y=anchor[-m:][::-1])
    out, _ = lfilter([1.0], c, np.asarray(diffed, dtype=float), zi=zi)
    return out


def next_from_difference(diff_value: float, diff: Difference, past: np.ndarray) -> float:
    """Level value at ``t`` from a differenced value at ``t`` and the levels before ``t``."""
    c = diff.polynomial()
    m = len(c) - 1
    if m == 0:
        return float(diff_value)
    if len(past) < m:
        raise SizeError(f"need {m} past observations to undo {diff}")
    lagged = np.asarray(past[-m:], dtype=float)[::-1]
    return float(diff_value - c[1:] @ lagged)


# ---------------------------------------------------------------------------
# series container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeSeries:
    """Ordered finite observations with an optional seasonal period.

    ``transform_log`` records the transforms applied since the original
    observations, oldest first.
    """

    values: np.ndarray
    name: str = "series"
    period: Optional[int] = None
    transform_log: tuple = field(default_factory=tuple)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).ravel()
        if arr.size == 0:
            raise SizeError("a time series needs at least one observation")
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"series {self.name!r} contains non-finite values")
        if self.period is not None and not (2 <= self.period < arr.size):
            raise ValueError(
                f"period {self.period} must be >= 2 and < series length {arr.size}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "transform_log", tuple(self.transform_log))

    def __len__(self):
        return self.values.size

    def with_values(self, values, transform_log=None) -> "TimeSeries":
        values = np.asarray(values, dtype=float)
        period = self.period if self.period is not None and self.period < values.size else None
        log = self.transform_log if transform_log is None else transform_log
        return replace(self, values=values, period=period, transform_log=log)


def read_series_csv(path, name: Optional[str] = None, period: Optional[int] = None) -> TimeSeries:
    """Read one observation per line; an optional single header line is allowed."""
    path = Path(path)
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                if lineno == 1 and not values:
                    continue  # header
                raise ParseError(f"not a number: {text!r}", path=path, line=lineno) from None
    if not values:
        raise ParseError("no observations found", path=path)
    return TimeSeries(np.array(values), name=name or path.stem, period=period)


# ---------------------------------------------------------------------------
# transforms on series
# ---------------------------------------------------------------------------

def apply_transform(series: TimeSeries, kind: Transform) -> TimeSeries:
    """Apply ``kind`` and append it to the series' transform log."""
    if isinstance(kind, Log10):
        if np.any(series.values <= 0):
            raise DomainError(f"log10 of nonpositive value in series {series.name!r}")
        out = np.log10(series.values)
    elif isinstance(kind, Difference):
        out = difference_values(series.values, kind)
    else:
        raise TypeError(f"unknown transform {kind!r}")
    return series.with_values(out, series.transform_log + (kind,))


def invert_transform(series: TimeSeries, anchor: Optional[TimeSeries] = None) -> TimeSeries:
    """Undo every recorded transform.

    ``anchor`` holds the original-unit observations immediately preceding the
    first observation that ``series`` was derived from; differencing steps
    consume its tail.  The result is aligned with ``series``.
    """
    log = series.transform_log
    if not log:
        raise ValueError(f"series {series.name!r} has no transforms to invert")

    anchor_vals = np.array([]) if anchor is None else np.asarray(anchor.values, dtype=float)
    levels = [anchor_vals]
    for kind in log[:-1]:
        prev = levels[-1]
        if isinstance(kind, Log10):
            if np.any(prev <= 0):
                raise DomainError("anchor holds nonpositive values under log10")
            levels.append(np.log10(prev))
        elif len(prev) > kind.span:
            levels.append(difference_values(prev, kind))
        else:
            levels.append(np.array([]))

    cur = np.asarray(series.values, dtype=float)
    for kind, level_anchor in zip(reversed(log), reversed(levels)):
        if isinstance(kind, Log10):
            cur = np.power(10.0, cur)
        else:
            cur = undifference_values(cur, kind, level_anchor)
    return series.with_values(cur, transform_log=())


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    """Chronological train / validation / test lengths; validation and test are equal."""

    train_len: int
    validation_len: int
    test_len: int

    def __post_init__(self):
        for label in ("train_len", "validation_len", "test_len"):
            if getattr(self, label) < 1:
                raise SizeError(f"{label} must be positive")
        if self.validation_len != self.test_len:
            raise SizeError(
                f"validation_len ({self.validation_len}) must equal test_len ({self.test_len})")

    @property
    def total(self) -> int:
        return self.train_len + self.validation_len + self.test_len

    @classmethod
    def from_test_len(cls, total: int, test_len: int) -> "SplitSpec":
        return cls(total - 2 * test_len, test_len, test_len)


def split(series: TimeSeries, spec: SplitSpec):
    """Return (train, validation, test); the test window is the final ``test_len`` points."""
    if len(series) != spec.total:
        raise SizeError(
            f"split sizes sum to {spec.total} but series {series.name!r} has {len(series)}")
    v = series.values
    a = spec.train_len
    b = a + spec.validation_len
    return (series.with_values(v[:a]),
            series.with_values(v[a:b]),
            series.with_values(v[b:]))


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorReport:
    mape: float
    mse: float
    arv: float

    def as_dict(self):
        return {"MAPE": self.mape, "MSE": self.mse, "ARV": self.arv}


def evaluate(actual: Sequence[float], forecast: Sequence[float], arv: str = "paper") -> ErrorReport:
    """MAPE (percent), MSE and ARV of ``forecast`` against ``actual``.

    ``arv="paper"`` divides by ``sum((mu - forecast)^2)``; ``arv="conventional"``
    divides by ``sum((actual - mu)^2)``.  ``mu`` is the mean of ``actual``.
    """
    y = np.asarray(actual, dtype=float).ravel()
    f = np.asarray(forecast, dtype=float).ravel()
    if y.size == 0 or y.size != f.size:
        raise SizeError(f"actual ({y.size}) and forecast ({f.size}) need equal nonzero lengths")
    if np.any(y == 0):
        raise DomainError("MAPE undefined: actual series contains a zero")
    err = y - f
    sse = float(err @ err)
    mu = y.mean()
    if arv == "paper":
        denom = float(np.sum((mu - f) ** 2))
    elif arv == "conventional":
        denom = float(np.sum((y - mu) ** 2))
    else:
        raise ValueError(f"unknown ARV variant {arv!r}")
    if denom == 0.0:
        raise DomainError("ARV undefined: zero denominator")
    mape = float(np.mean(np.abs(err / y)) * 100.0)
    return ErrorReport(mape=mape, mse=sse / y.size, arv=sse / denom)
