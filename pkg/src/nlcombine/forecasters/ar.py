from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import SingularityError, SizeError
from ..timeseries import Difference, TimeSeries
from .base import Forecaster, lag_windows, model_scale


@dataclass(frozen=True)
class ArModel(Forecaster):
    """AR(p) with intercept: ``y_t = c + sum_i phi_i * y_{t-i} + e_t``."""

    order: int
    intercept: float
    coefs: np.ndarray
    sigma2: float = 0.0
    difference: Optional[Difference] = None

    def __post_init__(self):
        coefs = np.asarray(self.coefs, dtype=float).ravel()
        if coefs.size != self.order:
            raise ValueError(f"AR({self.order}) needs {self.order} coefficients, got {coefs.size}")
        if not np.all(np.isfinite(coefs)) or not np.isfinite(self.intercept):
            raise ValueError("AR coefficients must be finite")
        object.__setattr__(self, "coefs", coefs)

    @property
    def min_history(self):
        return self.order

    def predict_next(self, z):
        lagged = np.asarray(z[-self.order:], dtype=float)[::-1]
        return float(self.intercept + self.coefs @ lagged)

    def params(self):
        return {"order": self.order, "intercept": self.intercept,
                "coefs": self.coefs, "sigma2": self.sigma2}


def ar_design(z: np.ndarray, p: int):
    """Regressor matrix ``[1, y_{t-1}, ..., y_{t-p}]`` and targets ``y_t``."""
    X, Y, _ = lag_windows(z, p)
    return np.column_stack([np.ones(len(X)), X[:, ::-1]]), Y[:, 0]


def fit_ar(train: TimeSeries, p: int, difference: Optional[Difference] = None) -> ArModel:
    """Conditional least squares AR(p) fit with intercept."""
    if p < 1:
        raise ValueError("AR order must be positive")
    z = model_scale(train.values, difference)
    if len(z) <= p + 1:
        raise SizeError(f"AR({p}) needs more than {p + 1} observations, got {len(z)}")
    X, y = ar_design(z, p)
    beta, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1] or sv[-1] <= sv[0] * 1e-12:
        raise SingularityError(f"AR({p}) normal equations are singular (rank {rank})")
    resid = y - X @ beta
    return ArModel(order=p, intercept=float(beta[0]), coefs=beta[1:],
                   sigma2=float(resid @ resid / len(resid)), difference=difference)
