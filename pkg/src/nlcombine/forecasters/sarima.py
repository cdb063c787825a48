"""Multiplicative seasonal MA model on a doubly differenced series.

Only the airline configuration ``(0, 1, 1) x (0, 1, 1)_s`` is supported:

    w_t = (1 - L)(1 - L^s) y_t
    w_t = e_t + theta * e_{t-1} + Theta * e_{t-s} + theta * Theta * e_{t-s-1}
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from ..errors import ConfigError, OptimizationError, SizeError
from ..timeseries import Difference, TimeSeries, difference_values
from .base import Forecaster

INVERTIBILITY_BOUND = 0.999


def _ma_polynomial(theta: float, seasonal_theta: float, period: int) -> np.ndarray:
    a = np.zeros(period + 2)
    a[0] = 1.0
    a[1] = theta
    a[period] += seasonal_theta
    a[period + 1] += theta * seasonal_theta
    return a


def innovations(w: np.ndarray, theta: float, seasonal_theta: float, period: int) -> np.ndarray:
    """Residuals of the MA recursion with pre-sample innovations set to zero."""
    return lfilter([1.0], _ma_polynomial(theta, seasonal_theta, period), np.asarray(w, float))


def simulate_airline(n: int, theta: float, seasonal_theta: float, period: int = 12,
                     sigma: float = 1.0, seed: int = 0, level: float = 0.0) -> np.ndarray:
    """Draw ``n`` observations from the airline model (starting values all ``level``)."""
    rng = np.random.default_rng(seed)
    span = 1 + period
    e = rng.normal(0.0, sigma, size=n - span + period + 1)
    a = _ma_polynomial(theta, seasonal_theta, period)
    w = np.convolve(e, a)[period + 1: period + 1 + n - span]
    y = np.full(n, level, dtype=float)
    for t in range(span, n):
        y[t] = w[t - span] + y[t - 1] + y[t - period] - y[t - period - 1]
    return y


@dataclass(frozen=True)
class SarimaModel(Forecaster):
    theta: float
    seasonal_theta: float
    period: int
    sigma2: float
    difference: Difference
    at_boundary: bool = False
    css: float = float("nan")

    order = (0, 1, 1)
    seasonal_order = (0, 1, 1)

    @property
    def min_history(self):
        return 1

    def predict_next(self, z):
        e = innovations(z, self.theta, self.seasonal_theta, self.period)
        s = self.period

        def lag(k):
            return e[-k] if k <= len(e) else 0.0

        return float(self.theta * lag(1) + self.seasonal_theta * lag(s)
                     + self.theta * self.seasonal_theta * lag(s + 1))

    def params(self):
        return {"order": "(0, 1, 1)", "seasonal_order": f"(0, 1, 1)_{self.period}",
                "theta": self.theta, "seasonal_theta": self.seasonal_theta,
                "sigma2": self.sigma2, "css": self.css, "at_boundary": self.at_boundary}


def fit_sarima(train: TimeSeries, order=(0, 1, 1), seasonal_order=(0, 1, 1),
               period=None) -> SarimaModel:
    """Conditional-sum-of-squares fit by bounded Nelder-Mead from (0.1, 0.1)."""
    period = period or train.period
    if tuple(order) != (0, 1, 1) or tuple(seasonal_order) != (0, 1, 1):
        raise ConfigError("only the (0,1,1)x(0,1,1)_s configuration is supported")
    if period is None or period < 2:
        raise ConfigError("a seasonal period >= 2 is required")
    if len(train) <= 2 * period + 2:
        raise SizeError(f"need more than {2 * period + 2} observations, got {len(train)}")

    diff = Difference(1, 1, period)
    w = difference_values(train.values, diff)

    def css(params):
        e = innovations(w, params[0], params[1], period)
        return float(e @ e)

    b = INVERTIBILITY_BOUND
    res = minimize(css, x0=[0.1, 0.1], method="Nelder-Mead", bounds=[(-b, b), (-b, b)],
                   options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000})
    if not np.all(np.isfinite(res.x)) or not np.isfinite(res.fun):
        raise OptimizationError(f"SARIMA CSS diverged: {res.message}")
    if not res.success:
        raise OptimizationError(f"SARIMA CSS did not converge: {res.message}")
    theta, seasonal_theta = (float(v) for v in res.x)
    at_boundary = max(abs(theta), abs(seasonal_theta)) >= b - 1e-6
    return SarimaModel(theta=theta, seasonal_theta=seasonal_theta, period=period,
                       sigma2=float(res.fun) / len(w), difference=diff,
                       at_boundary=at_boundary, css=float(res.fun))
