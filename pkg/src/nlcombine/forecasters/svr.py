"""epsilon-insensitive support vector regression with an RBF kernel.

The dual is solved by sequential pairwise (SMO-type) optimisation with
second-order working-set selection, on the 2l-variable form

    min  1/2 beta' Q beta + p' beta
    s.t. s' beta = 0,  0 <= beta <= C

where ``beta = [alpha; alpha*]``, ``s = [+1; -1]``, ``p = [eps - y; eps + y]``
and ``Q_ab = s_a s_b K(x_a, x_b)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import OptimizationError, SizeError
from ..timeseries import Difference, TimeSeries
from .base import Forecaster, MinMaxScaler, lag_windows, model_scale
from .config import TrainingConfig

TAU = 1e-12


def rbf_kernel(A, B, sigma: float):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d2 = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T)
    return np.exp(-np.maximum(d2, 0.0) / (2.0 * sigma * sigma))


@dataclass(frozen=True)
class SvrSolution:
    coef: np.ndarray      # alpha - alpha*, one per training row
    bias: float
    iterations: int
    gap: float


def solve_svr_dual(K, y, C: float, eps: float, tol: float = 1e-3,
                   max_iter: Optional[int] = None) -> SvrSolution:
    """SMO for the epsilon-SVR dual given a precomputed kernel matrix."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if max_iter is None:
        max_iter = 100_000 * n
    s = np.concatenate([np.ones(n), -np.ones(n)])
    idx = np.concatenate([np.arange(n), np.arange(n)])
    diagK = np.diag(K)
    QD = diagK[idx]
    beta = np.zeros(2 * n)
    G = np.concatenate([eps - y, eps + y])

    it = 0
    gap = np.inf
    while it < max_iter:
        # I_up: can move up along s;  I_low: can move down
        up = ((s > 0) & (beta < C)) | ((s < 0) & (beta > 0))
        low = ((s > 0) & (beta > 0)) | ((s < 0) & (beta < C))
        score = -s * G
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        Gmax = score[i]
        Gmin = score[low].min()
        gap = Gmax - Gmin
        if gap < tol:
            break

        Ki = K[idx[i]][idx]
        b = Gmax - score
        # s_i s_t Q_it = K_it, so a = K_ii + K_tt - 2 K_it for every candidate t
        a = QD[i] + QD - 2.0 * Ki
        a = np.where(a > 0, a, TAU)
        cand = low & (b > 0)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        if not np.isfinite(obj[j]):
            gap = 0.0
            break

        Qij = s[i] * s[j] * K[idx[i], idx[j]]
        old_i, old_j = beta[i], beta[j]
        if s[i] != s[j]:
            quad = max(QD[i] + QD[j] + 2.0 * Qij, TAU)
            delta = (-G[i] - G[j]) / quad
            diff = beta[i] - beta[j]
            beta[i] += delta
            beta[j] += delta
            if diff > 0:
                if beta[j] < 0:
                    beta[j] = 0.0
                    beta[i] = diff
            elif beta[i] < 0:
                beta[i] = 0.0
                beta[j] = -diff
            if diff > 0:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = C - diff
            elif beta[j] > C:
                beta[j] = C
                beta[i] = C + diff
        else:
            quad = max(QD[i] + QD[j] - 2.0 * Qij, TAU)
            delta = (G[i] - G[j]) / quad
            total = beta[i] + beta[j]
            beta[i] -= delta
            beta[j] += delta
            if total > C:
                if beta[i] > C:
                    beta[i] = C
                    beta[j] = total - C
            elif beta[j] < 0:
                beta[j] = 0.0
                beta[i] = total
            if total > C:
                if beta[j] > C:
                    beta[j] = C
                    beta[i] = total - C
            elif beta[i] < 0:
                beta[i] = 0.0
                beta[j] = total

        di, dj = beta[i] - old_i, beta[j] - old_j
        Kj = K[idx[j]][idx]
        G += s * (s[i] * di * Ki + s[j] * dj * Kj)
        it += 1
    else:
        raise OptimizationError(f"SVR dual did not reach KKT tolerance {tol} "
                                f"within {max_iter} iterations (gap {gap:.3g})")

    coef = beta[:n] - beta[n:]
    free = (beta > 0) & (beta < C)
    yG = s * G
    if free.any():
        rho = float(yG[free].mean())
    else:
        up = ((s > 0) & (beta < C)) | ((s < 0) & (beta > 0))
        low = ((s > 0) & (beta > 0)) | ((s < 0) & (beta < C))
        ub = yG[up].min() if up.any() else np.inf
        lb = yG[low].max() if low.any() else -np.inf
        rho = float((ub + lb) / 2.0) if np.isfinite(ub) and np.isfinite(lb) else 0.0
    return SvrSolution(coef=coef, bias=-rho, iterations=it, gap=float(gap))


@dataclass(frozen=True)
class SvrModel(Forecaster):
    """Fitted SVR: ``f(x) = sum_i coef_i K(x, sv_i) + bias`` on scaled data."""

    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    sigma: float
    C: float
    epsilon: float
    scaler: Optional[MinMaxScaler] = None
    difference: Optional[Difference] = None
    iterations: int = 0

    def __post_init__(self):
        sv = np.atleast_2d(np.asarray(self.support_vectors, dtype=float))
        coef = np.asarray(self.dual_coef, dtype=float).ravel()
        if sv.shape[0] != coef.size:
            raise ValueError("one dual coefficient per support vector is required")
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coef", coef)

    @property
    def lags(self):
        return self.support_vectors.shape[1]

    @property
    def min_history(self):
        return self.lags

    def decision_function(self, X):
        """Kernel expansion evaluated on already-scaled inputs."""
        if self.dual_coef.size == 0:
            return np.full(np.atleast_2d(X).shape[0], self.bias)
        return rbf_kernel(X, self.support_vectors, self.sigma) @ self.dual_coef + self.bias

    def predict_next(self, z):
        x = np.asarray(z, dtype=float)[-self.lags:]
        if self.scaler is None:
            return float(self.decision_function(x)[0])
        return float(self.scaler.inverse(self.decision_function(self.scaler.transform(x)))[0])

    def params(self):
        out = {"C": self.C, "sigma": self.sigma, "epsilon": self.epsilon, "bias": self.bias,
               "n_support": self.dual_coef.size, "dual_coef": self.dual_coef}
        if self.scaler is not None:
            out.update(scale_lo=self.scaler.lo, scale_hi=self.scaler.hi)
        for k, row in enumerate(self.support_vectors):
            out[f"sv[{k}]"] = row
        return out


def fit_svr_xy(X, y, C: float, sigma: float, eps: float, tol: float = 1e-3,
               max_iter: Optional[int] = None, scaler: Optional[MinMaxScaler] = None,
               difference: Optional[Difference] = None) -> SvrModel:
    """Fit on explicit (already scaled) inputs ``X`` and targets ``y``."""
    if C <= 0 or sigma <= 0 or eps < 0:
        raise ValueError(f"invalid SVR hyperparameters C={C}, sigma={sigma}, eps={eps}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sol = solve_svr_dual(rbf_kernel(X, X, sigma), y, C, eps, tol, max_iter)
    keep = sol.coef != 0.0
    return SvrModel(support_vectors=X[keep], dual_coef=sol.coef[keep], bias=sol.bias,
                    sigma=sigma, C=C, epsilon=eps, scaler=scaler, difference=difference,
                    iterations=sol.iterations)


def svr_windows(train: TimeSeries, lags: int, difference: Optional[Difference] = None):
    z = model_scale(train.values, difference)
    if len(z) <= lags:
        raise SizeError(f"SVR with {lags} lags needs more than {lags} observations")
    scaler = MinMaxScaler.fit(z)
    X, Y, _ = lag_windows(scaler.transform(z), lags)
    return X, Y[:, 0], scaler


def fit_svr(train: TimeSeries, hyper: Tuple[float, float, float], cfg: TrainingConfig,
            difference: Optional[Difference] = None) -> SvrModel:
    """Fit on lag windows of the min-max scaled training series; ``hyper = (C, sigma, eps)``."""
    C, sigma, eps = hyper
    X, y, scaler = svr_windows(train, cfg.lags, difference)
    return fit_svr_xy(X, y, C, sigma, eps, tol=cfg.kkt_tol,
                      max_iter=cfg.max_iter_per_sample * len(y),
                      scaler=scaler, difference=difference)
