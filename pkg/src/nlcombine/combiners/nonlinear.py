"""Weighted nonlinear ensemble: individual forecasts plus pairwise cross terms.

For models ``i = 1..n`` the combined forecast at time ``k`` is

    yc_k = w0 + sum_i w_i * f_k(i) + sum_{(i,j)} theta_ij * v_k(i) * v_k(j)
    v_k(i) = (f_k(i) - mu(i)) / sigma(i)^2

with one ``theta`` per unordered model pair.  Writing ``F = [1 | f]`` and
``G`` for the matrix of cross products, minimising the SSE leads to the
block normal equations

    V w + Z theta = b,    Z' w + U theta = d
    V = F'F,  Z = F'G,  U = G'G,  b = F'y,  d = G'y

which are solved through the Schur complement ``S = U - Z' V^-1 Z``:

    theta = S^-1 (d - Z' V^-1 b),    w = V^-1 (b - Z theta)
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Optional

import numpy as np

from ..errors import AlignmentError, DegenerateForecastError, SingularityError, SizeError
from .forecast_set import ForecastSet

# equilibrated condition number above which a block counts as singular
COND_LIMIT = 1e12
REFINEMENT_STEPS = 2


def model_pairs(n: int):
    """Index pairs for the cross terms: cyclic (1,2), (2,3), (3,1) for three models."""
    if n == 3:
        return [(0, 1), (1, 2), (2, 0)]
    return list(combinations(range(n), 2))


def standardization_stats(forecasts: ForecastSet):
    """Per-model mean and (population) variance of the forecast columns."""
    F = forecasts.values
    return F.mean(axis=0), F.var(axis=0)


def standardize(values: np.ndarray, means, variances, mode: str = "variance") -> np.ndarray:
    variances = np.asarray(variances, dtype=float)
    if np.any(variances <= 0):
        bad = int(np.flatnonzero(variances <= 0)[0])
        raise DegenerateForecastError(f"forecast column {bad} has zero variance")
    if mode == "variance":
        scale = variances
    elif mode == "stddev":
        scale = np.sqrt(variances)
    else:
        raise ValueError(f"unknown standardization {mode!r}")
    return (values - np.asarray(means, dtype=float)) / scale


@dataclass(frozen=True)
class DesignMatrices:
    F: np.ndarray       # N x (n+1): ones, then raw forecasts
    G: np.ndarray       # N x C(n,2): products of standardized forecasts
    pairs: tuple


def build_design_matrices(forecasts: ForecastSet, means, variances,
                          mode: str = "variance") -> DesignMatrices:
    Y = forecasts.values
    v = standardize(Y, means, variances, mode)
    pairs = tuple(model_pairs(forecasts.n_models))
    F = np.column_stack([np.ones(len(Y)), Y])
    G = np.column_stack([v[:, i] * v[:, j] for i, j in pairs])
    return DesignMatrices(F=F, G=G, pairs=pairs)


def _equilibrated_solve(M: np.ndarray, rhs: np.ndarray, label: str) -> np.ndarray:
    """Solve ``M x = rhs`` for symmetric ``M`` after symmetric diagonal scaling."""
    diag = np.diag(M)
    if np.any(diag <= 0) or not np.all(np.isfinite(M)):
        raise SingularityError(f"{label} is singular (nonpositive diagonal)")
    scale = 1.0 / np.sqrt(diag)
    Ms = M * scale[:, None] * scale[None, :]
    if np.linalg.cond(Ms) > COND_LIMIT:
        raise SingularityError(
            f"{label} is singular to working precision; optimal weights exist only "
            "if V and U - Z'V^-1 Z are invertible")
    rhs_s = rhs * (scale[:, None] if rhs.ndim == 2 else scale)
    x = np.linalg.solve(Ms, rhs_s)
    return x * (scale[:, None] if x.ndim == 2 else scale)


def schur_solve(V, Z, U, b, d, ridge: float = 0.0):
    """Solve the block system through the Schur complement of ``V``.

    ``ridge`` is relative: ``ridge * mean(diag(M))`` is added to the
    diagonal of both inverted blocks ``V`` and ``S``.
    """
    if ridge:
        V = V + ridge * np.trace(V) / len(V) * np.eye(len(V))
    VinvZ = _equilibrated_solve(V, Z, "V = F'F")
    Vinvb = _equilibrated_solve(V, b, "V = F'F")
    S = U - Z.T @ VinvZ
    S = 0.5 * (S + S.T)
    if ridge:
        S = S + ridge * np.trace(S) / len(S) * np.eye(len(S))
    theta = _equilibrated_solve(S, d - Z.T @ Vinvb, "Schur complement U - Z'V^-1 Z")
    w = Vinvb - VinvZ @ theta
    return w, theta


@dataclass(frozen=True)
class NonlinearEnsembleWeights:
    names: tuple
    intercept: float
    linear: np.ndarray
    theta: np.ndarray
    pairs: tuple
    means: np.ndarray
    variances: np.ndarray
    standardization: str = "variance"
    validation_sse: float = float("nan")
    residual_norm: float = float("nan")
    ridge: float = 0.0
    ridge_applied: bool = False

    def __post_init__(self):
        for attr in ("linear", "theta", "means", "variances"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float))
        if not (np.isfinite(self.intercept) and np.all(np.isfinite(self.linear))
                and np.all(np.isfinite(self.theta))):
            raise ValueError("ensemble weights must be finite")
        if np.any(self.variances <= 0):
            raise DegenerateForecastError("frozen variances must be positive")

    @property
    def vector(self) -> np.ndarray:
        """``[w0, w1..wn, theta...]`` in design-matrix column order."""
        return np.concatenate([[self.intercept], self.linear, self.theta])

    def pair_names(self):
        return [(self.names[i], self.names[j]) for i, j in self.pairs]

    def theta_by_pair(self) -> dict:
        return {frozenset(p): float(t) for p, t in zip(self.pair_names(), self.theta)}

    def to_text(self) -> str:
        """Plain-text ``key = value`` dump of weights, frozen statistics and diagnostics."""
        lines = ["combiner = nonlinear_ensemble",
                 f"models = {', '.join(self.names)}",
                 f"standardization = {self.standardization}",
                 f"w0 = {self.intercept!r}"]
        for name, w in zip(self.names, self.linear):
            lines.append(f"w[{name}] = {float(w)!r}")
        for (a, b), t in zip(self.pair_names(), self.theta):
            lines.append(f"theta[{a}*{b}] = {float(t)!r}")
        for name, m, v in zip(self.names, self.means, self.variances):
            lines.append(f"mean[{name}] = {float(m)!r}")
            lines.append(f"variance[{name}] = {float(v)!r}")
        lines += [f"validation_sse = {self.validation_sse!r}",
                  f"residual_norm = {self.residual_norm!r}",
                  f"ridge = {self.ridge!r}",
                  f"ridge_applied = {self.ridge_applied}"]
        return "\n".join(lines) + "\n"


def _design_for(weights: NonlinearEnsembleWeights, forecasts: ForecastSet, stats: str):
    if stats == "frozen":
        means, variances = weights.means, weights.variances
    elif stats == "recompute":
        means, variances = standardization_stats(forecasts)
    else:
        raise ValueError(f"unknown stats mode {stats!r}")
    return build_design_matrices(forecasts, means, variances, weights.standardization)


def fit_nonlinear_ensemble(val_forecasts: ForecastSet, val_actuals,
                           ridge: Optional[float] = None,
                           standardization: str = "variance") -> NonlinearEnsembleWeights:
    """Closed-form SSE-minimising weights on the validation window.

    Singular systems raise :class:`SingularityError` unless ``ridge > 0``,
    in which case the regularised solve is used and ``ridge_applied`` set.
    """
    y = np.asarray(val_actuals, dtype=float).ravel()
    N, n = val_forecasts.values.shape
    if y.size != N:
        raise SizeError(f"{y.size} actuals for {N} forecast rows")
    n_weights = n + 1 + comb(n, 2)
    if N < n_weights:
        raise SizeError(f"{n_weights} weights need at least {n_weights} validation points, got {N}")

    means, variances = standardization_stats(val_forecasts)
    dm = build_design_matrices(val_forecasts, means, variances, standardization)
    F, G = dm.F, dm.G
    V, Z, U = F.T @ F, F.T @ G, G.T @ G
    b, d = F.T @ y, G.T @ y

    ridge_applied = False
    try:
        w, theta = schur_solve(V, Z, U, b, d)
        for _ in range(REFINEMENT_STEPS):
            r = y - F @ w - G @ theta
            dw, dt = schur_solve(V, Z, U, F.T @ r, G.T @ r)
            w, theta = w + dw, theta + dt
    except SingularityError:
        if not ridge:
            raise
        w, theta = schur_solve(V, Z, U, b, d, ridge=ridge)
        ridge_applied = True

    resid = y - F @ w - G @ theta
    residual_norm = float(np.max(np.abs(np.concatenate([F.T @ resid, G.T @ resid]))))
    return NonlinearEnsembleWeights(
        names=val_forecasts.names, intercept=float(w[0]), linear=w[1:], theta=theta,
        pairs=dm.pairs, means=means, variances=variances, standardization=standardization,
        validation_sse=float(resid @ resid), residual_norm=residual_norm,
        ridge=float(ridge or 0.0), ridge_applied=ridge_applied)


def predict_nonlinear(weights: NonlinearEnsembleWeights, forecasts: ForecastSet,
                      stats: str = "frozen") -> np.ndarray:
    """Combined forecast; ``stats="recompute"`` standardizes with the new columns' own statistics."""
    if forecasts.names != weights.names:
        if sorted(forecasts.names) != sorted(weights.names):
            raise AlignmentError(
                f"ensemble fitted on {weights.names}, got forecasts from {forecasts.names}")
        forecasts = forecasts.reorder(weights.names)
    dm = _design_for(weights, forecasts, stats)
    return dm.F @ np.concatenate([[weights.intercept], weights.linear]) + dm.G @ weights.theta


def sse_gradient(weights: NonlinearEnsembleWeights, forecasts: ForecastSet, actuals,
                 stats: str = "frozen") -> np.ndarray:
    """Partial derivatives of the SSE with respect to ``[w0, w1..wn, theta...]``."""
    forecasts = forecasts.reorder(weights.names)
    dm = _design_for(weights, forecasts, stats)
    r = np.asarray(actuals, dtype=float) - predict_nonlinear(weights, forecasts, stats)
    return -2.0 * np.concatenate([dm.F.T @ r, dm.G.T @ r])


def sse(actuals, combined) -> float:
    r = np.asarray(actuals, dtype=float) - np.asarray(combined, dtype=float)
    return float(r @ r)
