"""Grid search over hyperparameters with contiguous (chronological) folds."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import ConfigError, SizeError
from ..timeseries import Difference, TimeSeries
from .base import MinMaxScaler, lag_windows, model_scale
from .config import TrainingConfig
from .mlp import Layout, forward, train_windows
from .svr import fit_svr_xy, svr_windows


def chronological_folds(n: int, k: int):
    """Split ``range(n)`` into ``k`` contiguous blocks of near-equal size."""
    if k < 2 or n < k:
        raise SizeError(f"cannot form {k} folds from {n} windows")
    return np.array_split(np.arange(n), k)


def _cv_mse(X, Y, k, fit_predict):
    scores = []
    for held in chronological_folds(len(X), k):
        mask = np.ones(len(X), dtype=bool)
        mask[held] = False
        pred = fit_predict(X[mask], Y[mask], X[held])
        scores.append(float(np.mean((pred - Y[held]) ** 2)))
    return float(np.mean(scores))


def cv_scores(family: str, train: TimeSeries, cfg: TrainingConfig, grid=None,
              layout=None, difference: Optional[Difference] = None):
    """Mean held-out MSE (scaled units) for every grid point, in grid order."""
    if family == "svr":
        grid = list(cfg.svr_grid if grid is None else grid)
        if not grid:
            raise ConfigError("empty SVR grid")
        X, y, _ = svr_windows(train, cfg.lags, difference)

        def scorer(point):
            C, sigma, eps = point

            def fit_predict(Xa, ya, Xb):
                m = fit_svr_xy(Xa, ya, C, sigma, eps, tol=cfg.kkt_tol,
                               max_iter=cfg.max_iter_per_sample * len(ya))
                return m.decision_function(Xb)

            return _cv_mse(X, y, cfg.folds, fit_predict)

    elif family == "mlp":
        grid = list(cfg.hidden_grid if grid is None else grid)
        if not grid:
            raise ConfigError("empty hidden-node grid")
        if layout is None:
            raise ConfigError("MLP selection needs the (p, h, q) layout")
        p, _, q = layout
        z = model_scale(train.values, difference)
        X, Y, _ = lag_windows(MinMaxScaler.fit(z).transform(z), p, q)

        def scorer(h):
            def fit_predict(Xa, Ya, Xb):
                theta, _, _ = train_windows(Xa, Ya, h, cfg)
                return forward(Layout(p, h, q), theta, Xb)[0]

            return _cv_mse(X, Y, cfg.folds, fit_predict)

    else:
        raise ConfigError(f"no hyperparameter search for model family {family!r}")
    return grid, [scorer(point) for point in grid]


def select_hyperparameters(family: str, train: TimeSeries, cfg: TrainingConfig, grid=None,
                           layout=None, difference: Optional[Difference] = None):
    """Grid point with the lowest fold-mean MSE; ties go to the earlier point.

    ``family`` is ``"svr"`` (grid of ``(C, sigma, eps)``) or ``"mlp"``
    (grid of hidden-node counts for ``layout``).
    """
    grid = list((cfg.svr_grid if family == "svr" else cfg.hidden_grid) if grid is None else grid)
    if not grid:
        raise ConfigError(f"empty hyperparameter grid for {family!r}")
    if len(grid) == 1:
        return grid[0]
    grid, scores = cv_scores(family, train, cfg, grid, layout, difference)
    return grid[int(np.argmin(scores))]
