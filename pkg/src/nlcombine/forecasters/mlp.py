"""Single-hidden-layer perceptron trained with resilient propagation.

Hidden units are logistic, outputs are linear.  Inputs and targets are
min-max scaled with statistics of the training series.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import ConfigError, SizeError
from ..timeseries import Difference, TimeSeries
from .base import Forecaster, MinMaxScaler, lag_windows, model_scale
from .config import TrainingConfig


def logistic(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Layout:
    """Packing of (W1, b1, W2, b2) into one flat parameter vector."""

    def __init__(self, n_in: int, n_hidden: int, n_out: int):
        self.shape = (n_in, n_hidden, n_out)
        p, h, q = self.shape
        self.sizes = [h * p, h, q * h, q]
        self.offsets = np.cumsum([0] + self.sizes)

    @property
    def n_params(self):
        return int(self.offsets[-1])

    def unpack(self, theta):
        p, h, q = self.shape
        o = self.offsets
        return (theta[o[0]:o[1]].reshape(h, p), theta[o[1]:o[2]],
                theta[o[2]:o[3]].reshape(q, h), theta[o[3]:o[4]])

    def pack(self, W1, b1, W2, b2):
        return np.concatenate([W1.ravel(), b1, W2.ravel(), b2])


def forward(layout: Layout, theta, X):
    W1, b1, W2, b2 = layout.unpack(theta)
    H = logistic(X @ W1.T + b1)
    return H @ W2.T + b2, H


def sse_and_grad(layout: Layout, theta, X, Y):
    """Training SSE ``sum((net(X) - Y)^2)`` and its gradient by backpropagation."""
    W1, _, W2, _ = layout.unpack(theta)
    out, H = forward(layout, theta, X)
    R = out - Y
    dout = 2.0 * R
    gW2 = dout.T @ H
    gb2 = dout.sum(axis=0)
    dH = (dout @ W2) * H * (1.0 - H)
    gW1 = dH.T @ X
    gb1 = dH.sum(axis=0)
    return float(np.sum(R * R)), layout.pack(gW1, gb1, gW2, gb2)


def rprop_train(layout: Layout, theta0, X, Y, cfg: TrainingConfig):
    """iRprop- on the batch SSE; returns the lowest-SSE parameters seen and that SSE."""
    theta = theta0.copy()
    step = np.full_like(theta, cfg.step_init)
    g_prev = np.zeros_like(theta)
    best_theta, best_sse = theta.copy(), np.inf
    history = []
    for _ in range(cfg.epochs + 1):
        sse, g = sse_and_grad(layout, theta, X, Y)
        if sse < best_sse:
            best_sse, best_theta = sse, theta.copy()
        history.append(best_sse)
        k = len(history)
        if k > cfg.patience:
            ref = history[k - 1 - cfg.patience]
            if ref - best_sse <= cfg.plateau_tol * max(ref, 1e-300):
                break
        if k > cfg.epochs:
            break
        agree = g * g_prev
        step = np.where(agree > 0, np.minimum(step * cfg.increase, cfg.step_max), step)
        step = np.where(agree < 0, np.maximum(step * cfg.decrease, cfg.step_min), step)
        g = np.where(agree < 0, 0.0, g)
        theta = theta - np.sign(g) * step
        g_prev = g
    return best_theta, best_sse


@dataclass(frozen=True)
class MlpModel(Forecaster):
    """Fitted (p, h, q) network.

    ``stride`` is the spacing of training windows.  When it exceeds one
    (seasonal block networks) predictions are block aligned: the value at
    index ``t`` is output ``t - b`` of the block starting at ``b <= t``,
    where block starts are congruent to ``phase`` modulo ``stride``.
    """

    layout: Tuple[int, int, int]
    params_vector: np.ndarray
    scaler: MinMaxScaler
    difference: Optional[Difference] = None
    stride: int = 1
    phase: int = 0
    train_sse: float = float("nan")
    init_sse: float = float("nan")

    def __post_init__(self):
        theta = np.asarray(self.params_vector, dtype=float)
        if theta.size != Layout(*self.layout).n_params:
            raise ValueError("parameter vector does not match the layout")
        if not np.all(np.isfinite(theta)):
            raise ValueError("network weights must be finite")
        object.__setattr__(self, "params_vector", theta)

    @property
    def weights(self):
        return Layout(*self.layout).unpack(self.params_vector)

    @property
    def min_history(self):
        return self.layout[0] + (self.stride - 1 if self.stride > 1 else 0)

    def predict_scaled(self, X):
        out, _ = forward(Layout(*self.layout), self.params_vector, np.atleast_2d(X))
        return out

    def predict_block(self, z):
        """All ``q`` outputs for the window formed by the last ``p`` values of ``z``."""
        p = self.layout[0]
        x = self.scaler.transform(np.asarray(z, dtype=float)[-p:])
        return self.scaler.inverse(self.predict_scaled(x)[0])

    def predict_next(self, z):
        if self.stride == 1:
            return float(self.predict_block(z)[0])
        t = len(z)
        offset = (t - self.phase) % self.stride
        if offset >= self.layout[2]:
            raise SizeError("index falls outside the network's output block")
        return float(self.predict_block(z[:t - offset])[offset])

    def params(self):
        W1, b1, W2, b2 = self.weights
        return {"layout": "(%d, %d, %d)" % self.layout, "hidden_activation": "logistic",
                "output_activation": "identity", "scale_lo": self.scaler.lo,
                "scale_hi": self.scaler.hi, "stride": self.stride, "phase": self.phase,
                "W1": W1, "b1": b1, "W2": W2, "b2": b2, "train_sse": self.train_sse}


def init_params(layout: Layout, rng: np.random.Generator):
    p, h, q = layout.shape
    W1 = rng.uniform(-1.0, 1.0, size=(h, p)) / np.sqrt(p)
    b1 = rng.uniform(-1.0, 1.0, size=h)
    W2 = rng.uniform(-1.0, 1.0, size=(q, h)) / np.sqrt(h)
    b2 = np.full(q, 0.5)
    return layout.pack(W1, b1, W2, b2)


def train_windows(X, Y, n_hidden: int, cfg: TrainingConfig):
    """Train on scaled window matrices; best of ``cfg.restarts`` initialisations.

    Returns ``(params, train_sse, init_sse)`` where ``init_sse`` belongs to
    the initialisation that produced the returned parameters.
    """
    layout = Layout(X.shape[1], n_hidden, Y.shape[1])
    rng = np.random.default_rng(cfg.seed)
    best = None
    for _ in range(cfg.restarts):
        theta0 = init_params(layout, rng)
        init_sse, _ = sse_and_grad(layout, theta0, X, Y)
        theta, sse = rprop_train(layout, theta0, X, Y, cfg)
        if best is None or sse < best[1]:
            best = (theta, sse, init_sse)
    return best


def fit_mlp(train: TimeSeries, layout, cfg: TrainingConfig,
            difference: Optional[Difference] = None, stride: int = 1) -> MlpModel:
    p, h, q = layout
    if min(p, h, q) < 1:
        raise ConfigError(f"layout {layout} needs positive node counts")
    if stride < 1 or (stride > 1 and q < stride):
        raise ConfigError("block stride must not exceed the output count")
    z = model_scale(train.values, difference)
    if len(z) <= p + q:
        raise SizeError(f"layout {layout} infeasible for {len(z)} training observations")
    scaler = MinMaxScaler.fit(z)
    X, Y, starts = lag_windows(scaler.transform(z), p, q, stride)
    theta, sse, init_sse = train_windows(X, Y, h, cfg)
    phase = int((starts[0] + p) % stride) if stride > 1 else 0
    return MlpModel(layout=(p, h, q), params_vector=theta, scaler=scaler,
                    difference=difference, stride=stride, phase=phase,
                    train_sse=sse, init_sse=init_sse)
