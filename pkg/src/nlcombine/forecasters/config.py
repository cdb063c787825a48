from dataclasses import dataclass
from typing import Tuple

from ..errors import ConfigError


@dataclass(frozen=True)
class TrainingConfig:
    """Knobs shared by the trainable forecasters (MLP and SVR).

    RProp defaults follow Riedmiller and Braun: initial step 0.1, steps
    bounded to [1e-6, 50], increase/decrease factors 1.2 / 0.5.
    """

    seed: int = 0
    lags: int = 12
    step_init: float = 0.1
    step_min: float = 1e-6
    step_max: float = 50.0
    increase: float = 1.2
    decrease: float = 0.5
    epochs: int = 1000
    patience: int = 100
    plateau_tol: float = 1e-9
    restarts: int = 1
    svr_grid: Tuple[Tuple[float, float, float], ...] = ((10.0, 1.0, 0.01),)
    hidden_grid: Tuple[int, ...] = ()
    folds: int = 3
    kkt_tol: float = 1e-3
    max_iter_per_sample: int = 100_000

    def __post_init__(self):
        for name in ("lags", "epochs", "folds", "restarts", "patience", "max_iter_per_sample"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not (self.increase > 1.0 > self.decrease > 0.0):
            raise ConfigError("RProp factors need increase > 1 > decrease > 0")
        if not (0.0 <= self.step_min <= self.step_init <= self.step_max):
            raise ConfigError("RProp steps need step_min <= step_init <= step_max")
        if self.kkt_tol <= 0:
            raise ConfigError("kkt_tol must be positive")
        for C, sigma, eps in self.svr_grid:
            if C <= 0 or sigma <= 0 or eps < 0:
                raise ConfigError(f"invalid SVR grid point {(C, sigma, eps)}")
