"""Exception types raised across the package."""

import numpy as np


class SizeError(ValueError):
    """A series or window is too short, or lengths disagree."""


class DomainError(ValueError):
    """A value lies outside the domain of an operation (log of 0, MAPE with y=0, ...)."""


class ConfigError(ValueError):
    """Invalid configuration or hyperparameters."""


class AlignmentError(ValueError):
    """Forecast columns do not match the models a combiner was fitted on."""


class DegenerateForecastError(ValueError):
    """A forecast column is constant, so it cannot be standardized."""


class PerfectModelError(ValueError):
    """A model has zero past error; inverse-error weighting is undefined.

    Callers should use that model's forecast outright.
    """

    def __init__(self, message, model_index=None):
        super().__init__(message)
        self.model_index = model_index


class SingularityError(np.linalg.LinAlgError):
    """A linear system that must be inverted is singular or numerically so."""


class OptimizationError(RuntimeError):
    """An iterative fit failed to converge."""


class ParseError(ValueError):
    """Malformed input file; ``line`` is the 1-based offending line."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
        if line is not None:
            loc = f"{loc}:{line}" if loc else f"line {line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line
