from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import AlignmentError, DomainError, SizeError


@dataclass(frozen=True)
class ForecastSet:
    """Aligned forecasts: ``values[k, i]`` is model ``i``'s forecast at time ``k``."""

    values: np.ndarray
    names: tuple
    window: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2:
            raise SizeError("forecasts must form an N x n matrix")
        names = tuple(self.names)
        if arr.shape[1] != len(names):
            raise AlignmentError(f"{arr.shape[1]} forecast columns but {len(names)} names")
        if len(set(names)) != len(names):
            raise AlignmentError("model names must be unique")
        if arr.shape[1] < 2:
            raise SizeError("a forecast combination needs at least two models")
        if arr.shape[0] < 1:
            raise SizeError("empty forecast window")
        if not np.all(np.isfinite(arr)):
            raise DomainError("forecasts must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "names", names)

    @classmethod
    def from_columns(cls, columns: dict, window: str = "") -> "ForecastSet":
        names = tuple(columns)
        return cls(np.column_stack([np.asarray(columns[k], dtype=float) for k in names]),
                   names, window)

    @property
    def n_models(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def reorder(self, names: Sequence[str]) -> "ForecastSet":
        if sorted(names) != sorted(self.names):
            raise AlignmentError(f"models {tuple(names)} do not match {self.names}")
        idx = [self.names.index(n) for n in names]
        return ForecastSet(self.values[:, idx], tuple(names), self.window)
