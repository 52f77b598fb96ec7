"""Fitted conformal predictors and label grids"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..core.exceptions import InvalidInputError
from .allocation import Allocation
from .score import ScoreSpec


class Method(str, Enum):
    """Every prediction method the harness can run"""

    COLA_E = "cola-e"
    COLA_S = "cola-s"
    COLA_F = "cola-f"
    COLA_L = "cola-l"
    COLA_E_LOCAL = "cola-e-local"
    EFCP = "efcp"
    VFCP = "vfcp"
    MAJORITY = "majority"
    SAT = "sat"
    RANDOM = "random"


# Methods that need score specs evaluable at new (x, y) pairs
LABEL_SEARCH_METHODS = frozenset({Method.COLA_F, Method.SAT})
# Methods that need holdout features for kernel weights
LOCALIZED_METHODS = frozenset({Method.COLA_L, Method.COLA_E_LOCAL})


@dataclass(frozen=True)
class ConformalPredictor:
    """Intersection of per-score sublevel sets at calibrated thresholds"""

    specs: Tuple[ScoreSpec, ...]
    thresholds: Tuple[float, ...]
    method: Method
    alpha: float
    allocation: Optional[Allocation] = None
    loss: float = math.nan  # empirical loss on the fitting points, when defined

    def __post_init__(self):
        if len(self.specs) != len(self.thresholds):
            raise InvalidInputError("One threshold per score spec is required")
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))

    @property
    def K(self) -> int:
        return len(self.specs)

    @property
    def active(self) -> Tuple[int, ...]:
        """Scores that constrain the set (finite threshold)"""
        return tuple(k for k, t in enumerate(self.thresholds) if t != math.inf)


@dataclass(frozen=True)
class YGrid:
    """Uniformly spaced hypothesized labels for label-search methods"""

    lo: float
    hi: float
    count: int = 200

    def __post_init__(self):
        if self.count < 2 or not self.lo < self.hi:
            raise InvalidInputError(f"Invalid label grid [{self.lo}, {self.hi}] with {self.count} points")

    @classmethod
    def around(cls, y: np.ndarray, count: int = 200) -> "YGrid":
        """[min - range, max + range] with range = max - min"""
        y = np.asarray(y, dtype=float)
        low, high = float(y.min()), float(y.max())
        spread = high - low
        if spread <= 0:
            spread = max(abs(low), 1.0)
        return cls(low - spread, high + spread, count)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)
