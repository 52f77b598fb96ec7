"""Confidence-budget allocation types"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..core.exceptions import InvalidInputError

# Slack added before flooring alpha * n so that exact products are not lost to float error
BUDGET_TOL = 1e-9


def budget_units(alpha: float, n: int) -> int:
    """B = floor(alpha * n + 1e-9); the effective total miscoverage B / n never exceeds alpha"""
    return int(math.floor(alpha * n + BUDGET_TOL))


@dataclass(frozen=True)
class Allocation:
    """K nonnegative integer budget units on the grid G(n)"""

    units: Tuple[int, ...]
    n: int

    def __post_init__(self):
        units = tuple(int(u) for u in self.units)
        if any(u < 0 for u in units):
            raise InvalidInputError(f"Allocation units must be nonnegative: {units}")
        if self.n < 1:
            raise InvalidInputError(f"Grid resolution must be positive, got {self.n}")
        object.__setattr__(self, "units", units)

    @classmethod
    def zeros(cls, K: int, n: int) -> "Allocation":
        return cls((0,) * K, n)

    @classmethod
    def one_hot(cls, K: int, k: int, budget: int, n: int) -> "Allocation":
        units = [0] * K
        units[k] = budget
        return cls(tuple(units), n)

    @property
    def K(self) -> int:
        return len(self.units)

    @property
    def budget(self) -> int:
        return sum(self.units)

    @property
    def alphas(self) -> np.ndarray:
        return np.asarray(self.units, dtype=float) / self.n

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(k for k, u in enumerate(self.units) if u > 0)

    def label(self) -> str:
        """Slash-joined unit vector, as written to result files"""
        return "/".join(str(u) for u in self.units)


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    selected: Optional[int]
    loss: float


@dataclass(frozen=True)
class AllocationResult:
    """An allocation with its exact empirical loss and the optimizer trace"""

    allocation: Allocation
    loss: float
    trace: Tuple[TraceStep, ...] = ()

    @property
    def support(self) -> Tuple[int, ...]:
        return self.allocation.support


class OptimizerKind(str, Enum):
    STEPWISE = "stepwise"
    EXHAUSTIVE = "exhaustive"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class SmoothingParams:
    """Parameters of the log-sum-exp / Gaussian-kernel relaxation"""

    tau2: Tuple[float, ...]
    tau1: float = 20.0
    step_size: float = 0.5
    max_iter: int = 500
    tol: float = 1e-8
    alpha_floor: float = 1e-6

    def __post_init__(self):
        if self.tau1 <= 0:
            raise InvalidInputError(f"tau1 must be positive, got {self.tau1}")
        if not self.tau2 or any(t <= 0 for t in self.tau2):
            raise InvalidInputError("Every tau2 bandwidth must be positive")
        object.__setattr__(self, "tau2", tuple(float(t) for t in self.tau2))


@dataclass(frozen=True)
class OptimizerOptions:
    """Options shared by every allocation-fitting method"""

    kind: OptimizerKind = OptimizerKind.STEPWISE
    k_max: int = 4
    max_iter: int = 10
    tau1: float = 20.0
    smoothing_steps: int = 500

    def __post_init__(self):
        if self.k_max < 1 or self.max_iter < 1:
            raise InvalidInputError("k_max and max_iter must be at least 1")
