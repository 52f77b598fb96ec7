"""Kernel types for localized calibration"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..core.exceptions import InvalidInputError


class KernelKind(str, Enum):
    LAPLACE = "laplace"


@dataclass(frozen=True)
class KernelSpec:
    """Similarity kernel H(x, x') = exp(-||x - x'|| / h)"""

    bandwidth: float
    kind: KernelKind = KernelKind.LAPLACE

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InvalidInputError(f"Kernel bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class WeightVector:
    """Normalized kernel weights plus the raw similarity mass"""

    w: np.ndarray
    raw_sum: float

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self) -> int:
        return self.w.size
