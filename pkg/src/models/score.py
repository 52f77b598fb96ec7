"""Nonconformity score types and holdout containers"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import CapabilityError, DataError

# Floor applied to every scale prediction before it is used as a divisor
SIGMA_MIN = 1e-8

Handle = Callable[[np.ndarray], np.ndarray]


class ScoreKind(str, Enum):
    """Supported nonconformity scores"""

    RESIDUAL = "residual"
    RESCALED = "rescaled-residual"
    CQR = "cqr"
    EXTERNAL = "external"


_REQUIRED_HANDLES = {
    ScoreKind.RESIDUAL: ("mu",),
    ScoreKind.RESCALED: ("mu", "sigma"),
    ScoreKind.CQR: ("tau_lo", "tau_hi"),
    ScoreKind.EXTERNAL: (),
}


@dataclass(frozen=True)
class ScoreSpec:
    """A score definition with the prediction handles its kind needs.

    Handles map a feature matrix (m, d) to an array of m predictions.
    """

    kind: ScoreKind
    name: str = ""
    mu: Optional[Handle] = None
    sigma: Optional[Handle] = None
    tau_lo: Optional[Handle] = None
    tau_hi: Optional[Handle] = None

    def __post_init__(self):
        missing = [h for h in _REQUIRED_HANDLES[self.kind] if getattr(self, h) is None]
        if missing:
            raise CapabilityError(
                f"Score '{self.name or self.kind.value}' of kind {self.kind.value} "
                f"needs handles: {', '.join(missing)}"
            )

    @property
    def is_evaluable(self) -> bool:
        return self.kind is not ScoreKind.EXTERNAL


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class ScoreMatrix:
    """Holdout scores: ``values[i, k] = S_k(X_i, Y_i)``"""

    values: np.ndarray
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        values = _readonly(self.values)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"Score matrix must be n×K with n, K >= 1, got shape {values.shape}")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            i, k = bad[0]
            raise DataError(f"Non-finite score at row {i}, score {k}")
        object.__setattr__(self, "values", values)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"s{k + 1}" for k in range(values.shape[1])))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]

    def column(self, k: int) -> np.ndarray:
        return self.values[:, k]

    def rows(self, index: Sequence[int]) -> "ScoreMatrix":
        return ScoreMatrix(self.values[np.asarray(index)], self.names)


@dataclass(frozen=True)
class IntervalGeometry:
    """Sublevel sets of interval-type scores at a list of points.

    For score k at point i the sublevel set at threshold t is
    ``[lower[i, k] - slope[i, k] * t, upper[i, k] + slope[i, k] * t]``.
    """

    lower: np.ndarray
    upper: np.ndarray
    slope: np.ndarray

    def __post_init__(self):
        for name in ("lower", "upper", "slope"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if not (self.lower.shape == self.upper.shape == self.slope.shape) or self.lower.ndim != 2:
            raise DataError("Interval geometry arrays must share one (m, K) shape")
        if np.any(self.slope <= 0):
            raise DataError("Interval geometry slopes must be positive")

    @property
    def m(self) -> int:
        return self.lower.shape[0]

    @property
    def K(self) -> int:
        return self.lower.shape[1]

    def rows(self, index: Sequence[int]) -> "IntervalGeometry":
        index = np.asarray(index)
        return IntervalGeometry(self.lower[index], self.upper[index], self.slope[index])

    def columns(self, index: Sequence[int]) -> "IntervalGeometry":
        index = np.asarray(index)
        return IntervalGeometry(self.lower[:, index], self.upper[:, index], self.slope[:, index])

    @classmethod
    def stack(cls, parts: Sequence["IntervalGeometry"]) -> "IntervalGeometry":
        return cls(
            np.vstack([p.lower for p in parts]),
            np.vstack([p.upper for p in parts]),
            np.vstack([p.slope for p in parts]),
        )


@dataclass(frozen=True)
class HoldoutData:
    """Labelled holdout rows with their scores and interval geometry.

    ``X`` and ``y`` are absent for externally supplied score matrices.
    """

    scores: ScoreMatrix
    geometry: IntervalGeometry
    X: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    specs: Tuple[ScoreSpec, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.scores.n

    @property
    def K(self) -> int:
        return self.scores.K

    @property
    def has_features(self) -> bool:
        return self.X is not None and bool(self.specs) and all(s.is_evaluable for s in self.specs)

    def rows(self, index: Sequence[int]) -> "HoldoutData":
        index = np.asarray(index)
        return HoldoutData(
            scores=self.scores.rows(index),
            geometry=self.geometry.rows(index),
            X=None if self.X is None else self.X[index],
            y=None if self.y is None else self.y[index],
            specs=self.specs,
        )
