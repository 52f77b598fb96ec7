"""Synthetic datasets and fitted regression models"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core.exceptions import DataError


class CaseId(str, Enum):
    """Data-generating processes"""

    CASE1 = "1"
    CASE2 = "2"
    CASE3 = "3"
    INDIVIDUAL = "individual"


class Role(str, Enum):
    TRAIN = "train"
    HOLDOUT = "holdout"
    TEST = "test"


@dataclass(frozen=True)
class Dataset:
    """Features, labels and provenance of one sample"""

    X: np.ndarray
    y: np.ndarray
    role: Role
    generator: CaseId
    seed: int

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.size:
            raise DataError(f"{self.role.value} set has {X.shape[0]} feature rows but {y.size} labels")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError(f"{self.role.value} set contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class DatasetTriple:
    train: Dataset
    holdout: Dataset
    test: Dataset


class ModelKind(str, Enum):
    """Built-in regressors used to realize score menus"""

    OLS = "ols"
    RIDGE_SUBSET = "ridge-subset"
    KNN = "knn"
    KNN_SCALE = "knn-scale"
    KNN_QUANTILE = "knn-quantile"
    TREE_STUMP = "tree-stump"


@dataclass(frozen=True)
class FittedModel:
    """A fitted estimator with the hyperparameters it was fitted with.

    ``features`` is the stored column subset for ridge-subset models.
    ``fallback`` is set when OLS hit singular normal equations and was
    replaced by a tiny ridge penalty.
    """

    kind: ModelKind
    estimator: Any
    d: int
    hyperparams: Dict[str, Any] = field(default_factory=dict)
    features: Optional[Tuple[int, ...]] = None
    fallback: bool = False
    train_y: Optional[np.ndarray] = None
