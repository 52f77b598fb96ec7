"""Experiment configuration and per-trial result records"""
import math
from pathlib import Path
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .allocation import OptimizerKind, OptimizerOptions
from .dataset import CaseId
from .predictor import Method

# Column order of result files
RESULT_COLUMNS = ("method", "trial", "coverage", "avg_size", "wall_ms", "alloc")
CONDITIONAL_COLUMNS = ("method", "trial", "location", "coverage", "size")


class ExperimentConfig(BaseModel):
    """Everything a run depends on; the results are a pure function of it"""

    model_config = ConfigDict(frozen=True)

    case: Optional[CaseId] = None
    scores_path: Optional[Path] = None
    methods: Tuple[Method, ...]
    alpha: float = 0.1
    n_train: int = 150
    n_holdout: int = 300
    n_test: int = 40
    trials: int = 1
    seed: int = 0
    split_seed: Optional[int] = None
    optimizer: OptimizerKind = OptimizerKind.STEPWISE
    k_max: int = 4
    max_iter: int = 10
    tau1: float = 20.0
    ygrid_count: int = 200
    target_ess: float = 200.0
    n_scores: int = 4
    folds: int = 5
    record_timing: bool = False

    @field_validator("alpha")
    @classmethod
    def _alpha_in_unit_interval(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {v}")
        return v

    @field_validator("n_train", "n_holdout", "n_test", "trials", "k_max", "max_iter", "n_scores")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be at least 1, got {v}")
        return v

    @field_validator("ygrid_count", "folds")
    @classmethod
    def _at_least_two(cls, v: int) -> int:
        if v < 2:
            raise ValueError(f"must be at least 2, got {v}")
        return v

    @field_validator("methods")
    @classmethod
    def _nonempty_unique(cls, v: Tuple[Method, ...]) -> Tuple[Method, ...]:
        if not v:
            raise ValueError("at least one method is required")
        return tuple(dict.fromkeys(v))

    @model_validator(mode="after")
    def _one_data_source(self) -> "ExperimentConfig":
        if (self.case is None) == (self.scores_path is None):
            raise ValueError("exactly one of case and scores_path must be set")
        return self

    @property
    def external(self) -> bool:
        return self.scores_path is not None

    @property
    def optimizer_options(self) -> OptimizerOptions:
        return OptimizerOptions(
            kind=self.optimizer, k_max=self.k_max, max_iter=self.max_iter, tau1=self.tau1
        )

    def trial_seed(self, trial: int) -> int:
        return self.seed + trial

    def trial_split_seed(self, trial: int) -> int:
        base = self.seed if self.split_seed is None else self.split_seed
        return base + trial


class TrialRecord(BaseModel):
    """Metrics of one method in one trial"""

    method: Method
    trial: int
    coverage: float = Field(ge=0.0, le=1.0)
    avg_size: float = Field(ge=0.0)
    wall_ms: float = 0.0
    alloc: str = ""
    # Empirical loss on the fitting points; kept for dominance checks, not written
    holdout_loss: float = math.nan

    def csv_row(self) -> dict:
        return {
            "method": self.method.value,
            "trial": self.trial,
            "coverage": self.coverage,
            "avg_size": self.avg_size,
            "wall_ms": self.wall_ms,
            "alloc": self.alloc,
        }


class ConditionalRecord(BaseModel):
    """Conditional coverage and set size of one method at one location"""

    method: Method
    trial: int
    location: float
    coverage: float = Field(ge=0.0, le=1.0)
    size: float = Field(ge=0.0)
