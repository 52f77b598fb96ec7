"""Domain value types"""

from .allocation import Allocation, AllocationResult, OptimizerKind, OptimizerOptions
from .dataset import CaseId, Dataset, DatasetTriple, FittedModel, ModelKind
from .experiment import ConditionalRecord, ExperimentConfig, TrialRecord
from .kernel import KernelSpec, WeightVector
from .prediction_set import DiscreteSet, IntervalUnion
from .predictor import ConformalPredictor, Method, YGrid
from .score import HoldoutData, IntervalGeometry, ScoreKind, ScoreMatrix, ScoreSpec

__all__ = [
    "Allocation",
    "AllocationResult",
    "OptimizerKind",
    "OptimizerOptions",
    "CaseId",
    "Dataset",
    "DatasetTriple",
    "FittedModel",
    "ModelKind",
    "ConditionalRecord",
    "ExperimentConfig",
    "TrialRecord",
    "KernelSpec",
    "WeightVector",
    "DiscreteSet",
    "IntervalUnion",
    "ConformalPredictor",
    "Method",
    "YGrid",
    "HoldoutData",
    "IntervalGeometry",
    "ScoreKind",
    "ScoreMatrix",
    "ScoreSpec",
]
