"""
Experiment harness: paired-seed trials, method evaluation and dispatch of
trials to the local loop or to celery workers
"""
import logging
import math
import time
from functools import cached_property, lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from ..core.config import settings
from ..core.exceptions import ConfigError, InvalidInputError
from ..core.logging_config import get_event_logger
from ..models.allocation import OptimizerKind
from ..models.dataset import CaseId
from ..models.experiment import ConditionalRecord, ExperimentConfig, TrialRecord
from ..models.kernel import KernelSpec
from ..models.prediction_set import IntervalUnion
from ..models.predictor import (
    LABEL_SEARCH_METHODS,
    LOCALIZED_METHODS,
    ConformalPredictor,
    Method,
    YGrid,
)
from ..models.score import HoldoutData
from ..repositories.results_repository import IngestedScores, ingest_scores_csv
from .allocation_service import TIE_TOL
from .cola_service import (
    evaluate_rows,
    fit_cola_e,
    fit_cola_s,
    fit_efcp,
    fit_majority_vote,
    fit_random_select,
    fit_vfcp,
    predict,
    predict_cola_e_local,
    predict_cola_f,
    predict_cola_l,
    predict_sat,
)
from .datagen_service import generate, sample_conditional
from .localized_service import calibrate_bandwidth
from .model_service import score_menu
from .score_service import build_holdout, external_holdout
from .set_service import contains, contains_many, measure

logger = logging.getLogger(__name__)
events = get_event_logger(__name__)

# Methods that need evaluable scores, features or a label grid
EXTERNAL_UNSUPPORTED = LABEL_SEARCH_METHODS | LOCALIZED_METHODS

CONDITIONAL_LOCATIONS = 21
CONDITIONAL_DRAWS = 2000

PointPredictor = Callable[[np.ndarray], IntervalUnion]


def build_config(**values) -> ExperimentConfig:
    """ExperimentConfig from keyword values; validation failures become ConfigError"""
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid experiment configuration: {problems}") from e


def validate_config(config: ExperimentConfig) -> None:
    """Reject method/data-mode combinations before any trial runs"""
    if config.external:
        unsupported = [m.value for m in config.methods if m in EXTERNAL_UNSUPPORTED]
        if unsupported:
            raise ConfigError(
                f"{', '.join(unsupported)} need evaluable scores and features; "
                "external score matrices support cola-e, cola-s, efcp, vfcp, majority and random"
            )
    if config.optimizer is OptimizerKind.SMOOTH and Method.COLA_L in config.methods:
        raise ConfigError("cola-l supports the stepwise and exhaustive optimizers only")


# ---------------------------------------------------------------------------
# Trial preparation
# ---------------------------------------------------------------------------


class TrialContext:
    """Data shared by every method of one trial (paired comparison)"""

    def __init__(
        self,
        config: ExperimentConfig,
        trial: int,
        holdout: HoldoutData,
        test: HoldoutData,
        y_grid: Optional[YGrid] = None,
    ):
        self.config = config
        self.trial = trial
        self.holdout = holdout
        self.test = test
        self.y_grid = y_grid

    @property
    def seed(self) -> int:
        return self.config.trial_seed(self.trial)

    @property
    def split_seed(self) -> int:
        return self.config.trial_split_seed(self.trial)

    @cached_property
    def kernel(self) -> KernelSpec:
        bandwidth = calibrate_bandwidth(self.holdout.X, self.config.target_ess)
        return KernelSpec(bandwidth)


def prepare_simulated_trial(config: ExperimentConfig, trial: int) -> TrialContext:
    seed = config.trial_seed(trial)
    data = generate(config.case, (config.n_train, config.n_holdout, config.n_test), seed)
    specs = score_menu(config.case, data.train, alpha=config.alpha, seed=seed, n_scores=config.n_scores)
    holdout = build_holdout(specs, data.holdout.X, data.holdout.y)
    test = build_holdout(specs, data.test.X, data.test.y)
    y_grid = YGrid.around(np.concatenate([data.train.y, data.holdout.y]), config.ygrid_count)
    return TrialContext(config, trial, holdout, test, y_grid)


@lru_cache(maxsize=4)
def _load_external(path: str) -> IngestedScores:
    return ingest_scores_csv(path)


def external_folds(n: int, folds: int, split_seed: int) -> List[np.ndarray]:
    """Seeded partition of n rows into ``folds`` nearly equal folds"""
    if n < 2 * folds:
        raise ConfigError(f"{n} holdout rows are too few for {folds}-fold evaluation")
    permutation = np.random.default_rng(split_seed).permutation(n)
    return [np.sort(fold) for fold in np.array_split(permutation, folds)]


def prepare_external_trial(config: ExperimentConfig, fold: int) -> TrialContext:
    """Fold ``fold`` is held back for evaluation, the other folds are the holdout"""
    ingested = _load_external(str(config.scores_path))
    data = external_holdout(
        ingested.matrix.values,
        centers=ingested.centers,
        labels=ingested.labels,
        names=ingested.matrix.names,
    )
    folds = external_folds(data.n, config.folds, config.trial_split_seed(0))
    evaluation = folds[fold]
    fitting = np.setdiff1d(np.arange(data.n), evaluation)
    return TrialContext(config, fold, data.rows(fitting), data.rows(evaluation))


def trial_indices(config: ExperimentConfig) -> List[int]:
    return list(range(config.folds if config.external else config.trials))


def prepare_trial(config: ExperimentConfig, trial: int) -> TrialContext:
    if config.external:
        return prepare_external_trial(config, trial)
    return prepare_simulated_trial(config, trial)


# ---------------------------------------------------------------------------
# Methods
# ---------------------------------------------------------------------------


def fit_global(method: Method, ctx: TrialContext) -> Optional[ConformalPredictor]:
    """Predictor with one set of thresholds for every test point; None for
    methods that refit per test point"""
    config, holdout = ctx.config, ctx.holdout
    options = config.optimizer_options
    if method is Method.COLA_E:
        return fit_cola_e(holdout, config.alpha, options)
    if method is Method.COLA_S:
        return fit_cola_s(holdout, config.alpha, ctx.split_seed, options)
    if method is Method.EFCP:
        return fit_efcp(holdout, config.alpha)
    if method is Method.VFCP:
        return fit_vfcp(holdout, config.alpha, ctx.split_seed)
    if method is Method.MAJORITY:
        return fit_majority_vote(holdout, config.alpha)
    if method is Method.RANDOM:
        return fit_random_select(holdout, config.alpha, ctx.seed)
    return None


def point_predictor(method: Method, ctx: TrialContext) -> Tuple[PointPredictor, Optional[ConformalPredictor]]:
    """Callable producing the prediction set at one feature vector"""
    config, holdout = ctx.config, ctx.holdout
    options = config.optimizer_options

    fitted = fit_global(method, ctx)
    if fitted is not None:
        return (lambda x: predict(fitted, x)), fitted
    if method is Method.COLA_F:
        return (lambda x: predict_cola_f(holdout, config.alpha, x, ctx.y_grid, options)), None
    if method is Method.SAT:
        return (lambda x: predict_sat(holdout, config.alpha, x, ctx.y_grid)), None
    if method is Method.COLA_L:
        return (lambda x: predict_cola_l(holdout, config.alpha, x, ctx.kernel, options)), None

    global_fit = fit_cola_e(holdout, config.alpha, options)
    return (lambda x: predict_cola_e_local(global_fit, holdout, x, ctx.kernel)), global_fit


def evaluate_method(method: Method, ctx: TrialContext) -> Tuple[np.ndarray, np.ndarray, Optional[ConformalPredictor]]:
    """Coverage indicators and set sizes on the trial's test rows"""
    fitted = fit_global(method, ctx)
    if fitted is not None:
        covered, sizes = evaluate_rows(fitted, ctx.test)
        return covered, sizes, fitted

    predictor, fitted = point_predictor(method, ctx)
    sets = [predictor(x) for x in ctx.test.X]
    covered = np.array([contains(s, y) for s, y in zip(sets, ctx.test.y)])
    sizes = np.array([measure(s) for s in sets])
    return covered, sizes, fitted


def allocation_agreement(first: ConformalPredictor, second: ConformalPredictor) -> float:
    """Sup-norm distance between the fitted shares of two predictors"""
    if first.allocation is None or second.allocation is None:
        raise InvalidInputError("Both predictors need an allocation")
    if first.allocation.n != second.allocation.n:
        raise InvalidInputError("Allocations live on different grids")
    return float(np.max(np.abs(first.allocation.alphas - second.allocation.alphas)))


def _check_dominance(trial: int, fitted: Dict[Method, ConformalPredictor]) -> None:
    if Method.COLA_E not in fitted or Method.EFCP not in fitted:
        return
    cola_e, efcp = fitted[Method.COLA_E].loss, fitted[Method.EFCP].loss
    holds = bool(cola_e <= efcp + TIE_TOL)
    if holds:
        events.debug("dominance_check", trial=trial, cola_e=cola_e, efcp=efcp, holds=holds)
    else:
        events.error("dominance_violated", trial=trial, cola_e=cola_e, efcp=efcp)


def _log_agreement(trial: int, fitted: Dict[Method, ConformalPredictor]) -> None:
    if Method.COLA_S in fitted and Method.VFCP in fitted:
        gap = allocation_agreement(fitted[Method.COLA_S], fitted[Method.VFCP])
        events.info("allocation_agreement", trial=trial, cola_s=fitted[Method.COLA_S].allocation.label(), gap=gap)


def run_trial(config: ExperimentConfig, trial: int) -> List[TrialRecord]:
    """Fit and evaluate every configured method on one trial's data"""
    ctx = prepare_trial(config, trial)
    events.debug("trial_started", trial=trial, n_holdout=ctx.holdout.n, n_test=ctx.test.n)

    records: List[TrialRecord] = []
    fitted: Dict[Method, ConformalPredictor] = {}
    for method in config.methods:
        started = time.perf_counter()
        covered, sizes, predictor = evaluate_method(method, ctx)
        elapsed_ms = (time.perf_counter() - started) * 1000.0

        has_allocation = predictor is not None and predictor.allocation is not None
        if has_allocation and method is not Method.COLA_E_LOCAL:
            fitted[method] = predictor
        records.append(
            TrialRecord(
                method=method,
                trial=trial,
                coverage=float(np.mean(covered)),
                avg_size=float(np.mean(sizes)),
                wall_ms=elapsed_ms if config.record_timing else 0.0,
                alloc=predictor.allocation.label() if has_allocation else "",
                holdout_loss=predictor.loss if predictor is not None else math.nan,
            )
        )

    _check_dominance(trial, fitted)
    _log_agreement(trial, fitted)
    events.info("trial_finished", trial=trial, methods=len(records))
    return records


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def _run_with_celery(config: ExperimentConfig, indices: Sequence[int]) -> List[TrialRecord]:
    from ..tasks.trial_tasks import run_trial_task

    payload = config.model_dump(mode="json")
    pending = [run_trial_task.apply_async(args=(payload, trial)) for trial in indices]
    logger.info("🚀 Dispatched %d trials to celery", len(pending))
    rows = [row for result in pending for row in result.get(disable_sync_subtasks=False)]
    return [TrialRecord.model_validate(row) for row in rows]


def run_experiment(config: ExperimentConfig) -> List[TrialRecord]:
    """Run every trial and return records sorted by (method, trial)"""
    validate_config(config)
    indices = trial_indices(config)
    events.info(
        "experiment_started",
        source=config.case.value if config.case else str(config.scores_path),
        trials=len(indices),
        methods=",".join(m.value for m in config.methods),
        backend=settings.TRIAL_BACKEND,
    )

    if settings.TRIAL_BACKEND == "celery":
        records = _run_with_celery(config, indices)
    else:
        records = [record for trial in indices for record in run_trial(config, trial)]

    records.sort(key=lambda r: (r.method.value, r.trial))
    return records


def run_conditional_experiment(
    config: ExperimentConfig,
    locations: int = CONDITIONAL_LOCATIONS,
    draws: int = CONDITIONAL_DRAWS,
) -> List[ConditionalRecord]:
    """Conditional coverage and set size at equally spaced locations in [-1, 1].

    Labels at each location are fresh draws from the individualized process.
    """
    if config.case is not CaseId.INDIVIDUAL:
        raise ConfigError("The conditional experiment runs on the individualized case only")
    if locations < 1 or draws < 1:
        raise ConfigError("locations and draws must be positive")
    validate_config(config)

    grid = np.linspace(-1.0, 1.0, locations) if locations > 1 else np.zeros(1)
    records: List[ConditionalRecord] = []
    for trial in range(config.trials):
        ctx = prepare_simulated_trial(config, trial)
        predictors = {method: point_predictor(method, ctx)[0] for method in config.methods}
        rng = np.random.default_rng((config.trial_seed(trial), locations, draws))

        for location in grid:
            labels = sample_conditional(config.case, location, draws, rng)
            x = np.array([location])
            for method, predictor in predictors.items():
                region = predictor(x)
                records.append(
                    ConditionalRecord(
                        method=method,
                        trial=trial,
                        location=float(location),
                        coverage=float(np.mean(contains_many(region, labels))),
                        size=measure(region),
                    )
                )
        events.info("conditional_trial_finished", trial=trial, locations=locations)

    records.sort(key=lambda r: (r.method.value, r.trial, r.location))
    return records
