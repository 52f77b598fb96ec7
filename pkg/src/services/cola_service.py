"""
COLA procedures (COLA-e, COLA-s, COLA-f, COLA-l) and the single-score
selection baselines built on the same allocation machinery
"""
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..core.exceptions import InvalidInputError, UnsupportedOperationError
from ..models.allocation import (
    Allocation,
    AllocationResult,
    OptimizerKind,
    OptimizerOptions,
    budget_units,
)
from ..models.kernel import KernelSpec
from ..models.prediction_set import IntervalUnion
from ..models.predictor import ConformalPredictor, Method, YGrid
from ..models.score import HoldoutData, IntervalGeometry
from .allocation_service import (
    LossOracle,
    best_singleton,
    exhaustive_search,
    stepwise_optimize,
)
from .localized_service import kernel_weights
from .quantile_service import (
    augmented_quantile,
    conformal_p_values_sorted,
    weighted_quantile_table,
)
from .score_service import evaluate_batch, geometry_for, sublevel_from_geometry
from .set_service import coverage_region, intersect_all, measure, normalize
from .smoothing_service import default_smoothing_params, projected_gradient_optimize

logger = logging.getLogger(__name__)

DEFAULT_OPTIONS = OptimizerOptions()


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def fit_allocation(oracle: LossOracle, budget: int, options: OptimizerOptions = DEFAULT_OPTIONS) -> AllocationResult:
    """Run the configured optimizer on an oracle"""
    if options.kind is OptimizerKind.EXHAUSTIVE:
        return exhaustive_search(oracle, range(oracle.K), budget)
    if options.kind is OptimizerKind.SMOOTH and oracle.K >= 2 and budget > 0:
        params = default_smoothing_params(oracle, tau1=options.tau1, max_iter=options.smoothing_steps)
        return projected_gradient_optimize(oracle, params, budget / oracle.n_grid)
    return stepwise_optimize(oracle, budget, k_max=options.k_max, max_iter=options.max_iter)


def split_indices(n: int, split_seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded equal split into tuning (first ⌊n/2⌋ of a permutation) and calibration rows"""
    if n < 2:
        raise InvalidInputError(f"Sample splitting needs at least 2 holdout rows, got {n}")
    permutation = np.random.default_rng(split_seed).permutation(n)
    n_tune = n // 2
    return np.sort(permutation[:n_tune]), np.sort(permutation[n_tune:])


def _recalibrate(calibration: HoldoutData, allocation: Allocation) -> Tuple[float, ...]:
    """Augmented quantiles of the calibration rows at the fitted shares; +∞ for zero units"""
    return tuple(
        augmented_quantile(calibration.scores.column(k), u / allocation.n) if u > 0 else math.inf
        for k, u in enumerate(allocation.units)
    )


def _predictor(
    holdout: HoldoutData,
    thresholds: Sequence[float],
    method: Method,
    alpha: float,
    result: Optional[AllocationResult] = None,
) -> ConformalPredictor:
    return ConformalPredictor(
        specs=holdout.specs,
        thresholds=tuple(thresholds),
        method=method,
        alpha=alpha,
        allocation=None if result is None else result.allocation,
        loss=math.nan if result is None else result.loss,
    )


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")


def _require_features(holdout: HoldoutData, method: Method) -> None:
    if not holdout.has_features:
        raise UnsupportedOperationError(
            f"{method.value} needs evaluable score specs and holdout features"
        )


# ---------------------------------------------------------------------------
# Prediction and evaluation
# ---------------------------------------------------------------------------


def sets_at(predictor: ConformalPredictor, geometry: IntervalGeometry, row: int) -> Tuple[IntervalUnion, ...]:
    """Per-score sets of a predictor at one geometry row"""
    return tuple(
        sublevel_from_geometry(
            geometry.lower[row, k], geometry.upper[row, k], geometry.slope[row, k], t
        )
        for k, t in enumerate(predictor.thresholds)
    )


def _combine(predictor: ConformalPredictor, sets: Sequence[IntervalUnion]) -> IntervalUnion:
    if predictor.method is Method.MAJORITY:
        return coverage_region(sets, predictor.K // 2 + 1)
    return intersect_all(list(sets))


def predict(predictor: ConformalPredictor, x) -> IntervalUnion:
    """Prediction set at a new feature vector"""
    geometry = geometry_for(predictor.specs, np.asarray(x, dtype=float).reshape(1, -1))
    return _combine(predictor, sets_at(predictor, geometry, 0))


def evaluate_rows(predictor: ConformalPredictor, rows: HoldoutData) -> Tuple[np.ndarray, np.ndarray]:
    """Coverage indicators and set sizes on labelled rows.

    Membership of the true label is read off the scores (S_k <= t_k), which is
    equivalent to membership in the sublevel sets.
    """
    t = np.asarray(predictor.thresholds)
    within = rows.scores.values <= t[None, :]

    if predictor.method is Method.MAJORITY:
        covered = within.sum(axis=1) > predictor.K / 2
        sizes = np.array(
            [
                measure(_combine(predictor, sets_at(predictor, rows.geometry, i)))
                for i in range(rows.n)
            ]
        )
        return covered, sizes

    covered = within.all(axis=1)
    geometry = rows.geometry
    with np.errstate(invalid="ignore"):
        lo = np.max(geometry.lower - geometry.slope * t[None, :], axis=1)
        hi = np.min(geometry.upper + geometry.slope * t[None, :], axis=1)
        sizes = np.clip(hi - lo, 0.0, None)
    return covered, sizes


# ---------------------------------------------------------------------------
# COLA-e / COLA-s
# ---------------------------------------------------------------------------


def fit_cola_e(
    holdout: HoldoutData, alpha: float, options: OptimizerOptions = DEFAULT_OPTIONS
) -> ConformalPredictor:
    """Allocation and calibration on the full holdout"""
    _check_alpha(alpha)
    budget = budget_units(alpha, holdout.n)
    oracle = LossOracle.from_holdout(holdout, budget)
    result = fit_allocation(oracle, budget, options)
    logger.debug("COLA-e allocation %s, loss %.6g", result.allocation.label(), result.loss)
    return _predictor(holdout, oracle.thresholds_for(result.allocation), Method.COLA_E, alpha, result)


def fit_cola_s(
    holdout: HoldoutData,
    alpha: float,
    split_seed: int,
    options: OptimizerOptions = DEFAULT_OPTIONS,
) -> ConformalPredictor:
    """Allocation on the tuning half, thresholds on the calibration half"""
    _check_alpha(alpha)
    tune_idx, cal_idx = split_indices(holdout.n, split_seed)
    tune, calibration = holdout.rows(tune_idx), holdout.rows(cal_idx)

    budget = budget_units(alpha, tune.n)
    oracle = LossOracle.from_holdout(tune, budget)
    result = fit_allocation(oracle, budget, options)
    return _predictor(holdout, _recalibrate(calibration, result.allocation), Method.COLA_S, alpha, result)


# ---------------------------------------------------------------------------
# Single-score baselines
# ---------------------------------------------------------------------------


def fit_efcp(holdout: HoldoutData, alpha: float) -> ConformalPredictor:
    """Best single score on the full holdout"""
    _check_alpha(alpha)
    budget = budget_units(alpha, holdout.n)
    oracle = LossOracle.from_holdout(holdout, budget)
    result = best_singleton(oracle, budget)
    return _predictor(holdout, oracle.thresholds_for(result.allocation), Method.EFCP, alpha, result)


def fit_vfcp(holdout: HoldoutData, alpha: float, split_seed: int) -> ConformalPredictor:
    """Best single score selected on the tuning half, calibrated on the other half"""
    _check_alpha(alpha)
    tune_idx, cal_idx = split_indices(holdout.n, split_seed)
    tune, calibration = holdout.rows(tune_idx), holdout.rows(cal_idx)
    budget = budget_units(alpha, tune.n)
    result = best_singleton(LossOracle.from_holdout(tune, budget), budget)
    return _predictor(holdout, _recalibrate(calibration, result.allocation), Method.VFCP, alpha, result)


def fit_random_select(holdout: HoldoutData, alpha: float, seed: int) -> ConformalPredictor:
    """One score chosen uniformly at random, split-conformal threshold on the full holdout"""
    _check_alpha(alpha)
    k = int(np.random.default_rng(seed).integers(holdout.K))
    budget = budget_units(alpha, holdout.n)
    oracle = LossOracle.from_holdout(holdout, budget)
    allocation = Allocation.one_hot(holdout.K, k, budget, holdout.n)
    result = AllocationResult(allocation, float(oracle.batch_losses((k,), np.array([[budget]]))[0]))
    return _predictor(holdout, oracle.thresholds_for(allocation), Method.RANDOM, alpha, result)


def fit_majority_vote(holdout: HoldoutData, alpha: float) -> ConformalPredictor:
    """K sets at level 1 - alpha/2, combined by strict majority at prediction time"""
    _check_alpha(alpha)
    thresholds = [augmented_quantile(holdout.scores.column(k), alpha / 2) for k in range(holdout.K)]
    return _predictor(holdout, thresholds, Method.MAJORITY, alpha)


def predict_majority_vote(holdout: HoldoutData, alpha: float, x_new) -> IntervalUnion:
    """{y : more than half of the level-(1 - alpha/2) sets contain y}"""
    return predict(fit_majority_vote(holdout, alpha), x_new)


# ---------------------------------------------------------------------------
# Label-search methods: COLA-f and SAT
# ---------------------------------------------------------------------------


def grid_cells(y_grid: YGrid, included: np.ndarray) -> IntervalUnion:
    """Union of the cells of included grid points, clipped to the grid range"""
    half = y_grid.step / 2.0
    points = y_grid.points
    indices = np.flatnonzero(included)
    if indices.size == 0:
        return normalize(())
    # Consecutive included points form one run
    breaks = np.flatnonzero(np.diff(indices) > 1)
    starts = np.concatenate(([indices[0]], indices[breaks + 1]))
    ends = np.concatenate((indices[breaks], [indices[-1]]))
    return normalize(
        (max(y_grid.lo, points[s] - half), min(y_grid.hi, points[e] + half))
        for s, e in zip(starts, ends)
    )


def _label_scores(holdout: HoldoutData, x_new, labels: np.ndarray) -> np.ndarray:
    """S_k(x_new, y) for every hypothesized label (rows) and score (columns)"""
    X_rep = np.repeat(np.asarray(x_new, dtype=float).reshape(1, -1), labels.size, axis=0)
    return np.column_stack([evaluate_batch(spec, X_rep, labels) for spec in holdout.specs])


def label_augmented_table(sorted_scores: np.ndarray, new_scores: np.ndarray, budget: int) -> Tuple[np.ndarray, np.ndarray]:
    """Thresholds over the n+1 scores {S_k,i} ∪ {S_k(x_new, y)} at grid levels u/(n+1).

    Unit u maps to the (n+1-u)-th smallest augmented score, with no extra +∞
    element; u = 0 is +∞. Returns the table and the augmented columns.
    """
    augmented = np.sort(np.vstack([sorted_scores, new_scores[None, :]]), axis=0)
    n_aug = augmented.shape[0]
    table = np.full((augmented.shape[1], budget + 1), math.inf)
    for u in range(1, min(budget, n_aug - 1) + 1):
        table[:, u] = augmented[n_aug - 1 - u]
    return table, augmented


def fit_cola_f_at(
    holdout: HoldoutData,
    alpha: float,
    x_new,
    y: float,
    options: OptimizerOptions = DEFAULT_OPTIONS,
) -> Tuple[bool, AllocationResult]:
    """Test-augmented allocation for one hypothesized label; returns inclusion and allocation"""
    return _cola_f_decisions(holdout, alpha, x_new, np.array([float(y)]), options)[0]


def _cola_f_decisions(holdout, alpha, x_new, labels, options):
    _require_features(holdout, Method.COLA_F)
    _check_alpha(alpha)
    n_aug = holdout.n + 1
    budget = budget_units(alpha, n_aug)
    geo_new = geometry_for(holdout.specs, np.asarray(x_new, dtype=float).reshape(1, -1))
    eval_geometry = IntervalGeometry.stack([holdout.geometry, geo_new])
    sorted_scores = np.sort(holdout.scores.values, axis=0)
    new_scores = _label_scores(holdout, x_new, labels)

    decisions = []
    for g in range(labels.size):
        table, augmented = label_augmented_table(sorted_scores, new_scores[g], budget)
        oracle = LossOracle(table, eval_geometry, n_aug, calibration=augmented)
        result = fit_allocation(oracle, budget, options)
        t = oracle.thresholds_for(result.allocation)
        decisions.append((bool(np.all(new_scores[g] <= t)), result))
    return decisions


def predict_cola_f(
    holdout: HoldoutData,
    alpha: float,
    x_new,
    y_grid: YGrid,
    options: OptimizerOptions = DEFAULT_OPTIONS,
) -> IntervalUnion:
    """Full-conformal COLA: refit the allocation for every hypothesized label"""
    decisions = _cola_f_decisions(holdout, alpha, x_new, y_grid.points, options)
    included = np.array([inside for inside, _ in decisions])
    return grid_cells(y_grid, included)


def sat_p_values(holdout: HoldoutData, x_new, labels: np.ndarray) -> np.ndarray:
    """Cauchy-combined conformal p-value for each hypothesized label"""
    _require_features(holdout, Method.SAT)
    n = holdout.n
    sorted_scores = np.sort(holdout.scores.values, axis=0)
    new_scores = _label_scores(holdout, x_new, labels)
    p = np.column_stack(
        [conformal_p_values_sorted(sorted_scores[:, k], new_scores[:, k]) for k in range(holdout.K)]
    )
    return cauchy_combine(p, n)


def cauchy_combine(p_values: np.ndarray, n: int) -> np.ndarray:
    """Equal-weight Cauchy combination across the last axis.

    p-values are clamped to [1/(n+1), 1 - 1e-12] so the tangent stays finite.
    """
    p = np.clip(np.asarray(p_values, dtype=float), 1.0 / (n + 1), 1.0 - 1e-12)
    statistic = np.mean(np.tan(np.pi * (0.5 - p)), axis=-1)
    return stats.cauchy.sf(statistic)


def predict_sat(holdout: HoldoutData, alpha: float, x_new, y_grid: YGrid) -> IntervalUnion:
    """Labels whose combined p-value exceeds alpha"""
    _check_alpha(alpha)
    combined = sat_p_values(holdout, x_new, y_grid.points)
    return grid_cells(y_grid, combined > alpha)


# ---------------------------------------------------------------------------
# Localized methods: COLA-l and COLA-e with localized sets
# ---------------------------------------------------------------------------


def _weighted_table(holdout: HoldoutData, x_new, kernel: KernelSpec, budget: int) -> np.ndarray:
    weights = kernel_weights(holdout.X, x_new, kernel)
    return np.vstack(
        [
            weighted_quantile_table(holdout.scores.column(k), weights.w, holdout.n, budget)
            for k in range(holdout.K)
        ]
    )


def fit_cola_l(
    holdout: HoldoutData,
    alpha: float,
    x_new,
    kernel: KernelSpec,
    options: OptimizerOptions = DEFAULT_OPTIONS,
) -> ConformalPredictor:
    """Allocation minimizing the set size at x_new with kernel-weighted quantiles.

    The returned predictor is only meaningful at x_new.
    """
    _require_features(holdout, Method.COLA_L)
    _check_alpha(alpha)
    if options.kind is OptimizerKind.SMOOTH:
        raise UnsupportedOperationError("COLA-l supports the stepwise and exhaustive optimizers only")
    budget = budget_units(alpha, holdout.n)
    table = _weighted_table(holdout, x_new, kernel, budget)
    geo_new = geometry_for(holdout.specs, np.asarray(x_new, dtype=float).reshape(1, -1))
    oracle = LossOracle(table, geo_new, holdout.n)
    result = fit_allocation(oracle, budget, options)
    return _predictor(holdout, oracle.thresholds_for(result.allocation), Method.COLA_L, alpha, result)


def predict_cola_l(
    holdout: HoldoutData,
    alpha: float,
    x_new,
    kernel: KernelSpec,
    options: OptimizerOptions = DEFAULT_OPTIONS,
) -> IntervalUnion:
    """Individualized COLA set at x_new"""
    return predict(fit_cola_l(holdout, alpha, x_new, kernel, options), x_new)


def predict_cola_e_local(
    predictor: ConformalPredictor, holdout: HoldoutData, x_new, kernel: KernelSpec
) -> IntervalUnion:
    """A fitted global allocation applied with kernel-weighted thresholds at x_new"""
    _require_features(holdout, Method.COLA_E_LOCAL)
    allocation = predictor.allocation
    if allocation is None:
        raise InvalidInputError("Localized prediction needs a predictor with an allocation")
    table = _weighted_table(holdout, x_new, kernel, max(allocation.units))
    thresholds = tuple(
        table[k, u] if u > 0 else math.inf for k, u in enumerate(allocation.units)
    )
    local = ConformalPredictor(
        specs=holdout.specs,
        thresholds=thresholds,
        method=Method.COLA_E_LOCAL,
        alpha=predictor.alpha,
        allocation=allocation,
    )
    return predict(local, x_new)
