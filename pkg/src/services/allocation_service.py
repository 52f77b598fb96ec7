"""
Confidence-budget optimizers over the grid G(n): empirical loss, composition
enumeration, exhaustive search and stepwise forward/backward search
"""
import itertools
import logging
import math
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import InvalidInputError
from ..models.allocation import Allocation, AllocationResult, TraceStep
from ..models.score import HoldoutData, IntervalGeometry
from .quantile_service import augmented_quantile_table

logger = logging.getLogger(__name__)

# Losses closer than this are ties
TIE_TOL = 1e-12
# Upper bound on candidates × support × points evaluated in one numpy block
_BLOCK_ELEMENTS = 4_000_000


class LossOracle:
    """Empirical loss L_n over a fixed set of evaluation points.

    ``thresholds[k, u]`` is the calibrated threshold of score k when it holds u
    budget units (column 0 is +∞), so loss evaluation never re-sorts scores.
    ``geometry`` describes the sublevel sets of each score at each evaluation
    point.
    """

    def __init__(
        self,
        thresholds: np.ndarray,
        geometry: IntervalGeometry,
        n_grid: int,
        calibration: Optional[np.ndarray] = None,
    ):
        thresholds = np.array(thresholds, dtype=float)
        if thresholds.ndim != 2 or thresholds.shape[0] != geometry.K:
            raise InvalidInputError(
                f"Threshold table {thresholds.shape} does not match {geometry.K} scores"
            )
        thresholds[:, 0] = math.inf
        thresholds.setflags(write=False)
        self.thresholds = thresholds
        self.geometry = geometry
        self.n_grid = n_grid
        self.calibration = calibration

    @classmethod
    def from_holdout(
        cls,
        holdout: HoldoutData,
        budget: int,
        eval_geometry: Optional[IntervalGeometry] = None,
        n_grid: Optional[int] = None,
    ) -> "LossOracle":
        """Augmented-quantile oracle; evaluation points default to the holdout rows"""
        n_grid = holdout.n if n_grid is None else n_grid
        table = np.vstack(
            [
                augmented_quantile_table(holdout.scores.column(k), n_grid, budget)
                for k in range(holdout.K)
            ]
        )
        return cls(
            table,
            holdout.geometry if eval_geometry is None else eval_geometry,
            n_grid,
            calibration=holdout.scores.values,
        )

    @property
    def K(self) -> int:
        return self.geometry.K

    @property
    def max_units(self) -> int:
        return self.thresholds.shape[1] - 1

    def thresholds_for(self, allocation: Allocation) -> np.ndarray:
        self._check(allocation)
        return self.thresholds[np.arange(self.K), np.asarray(allocation.units)]

    def _check(self, allocation: Allocation) -> None:
        if allocation.K != self.K:
            raise InvalidInputError(f"Allocation has {allocation.K} scores, oracle has {self.K}")
        if allocation.n != self.n_grid:
            raise InvalidInputError(
                f"Allocation grid n={allocation.n} differs from oracle grid n={self.n_grid}"
            )
        if max(allocation.units) > self.max_units:
            raise InvalidInputError(
                f"Allocation {allocation.units} exceeds the tabulated budget {self.max_units}"
            )

    def interval_bounds(self, support: Sequence[int], thresholds: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Intersection endpoints for candidate threshold rows.

        ``thresholds`` has shape (N, s) for ``s = len(support)``; returns
        lower and upper endpoints of shape (N, m).
        """
        support = np.asarray(support)
        lower = self.geometry.lower[:, support].T[None, :, :]
        upper = self.geometry.upper[:, support].T[None, :, :]
        slope = self.geometry.slope[:, support].T[None, :, :]
        t = thresholds[:, :, None]
        with np.errstate(invalid="ignore"):
            lo = np.max(lower - slope * t, axis=1)
            hi = np.min(upper + slope * t, axis=1)
        return lo, hi

    def batch_losses(self, support: Sequence[int], compositions: np.ndarray) -> np.ndarray:
        """Exact loss of every composition (rows) placed on ``support``"""
        support = tuple(support)
        compositions = np.asarray(compositions, dtype=int)
        table = self.thresholds[np.asarray(support)]
        losses = np.empty(len(compositions))
        block = max(1, _BLOCK_ELEMENTS // max(1, len(support) * self.geometry.m))
        for start in range(0, len(compositions), block):
            chunk = compositions[start : start + block]
            t = table[np.arange(len(support))[None, :], chunk]
            lo, hi = self.interval_bounds(support, t)
            with np.errstate(invalid="ignore"):
                sizes = np.clip(hi - lo, 0.0, None)
            losses[start : start + len(chunk)] = sizes.mean(axis=1)
        return losses


def empirical_loss(oracle: LossOracle, allocation: Allocation) -> float:
    """Mean measure of the intersected sets over the oracle's evaluation points"""
    oracle._check(allocation)
    units = np.asarray(allocation.units, dtype=int)[None, :]
    return float(oracle.batch_losses(tuple(range(oracle.K)), units)[0])


def enumerate_compositions(support_size: int, budget: int) -> Iterator[Tuple[int, ...]]:
    """Every nonnegative integer vector of length ``support_size`` summing to
    ``budget``, in lexicographic order"""
    if support_size < 1 or budget < 0:
        raise InvalidInputError(f"Need support_size >= 1 and budget >= 0, got {support_size}, {budget}")
    # Stars and bars: bar positions in lexicographic order give compositions in lexicographic order
    slots = budget + support_size - 1
    for bars in itertools.combinations(range(slots), support_size - 1):
        parts, previous = [], -1
        for bar in bars:
            parts.append(bar - previous - 1)
            previous = bar
        parts.append(slots - previous - 1)
        yield tuple(parts)


@lru_cache(maxsize=64)
def composition_array(support_size: int, budget: int) -> np.ndarray:
    """Compositions as an array in descending lexicographic order (tie-break order)"""
    array = np.array(list(enumerate_compositions(support_size, budget)), dtype=int)[::-1].copy()
    array.setflags(write=False)
    return array


def _first_best(losses: np.ndarray) -> int:
    best = np.min(losses)
    return int(np.flatnonzero(losses <= best + TIE_TOL)[0])


def exhaustive_search(
    oracle: LossOracle, candidate_indices: Sequence[int], budget: int
) -> AllocationResult:
    """Global grid minimizer of L_n over allocations supported on the candidates.

    Ties go to the allocation placing budget on the lowest score index first.
    """
    support = tuple(sorted(set(int(k) for k in candidate_indices)))
    if not support:
        raise InvalidInputError("exhaustive_search needs at least one candidate index")

    compositions = composition_array(len(support), budget)
    losses = oracle.batch_losses(support, compositions)
    best = _first_best(losses)

    units = [0] * oracle.K
    for k, u in zip(support, compositions[best]):
        units[k] = int(u)
    return AllocationResult(Allocation(tuple(units), oracle.n_grid), float(losses[best]))


def best_singleton(oracle: LossOracle, budget: int, candidates: Optional[Sequence[int]] = None) -> AllocationResult:
    """Full budget on the single score with the smallest loss (lowest index on ties)"""
    candidates = list(range(oracle.K)) if candidates is None else list(candidates)
    losses = np.array(
        [oracle.batch_losses((k,), np.array([[budget]]))[0] for k in candidates]
    )
    best = _first_best(losses)
    allocation = Allocation.one_hot(oracle.K, candidates[best], budget, oracle.n_grid)
    return AllocationResult(allocation, float(losses[best]))


def stepwise_optimize(oracle: LossOracle, budget: int, k_max: int = 4, max_iter: int = 10) -> AllocationResult:
    """Forward/backward stepwise search with support cap ``k_max``.

    With K <= k_max this is exhaustive search over all scores. Otherwise each
    iteration adds the score whose support-constrained optimum is smallest,
    stops when no strict improvement is possible, then drops scores left with
    zero budget.
    """
    if k_max < 1 or max_iter < 1:
        raise InvalidInputError("k_max and max_iter must be at least 1")

    K = oracle.K
    if K <= k_max:
        result = exhaustive_search(oracle, range(K), budget)
        return AllocationResult(result.allocation, result.loss, (TraceStep(0, None, result.loss),))

    support: Tuple[int, ...] = ()
    current = AllocationResult(Allocation.zeros(K, oracle.n_grid), math.inf)
    trace: List[TraceStep] = []

    for iteration in range(1, max_iter + 1):
        # Forward step
        best_k, best = None, None
        for k in range(K):
            if k in support:
                continue
            candidate = exhaustive_search(oracle, support + (k,), budget)
            if best is None or candidate.loss < best.loss - TIE_TOL:
                best_k, best = k, candidate

        if best is None or not best.loss < current.loss - TIE_TOL:
            logger.debug("Stepwise stopped at iteration %d without improvement", iteration)
            break

        trace.append(TraceStep(iteration, best_k, best.loss))
        # Backward step: the re-optimized allocation on the grown support is `best`
        current = best
        support = best.support
        if len(support) >= k_max:
            break

    return AllocationResult(current.allocation, current.loss, tuple(trace))
