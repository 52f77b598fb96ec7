"""Order statistics: augmented and weighted empirical quantiles, conformal p-values"""
import math
from typing import Sequence

import numpy as np

from ..core.exceptions import InvalidInputError

# Slack used when comparing cumulative weights to the target level
WEIGHT_TOL = 1e-12
# Slack absorbing float error in (1 - alpha)(n + 1) before the ceiling
RANK_TOL = 1e-9


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0 or math.isnan(alpha):
        raise InvalidInputError(f"Quantile level alpha must lie in [0, 1], got {alpha}")


def conformal_rank(alpha: float, n: int) -> int:
    """r = ceil((1 - alpha)(n + 1))"""
    return math.ceil((1.0 - alpha) * (n + 1) - RANK_TOL)


def grid_rank(units: int, n: int) -> int:
    """Exact conformal rank at grid level alpha = units / n"""
    # ceil((n - u)(n + 1) / n) in integer arithmetic
    return -(-(n - units) * (n + 1) // n)


def augmented_quantile(values: Sequence[float], alpha: float) -> float:
    """The (1 - alpha) empirical quantile of ``values ∪ {+∞}``.

    Returns the r-th smallest value with r = ceil((1 - alpha)(n + 1)), +∞ when
    r > n and -∞ when r < 1 (alpha = 1).
    """
    _check_alpha(alpha)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidInputError("augmented_quantile needs at least one value")
    n = values.size
    r = conformal_rank(alpha, n)
    if r > n:
        return math.inf
    if r < 1:
        return -math.inf
    return float(np.partition(values, r - 1)[r - 1])


def augmented_quantile_table(values: Sequence[float], n_grid: int, max_units: int) -> np.ndarray:
    """Augmented quantiles at grid levels u / n_grid for u = 0..max_units.

    Entry 0 is always +∞. When the sample size equals ``n_grid`` the ranks are
    computed in exact integer arithmetic.
    """
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.size
    table = np.full(max_units + 1, math.inf)
    for u in range(1, max_units + 1):
        r = grid_rank(u, n) if n == n_grid else conformal_rank(u / n_grid, n)
        if r < 1:
            table[u] = -math.inf
        elif r <= n:
            table[u] = ordered[r - 1]
    return table


def weighted_quantile(values: Sequence[float], weights: Sequence[float], alpha: float) -> float:
    """(1 - alpha) quantile of the weighted empirical distribution Σ w_i δ_{v_i}.

    Smallest value t with Σ_{v_i <= t} w_i >= 1 - alpha; falls back to the
    largest value when no such t exists.
    """
    _check_alpha(alpha)
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.size == 0:
        raise InvalidInputError("weighted_quantile needs at least one value")
    if values.shape != weights.shape:
        raise InvalidInputError(
            f"Length mismatch: {values.size} values and {weights.size} weights"
        )
    if np.any(weights < 0):
        raise InvalidInputError("Weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-12 * max(1, values.size):
        raise InvalidInputError(f"Weights must sum to 1, got {weights.sum()!r}")

    order = np.argsort(values, kind="stable")
    cumulative = np.cumsum(weights[order])
    hits = np.flatnonzero(cumulative >= (1.0 - alpha) - WEIGHT_TOL)
    if hits.size == 0:
        return float(values[order[-1]])
    return float(values[order[hits[0]]])


def weighted_quantile_table(
    values: Sequence[float], weights: Sequence[float], n_grid: int, max_units: int
) -> np.ndarray:
    """Weighted quantiles at grid levels u / n_grid for u = 0..max_units; entry 0 is +∞"""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ordered = values[order]
    cumulative = np.cumsum(np.asarray(weights, dtype=float)[order])

    table = np.full(max_units + 1, math.inf)
    if max_units == 0:
        return table
    levels = 1.0 - np.arange(1, max_units + 1) / n_grid - WEIGHT_TOL
    positions = np.searchsorted(cumulative, levels, side="left")
    positions = np.minimum(positions, ordered.size - 1)
    table[1:] = ordered[positions]
    return table


def conformal_p_value(calibration: Sequence[float], s_new: float) -> float:
    """(1 + #{i : S_i >= s_new}) / (n + 1)"""
    calibration = np.asarray(calibration, dtype=float)
    if calibration.size == 0:
        raise InvalidInputError("conformal_p_value needs at least one calibration score")
    return (1.0 + np.count_nonzero(calibration >= s_new)) / (calibration.size + 1.0)


def conformal_p_values_sorted(sorted_calibration: np.ndarray, s_new: np.ndarray) -> np.ndarray:
    """Vectorized p-values against an ascending calibration array"""
    n = sorted_calibration.size
    at_least = n - np.searchsorted(sorted_calibration, s_new, side="left")
    return (1.0 + at_least) / (n + 1.0)
