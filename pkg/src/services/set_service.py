"""Set algebra for prediction sets: normalization, intersection, measure"""
import math
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ..core.exceptions import InvalidInputError, TagMismatchError, UnsupportedOperationError
from ..models.prediction_set import (
    EMPTY_INTERVALS,
    DiscreteSet,
    Interval,
    IntervalUnion,
    PredictionSet,
)


def normalize(raw: Iterable[Tuple[float, float]]) -> IntervalUnion:
    """Sort and merge raw closed intervals into a canonical union.

    Pairs with ``lo > hi`` are empty and dropped; touching or overlapping
    intervals are merged.
    """
    pairs: List[Interval] = []
    for lo, hi in raw:
        lo, hi = float(lo), float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise InvalidInputError(f"NaN endpoint in interval ({lo}, {hi})")
        if lo > hi:
            continue
        pairs.append((lo, hi))

    if not pairs:
        return EMPTY_INTERVALS

    pairs.sort()
    merged: List[Interval] = [pairs[0]]
    for lo, hi in pairs[1:]:
        cur_lo, cur_hi = merged[-1]
        if lo <= cur_hi:
            merged[-1] = (cur_lo, max(cur_hi, hi))
        else:
            merged.append((lo, hi))
    return IntervalUnion(tuple(merged))


def discrete(labels: Iterable[int]) -> DiscreteSet:
    """Build a discrete label set"""
    return DiscreteSet(frozenset(int(label) for label in labels))


def _check_tags(a: PredictionSet, b: PredictionSet) -> None:
    if type(a) is not type(b):
        raise TagMismatchError(
            f"Cannot combine {type(a).__name__} with {type(b).__name__}"
        )


def intersect(a: PredictionSet, b: PredictionSet) -> PredictionSet:
    """Intersection of two sets of the same kind"""
    _check_tags(a, b)
    if isinstance(a, DiscreteSet):
        return DiscreteSet(a.labels & b.labels)

    # Two-pointer sweep over the sorted interval lists
    out: List[Interval] = []
    i = j = 0
    left, right = a.intervals, b.intervals
    while i < len(left) and j < len(right):
        lo = max(left[i][0], right[j][0])
        hi = min(left[i][1], right[j][1])
        if lo <= hi:
            out.append((lo, hi))
        if left[i][1] < right[j][1]:
            i += 1
        else:
            j += 1
    return normalize(out)


def intersect_all(sets: Sequence[PredictionSet]) -> PredictionSet:
    """Intersection of a nonempty sequence of sets"""
    if not sets:
        raise InvalidInputError("intersect_all needs at least one set")
    result = sets[0]
    for other in sets[1:]:
        result = intersect(result, other)
    return result


def union(a: PredictionSet, b: PredictionSet) -> PredictionSet:
    """Union of two sets of the same kind"""
    _check_tags(a, b)
    if isinstance(a, DiscreteSet):
        return DiscreteSet(a.labels | b.labels)
    return normalize(a.intervals + b.intervals)


def measure(a: PredictionSet) -> float:
    """Lebesgue measure of an interval union, cardinality of a discrete set"""
    if isinstance(a, DiscreteSet):
        return float(len(a.labels))
    total = 0.0
    for lo, hi in a.intervals:
        if math.isinf(lo) or math.isinf(hi):
            return math.inf
        total += hi - lo
    return total


def sym_diff_measure(a: PredictionSet, b: PredictionSet) -> float:
    """Measure of the symmetric difference of two finite-measure sets"""
    _check_tags(a, b)
    if isinstance(a, DiscreteSet):
        return float(len(a.labels ^ b.labels))
    size_a, size_b = measure(a), measure(b)
    if math.isinf(size_a) or math.isinf(size_b):
        raise UnsupportedOperationError("Symmetric difference of unbounded sets is not supported")
    # |A \ B| + |B \ A| = |A| + |B| - 2|A ∩ B|
    return max(size_a + size_b - 2.0 * measure(intersect(a, b)), 0.0)


def contains(a: PredictionSet, y: float) -> bool:
    """Membership test"""
    if isinstance(a, DiscreteSet):
        if not math.isfinite(y):
            return False
        return int(y) == y and int(y) in a.labels
    for lo, hi in a.intervals:
        if y < lo:
            return False
        if y <= hi:
            return True
    return False


def contains_many(a: IntervalUnion, ys) -> np.ndarray:
    """Vectorized membership of many labels in one interval union"""
    ys = np.asarray(ys, dtype=float)
    if a.is_empty:
        return np.zeros(ys.shape, dtype=bool)
    los = np.array([lo for lo, _ in a.intervals])
    his = np.array([hi for _, hi in a.intervals])
    # Index of the last interval starting at or before y
    idx = np.searchsorted(los, ys, side="right") - 1
    safe = np.clip(idx, 0, None)
    return (idx >= 0) & (ys <= his[safe])


def _probe_between(lo: float, hi: float) -> float:
    """A point strictly inside (lo, hi); either end may be infinite"""
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return hi - 1.0
    if math.isinf(hi):
        return lo + 1.0
    return 0.5 * (lo + hi)


def coverage_region(sets: Sequence[IntervalUnion], min_count: int) -> IntervalUnion:
    """Points lying in at least ``min_count`` of the given interval unions.

    Exact endpoint sweep: the coverage count is constant on every open gap
    between consecutive endpoints, so it is probed at each finite endpoint and
    at one point inside each gap.
    """
    endpoints = sorted({p for s in sets for interval in s for p in interval})
    bounds = [-math.inf] + [p for p in endpoints if math.isfinite(p)] + [math.inf]

    def count(y: float) -> int:
        return sum(1 for s in sets if contains(s, y))

    pieces: List[Interval] = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if count(_probe_between(lo, hi)) >= min_count:
            pieces.append((lo, hi))
    for p in bounds[1:-1]:
        if count(p) >= min_count:
            pieces.append((p, p))
    return normalize(pieces)
