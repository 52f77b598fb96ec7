import math

import numpy as np
import pytest

from src.core.exceptions import InvalidInputError, TagMismatchError, UnsupportedOperationError
from src.models.prediction_set import EMPTY_INTERVALS, REAL_LINE
from src.services.set_service import (
    contains,
    contains_many,
    coverage_region,
    discrete,
    intersect,
    intersect_all,
    measure,
    normalize,
    sym_diff_measure,
    union,
)


def intervals(*pairs):
    return normalize(pairs)


class TestNormalize:
    def test_overlapping_intervals_merge(self):
        assert normalize([(0, 1), (0.5, 2)]).intervals == ((0.0, 2.0),)

    def test_unsorted_input_is_sorted(self):
        assert normalize([(3, 4), (0, 1)]).intervals == ((0.0, 1.0), (3.0, 4.0))

    def test_touching_intervals_merge(self):
        assert normalize([(0, 1), (1, 2)]).intervals == ((0.0, 2.0),)

    def test_reversed_pair_is_dropped(self):
        assert normalize([(2, 1)]) == EMPTY_INTERVALS

    def test_nan_endpoint_rejected(self):
        with pytest.raises(InvalidInputError):
            normalize([(math.nan, 1.0)])

    def test_degenerate_point_kept(self):
        assert normalize([(1, 1)]).intervals == ((1.0, 1.0),)


class TestIntersect:
    def test_overlap(self):
        assert intersect(intervals((0, 2)), intervals((1, 3))).intervals == ((1.0, 2.0),)

    def test_sweep_over_two_pieces(self):
        result = intersect(intervals((0, 1), (2, 3)), intervals((0.5, 2.5)))
        assert result.intervals == ((0.5, 1.0), (2.0, 2.5))

    def test_disjoint_is_empty(self):
        assert intersect(intervals((0, 1)), intervals((2, 3))).is_empty

    def test_real_line_is_identity(self):
        a = intervals((0, 1), (2, 5))
        assert intersect(a, REAL_LINE) == a

    def test_discrete_sets(self):
        assert intersect(discrete([1, 2, 3]), discrete([2, 3, 4])) == discrete([2, 3])

    def test_mixed_kinds_rejected(self):
        with pytest.raises(TagMismatchError):
            intersect(intervals((0, 1)), discrete([0]))

    def test_intersect_all_needs_input(self):
        with pytest.raises(InvalidInputError):
            intersect_all([])


class TestMeasure:
    def test_sum_of_lengths(self):
        assert measure(intervals((0, 1), (2, 4))) == 3.0

    def test_empty(self):
        assert measure(EMPTY_INTERVALS) == 0.0

    def test_unbounded(self):
        assert measure(intervals((-math.inf, 0))) == math.inf

    def test_discrete_cardinality(self):
        assert measure(discrete([0, 3, 7])) == 3.0


class TestSymmetricDifference:
    def test_shifted_intervals(self):
        assert sym_diff_measure(intervals((0, 2)), intervals((1, 3))) == pytest.approx(2.0)

    def test_self_is_zero(self):
        a = intervals((0, 1), (5, 6))
        assert sym_diff_measure(a, a) == 0.0

    def test_against_empty(self):
        assert sym_diff_measure(intervals((0, 1)), EMPTY_INTERVALS) == 1.0

    def test_unbounded_rejected(self):
        with pytest.raises(UnsupportedOperationError):
            sym_diff_measure(REAL_LINE, intervals((0, 1)))


def test_union_merges():
    assert union(intervals((0, 1)), intervals((0.5, 3))).intervals == ((0.0, 3.0),)


def test_contains_closed_endpoints():
    a = intervals((0, 1), (2, 3))
    assert contains(a, 0.0) and contains(a, 1.0) and contains(a, 2.5)
    assert not contains(a, 1.5)
    assert not contains(a, 3.5)


def test_discrete_membership_of_non_integer_labels():
    labels = discrete([1, 2])
    assert contains(labels, 2.0)
    assert not contains(labels, 1.5)
    assert not contains(labels, math.inf)
    assert not contains(labels, math.nan)


def test_contains_many_matches_scalar_membership(rng):
    a = intervals((-1, 0), (0.5, 0.75), (2, math.inf))
    ys = rng.uniform(-3, 4, size=500)
    expected = np.array([contains(a, y) for y in ys])
    np.testing.assert_array_equal(contains_many(a, ys), expected)
    assert not contains_many(EMPTY_INTERVALS, ys).any()


class TestCoverageRegion:
    def test_majority_of_three(self):
        sets = [intervals((0, 2)), intervals((1, 3)), intervals((1.5, 2.5))]
        assert coverage_region(sets, 2).intervals == ((1.0, 2.5),)

    def test_single_set_is_itself(self):
        a = intervals((0, 1), (4, 5))
        assert coverage_region([a], 1) == a

    def test_two_sets_need_both(self):
        a, b = intervals((0, 2)), intervals((1, 3))
        assert coverage_region([a, b], 2) == intersect(a, b)

    def test_whole_line(self):
        assert coverage_region([REAL_LINE, REAL_LINE, REAL_LINE], 2) == REAL_LINE

    def test_matches_dense_grid_counting(self, rng):
        for _ in range(20):
            sets = []
            for _ in range(5):
                lo = rng.uniform(-3, 2)
                sets.append(intervals((lo, lo + rng.uniform(0.2, 3))))
            region = coverage_region(sets, 3)
            grid = np.linspace(-4, 6, 20001)
            counts = sum(contains_many(s, grid).astype(int) for s in sets)
            dense = np.count_nonzero(counts >= 3) * (grid[1] - grid[0])
            assert measure(region) == pytest.approx(dense, abs=2 * (grid[1] - grid[0]) * 5)


def random_union(rng, pieces=None):
    """Union of up to four random closed intervals inside [-10, 10]"""
    count = int(rng.integers(1, 5)) if pieces is None else pieces
    starts = rng.uniform(-10, 9, size=count)
    return normalize((lo, min(lo + rng.uniform(0.1, 4), 10.0)) for lo in starts)


class TestSetProperties:
    def test_intersection_with_itself(self, rng):
        for _ in range(200):
            a = random_union(rng)
            assert intersect(a, a) == a

    def test_intersection_never_grows(self, rng):
        for _ in range(200):
            a, b = random_union(rng), random_union(rng)
            assert measure(intersect(a, b)) <= min(measure(a), measure(b)) + 1e-12

    def test_measure_agrees_with_uniform_sampling(self, rng):
        draws = 100_000
        for _ in range(3):
            a = random_union(rng)
            hits = contains_many(a, rng.uniform(-10, 10, size=draws))
            p = hits.mean()
            se = 20 * math.sqrt(p * (1 - p) / draws)
            assert abs(20 * p - measure(a)) <= 3 * se + 1e-9

    def test_intersections_of_close_intervals_stay_close(self, rng):
        for _ in range(200):
            K = int(rng.integers(2, 6))
            A, B = [], []
            for _ in range(K):
                lo = rng.uniform(-2, 1)
                hi = lo + rng.uniform(1, 4)
                shift_lo, shift_hi = rng.uniform(-0.3, 0.3, size=2)
                A.append(intervals((lo, hi)))
                B.append(intervals((lo + shift_lo, hi + shift_hi)))
            c = max(sym_diff_measure(a, b) for a, b in zip(A, B))
            assert sym_diff_measure(intersect_all(A), intersect_all(B)) <= 2 * c + 1e-12
