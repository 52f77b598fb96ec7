import math

import numpy as np
import pytest

from src.core.exceptions import InvalidInputError
from src.services.quantile_service import (
    augmented_quantile,
    augmented_quantile_table,
    conformal_p_value,
    conformal_p_values_sorted,
    weighted_quantile,
    weighted_quantile_table,
)


class TestAugmentedQuantile:
    def test_median_rank(self):
        assert augmented_quantile([1, 2, 3, 4], 0.5) == 3.0

    def test_zero_alpha_is_infinite(self):
        assert augmented_quantile([1, 2, 3, 4], 0.0) == math.inf

    def test_single_value(self):
        assert augmented_quantile([7], 0.5) == 7.0

    def test_alpha_one_is_empty_set_threshold(self):
        assert augmented_quantile([1, 2, 3], 1.0) == -math.inf

    def test_level_outside_unit_interval(self):
        with pytest.raises(InvalidInputError):
            augmented_quantile([1, 2], 1.5)

    def test_exact_grid_levels_are_not_lost_to_rounding(self):
        # (1 - 0.3)(9 + 1) = 7: rank 7, not 8
        values = np.arange(1, 10, dtype=float)
        assert augmented_quantile(values, 0.3) == 7.0

    def test_table_matches_pointwise(self, rng):
        values = rng.standard_normal(37)
        table = augmented_quantile_table(values, 37, 5)
        assert table[0] == math.inf
        for u in range(1, 6):
            assert table[u] == augmented_quantile(values, u / 37)

    def test_monotone_in_alpha(self, rng):
        values = rng.standard_normal(100)
        table = augmented_quantile_table(values, 100, 30)
        assert np.all(np.diff(table) <= 0)


def brute_force_weighted_quantile(values, weights, alpha):
    order = sorted(range(len(values)), key=lambda i: values[i])
    total = 0.0
    for i in order:
        total += weights[i]
        if total >= 1 - alpha - 1e-12:
            return values[i]
    return values[order[-1]]


class TestWeightedQuantile:
    def test_hand_example(self):
        assert weighted_quantile([1, 2, 3], [0.5, 0.3, 0.2], 0.4) == 2.0

    def test_uniform_weights_give_empirical_quantile(self, rng):
        values = rng.standard_normal(20)
        # smallest t with at least 16 of 20 values <= t
        assert weighted_quantile(values, np.full(20, 0.05), 0.2) == np.sort(values)[15]

    def test_point_mass(self):
        assert weighted_quantile([4, 9, 1], [0, 1, 0], 0.9) == 9.0

    def test_weights_must_sum_to_one(self):
        with pytest.raises(InvalidInputError):
            weighted_quantile([1, 2], [0.5, 0.6], 0.1)

    def test_negative_weights_rejected(self):
        with pytest.raises(InvalidInputError):
            weighted_quantile([1, 2], [1.5, -0.5], 0.1)

    def test_matches_brute_force(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 15))
            values = list(rng.integers(0, 6, size=n).astype(float))
            raw = rng.random(n)
            weights = raw / raw.sum()
            alpha = float(rng.random())
            assert weighted_quantile(values, weights, alpha) == brute_force_weighted_quantile(
                values, list(weights), alpha
            )

    def test_table_matches_pointwise(self, rng):
        values = rng.standard_normal(40)
        raw = rng.random(40)
        weights = raw / raw.sum()
        table = weighted_quantile_table(values, weights, 40, 8)
        assert table[0] == math.inf
        for u in range(1, 9):
            assert table[u] == weighted_quantile(values, weights, u / 40)


class TestConformalPValue:
    def test_extreme_score(self):
        assert conformal_p_value([1, 2, 3], 10.0) == pytest.approx(0.25)

    def test_smallest_score(self):
        assert conformal_p_value([1, 2, 3], 0.0) == 1.0

    def test_ties_count(self):
        assert conformal_p_value([1, 2, 3], 2.0) == pytest.approx(0.75)

    def test_vectorized(self, rng):
        calibration = rng.standard_normal(30)
        new = rng.standard_normal(10)
        expected = [conformal_p_value(calibration, s) for s in new]
        np.testing.assert_allclose(conformal_p_values_sorted(np.sort(calibration), new), expected)


class TestQuantileProperties:
    def test_uniform_weights_with_infinite_point_match_augmented(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 61))
            alpha = rng.uniform(0.01, 0.5)
            values = rng.standard_normal(n)
            augmented = np.append(values, math.inf)
            weights = np.full(n + 1, 1.0 / (n + 1))
            assert weighted_quantile(augmented, weights, alpha) == augmented_quantile(values, alpha)

    @pytest.mark.parametrize("n, alpha", [(19, 0.1), (50, 0.2)])
    def test_exchangeable_scores_are_covered(self, n, alpha, rng):
        replications = 10_000
        scores = rng.standard_normal((replications, n + 1))
        covered = np.array([row[n] <= augmented_quantile(row[:n], alpha) for row in scores])
        se = math.sqrt(alpha * (1 - alpha) / replications)
        assert covered.mean() >= 1 - alpha - 3 * se
