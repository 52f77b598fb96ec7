import itertools
import math

import numpy as np
import pytest

from src.core.exceptions import InvalidInputError
from src.models.allocation import Allocation, budget_units
from src.services.allocation_service import (
    LossOracle,
    best_singleton,
    composition_array,
    empirical_loss,
    enumerate_compositions,
    exhaustive_search,
    stepwise_optimize,
)
from src.services.quantile_service import augmented_quantile
from src.services.score_service import external_holdout, sublevel_from_geometry
from src.services.set_service import intersect_all, measure

from .factories import random_centered, random_external


def oracle_for(holdout, alpha=0.1):
    budget = budget_units(alpha, holdout.n)
    return LossOracle.from_holdout(holdout, budget), budget


def direct_loss(holdout, units):
    """Loss built from explicit interval sets, without the threshold table"""
    thresholds = [
        augmented_quantile(holdout.scores.column(k), u / holdout.n) if u > 0 else math.inf
        for k, u in enumerate(units)
    ]
    g = holdout.geometry
    sizes = []
    for i in range(g.m):
        sets = [
            sublevel_from_geometry(g.lower[i, k], g.upper[i, k], g.slope[i, k], t)
            for k, t in enumerate(thresholds)
        ]
        sizes.append(measure(intersect_all(sets)))
    return float(np.mean(sizes))


def naive_search(holdout, budget):
    best_units, best_loss = None, math.inf
    candidates = [u for u in itertools.product(range(budget + 1), repeat=holdout.K) if sum(u) == budget]
    # Descending lexicographic order puts budget on low indices first
    for units in sorted(candidates, reverse=True):
        loss = direct_loss(holdout, units)
        if loss < best_loss - 1e-12:
            best_units, best_loss = units, loss
    return best_units, best_loss


class TestCompositions:
    def test_two_parts(self):
        assert list(enumerate_compositions(2, 2)) == [(0, 2), (1, 1), (2, 0)]

    def test_single_part(self):
        assert list(enumerate_compositions(1, 5)) == [(5,)]

    def test_count(self):
        assert sum(1 for _ in enumerate_compositions(4, 30)) == 5456

    def test_zero_budget(self):
        assert list(enumerate_compositions(3, 0)) == [(0, 0, 0)]

    def test_array_is_descending(self):
        array = composition_array(3, 4)
        assert tuple(array[0]) == (4, 0, 0)
        assert tuple(array[-1]) == (0, 0, 4)

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            list(enumerate_compositions(0, 3))


class TestEmpiricalLoss:
    def test_single_residual_score(self, rng):
        holdout = random_external(rng, 40, 1)
        oracle, budget = oracle_for(holdout)
        q = augmented_quantile(holdout.scores.column(0), budget / 40)
        assert empirical_loss(oracle, Allocation((budget,), 40)) == pytest.approx(2 * q)

    def test_zero_units_is_unbounded(self, rng):
        oracle, _ = oracle_for(random_external(rng, 40, 2))
        assert empirical_loss(oracle, Allocation.zeros(2, 40)) == math.inf

    def test_identical_columns_match_direct_construction(self):
        column = np.array([[0.3], [1.2], [0.7], [2.0], [0.1]])
        holdout = external_holdout(np.hstack([column, column]))
        oracle = LossOracle.from_holdout(holdout, 2)
        for units in [(2, 0), (1, 1), (0, 2)]:
            assert empirical_loss(oracle, Allocation(units, 5)) == pytest.approx(direct_loss(holdout, units))

    def test_table_matches_direct_construction(self, rng):
        holdout = random_centered(rng, 30, 3)
        oracle, budget = oracle_for(holdout, 0.2)
        for units in enumerate_compositions(3, budget):
            assert empirical_loss(oracle, Allocation(units, 30)) == pytest.approx(direct_loss(holdout, units))

    def test_wrong_grid_rejected(self, rng):
        oracle, budget = oracle_for(random_external(rng, 40, 2))
        with pytest.raises(InvalidInputError):
            empirical_loss(oracle, Allocation((budget, 0), 41))


class TestExhaustiveSearch:
    def test_single_score_takes_full_budget(self, rng):
        oracle, budget = oracle_for(random_external(rng, 50, 1))
        assert exhaustive_search(oracle, [0], budget).allocation.units == (budget,)

    def test_identical_columns_break_ties_to_lowest_index(self, rng):
        column = np.abs(rng.standard_normal((50, 1)))
        oracle, budget = oracle_for(external_holdout(np.hstack([column, column])))
        assert exhaustive_search(oracle, [0, 1], budget).allocation.units == (budget, 0)

    def test_matches_naive_enumeration(self, rng):
        for _ in range(3):
            holdout = random_centered(rng, 50, 3)
            oracle, budget = oracle_for(holdout)
            result = exhaustive_search(oracle, range(3), budget)
            units, loss = naive_search(holdout, budget)
            assert result.allocation.units == units
            assert result.loss == pytest.approx(loss, abs=1e-12)

    def test_restricted_support(self, rng):
        oracle, budget = oracle_for(random_centered(rng, 50, 4))
        result = exhaustive_search(oracle, [1, 3], budget)
        assert result.allocation.units[0] == 0 and result.allocation.units[2] == 0


class TestStepwise:
    def test_delegates_to_exhaustive_when_k_is_small(self, rng):
        oracle, budget = oracle_for(random_centered(rng, 60, 3))
        stepwise = stepwise_optimize(oracle, budget, k_max=4)
        exhaustive = exhaustive_search(oracle, range(3), budget)
        assert stepwise.allocation == exhaustive.allocation
        assert stepwise.loss == exhaustive.loss

    def test_identical_columns_stop_after_one_step(self, rng):
        column = np.abs(rng.standard_normal((50, 1)))
        oracle, budget = oracle_for(external_holdout(np.hstack([column] * 5)))
        result = stepwise_optimize(oracle, budget, k_max=2)
        assert result.support == (0,)
        assert len(result.trace) == 1

    def test_support_cap(self, rng):
        oracle, budget = oracle_for(random_centered(rng, 100, 7))
        assert len(stepwise_optimize(oracle, budget, k_max=2).support) <= 2

    def test_equals_exhaustive_when_cap_covers_all_scores(self, rng):
        for _ in range(100):
            oracle, budget = oracle_for(random_centered(rng, 50, 3))
            assert stepwise_optimize(oracle, budget, k_max=3).loss == exhaustive_search(oracle, range(3), budget).loss

    def test_close_to_exhaustive_with_small_cap(self, rng):
        check_capped_gap(rng, 30)

    @pytest.mark.slow
    def test_close_to_exhaustive_with_small_cap_full(self, rng):
        check_capped_gap(rng, 100)

    def test_invalid_options(self, rng):
        oracle, budget = oracle_for(random_external(rng, 20, 2))
        with pytest.raises(InvalidInputError):
            stepwise_optimize(oracle, budget, k_max=0)


def check_capped_gap(rng, instances):
    """Stepwise with k_max=3 against the global optimum over K=6 scores"""
    gaps = []
    for _ in range(instances):
        oracle, budget = oracle_for(random_centered(rng, 50, 6))
        stepwise = stepwise_optimize(oracle, budget, k_max=3).loss
        exhaustive = exhaustive_search(oracle, range(6), budget).loss
        assert stepwise >= exhaustive - 1e-12
        gaps.append((stepwise - exhaustive) / exhaustive)
    assert np.mean(gaps) <= 0.05


def check_dominance(rng, instances):
    for _ in range(instances):
        K = int(rng.integers(2, 9))
        n = int(rng.integers(50, 301))
        oracle, budget = oracle_for(random_centered(rng, n, K))
        cola = stepwise_optimize(oracle, budget).loss
        singles = [oracle.batch_losses((k,), np.array([[budget]]))[0] for k in range(K)]
        efcp = best_singleton(oracle, budget).loss
        assert cola <= efcp + 1e-12
        assert efcp <= min(singles) + 1e-12


def test_stepwise_dominates_singletons(rng):
    check_dominance(rng, 15)


@pytest.mark.slow
def test_stepwise_dominates_singletons_full(rng):
    check_dominance(rng, 100)
