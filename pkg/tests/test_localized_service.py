import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from src.core.exceptions import CalibrationError, DegenerateWeightsError, InvalidInputError
from src.models.kernel import KernelSpec
from src.services.localized_service import (
    bandwidth_rate,
    calibrate_bandwidth,
    effective_sample_size,
    kernel_weights,
)


class TestKernelWeights:
    def test_identical_points_give_uniform_weights(self):
        X = np.ones((5, 2))
        weights = kernel_weights(X, np.ones(2), KernelSpec(0.3))
        np.testing.assert_allclose(weights.w, np.full(5, 0.2))

    def test_two_point_example(self):
        h = 0.7
        X = np.array([[0.0], [h * math.log(4)]])
        weights = kernel_weights(X, np.zeros(1), KernelSpec(h))
        np.testing.assert_allclose(weights.w, [0.8, 0.2])
        assert weights.raw_sum == pytest.approx(1.25)

    def test_joint_rescaling_leaves_weights_unchanged(self, rng):
        X = rng.standard_normal((30, 3))
        x = rng.standard_normal(3)
        base = kernel_weights(X, x, KernelSpec(0.5)).w
        scaled = kernel_weights(4 * X, 4 * x, KernelSpec(2.0)).w
        np.testing.assert_allclose(base, scaled)

    def test_weights_are_read_only(self):
        weights = kernel_weights(np.zeros((2, 1)), np.zeros(1), KernelSpec(1.0))
        with pytest.raises(ValueError):
            weights.w[0] = 1.0

    def test_far_point_is_degenerate(self):
        with pytest.raises(DegenerateWeightsError):
            kernel_weights(np.array([[1e4]]), np.zeros(1), KernelSpec(1.0))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            kernel_weights(np.zeros((3, 2)), np.zeros(3), KernelSpec(1.0))

    def test_bandwidth_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            KernelSpec(0.0)


class TestEffectiveSampleSize:
    def test_identical_points(self):
        assert effective_sample_size(np.zeros((7, 1)), np.zeros(1), KernelSpec(1.0)) == pytest.approx(7.0)

    def test_one_vanishing_similarity(self):
        X = np.array([[0.0], [0.0], [1e6]])
        assert effective_sample_size(X, np.zeros(1), KernelSpec(1.0)) == pytest.approx(2.0)

    def test_bounded_by_n(self, rng):
        X = rng.standard_normal((50, 2))
        ess = effective_sample_size(X, np.zeros(2), KernelSpec(0.4))
        assert 1.0 <= ess <= 50.0


class TestCalibration:
    def test_rate(self):
        assert bandwidth_rate(16, 2) == pytest.approx(0.5)

    def test_target_at_n_returns_upper_bracket(self, rng):
        X = rng.standard_normal((40, 1))
        h = calibrate_bandwidth(X, 40)
        scale = float(X.std(axis=0).mean())
        assert h == pytest.approx(1e6 * scale * bandwidth_rate(40, 1))

    def test_reaches_target_mean_ess(self, rng):
        X = rng.standard_normal((2000, 2))
        h = calibrate_bandwidth(X, 200)
        similarities = np.exp(-cdist(X, X) / h)
        ess = similarities.sum(axis=0) ** 2 / (similarities**2).sum(axis=0)
        assert 198 <= ess.mean() <= 202

    def test_separate_probe_points(self, rng):
        X = rng.standard_normal((300, 1))
        probes = np.linspace(-1, 1, 11).reshape(-1, 1)
        h = calibrate_bandwidth(X, 30, probe_points=probes)
        ess = [effective_sample_size(X, p, KernelSpec(h)) for p in probes]
        assert np.mean(ess) == pytest.approx(30, rel=0.01)

    def test_target_must_exceed_one(self, rng):
        with pytest.raises(InvalidInputError):
            calibrate_bandwidth(rng.standard_normal((10, 1)), 1.0)

    def test_unreachable_target(self):
        # two clusters of identical points: ESS never drops below the cluster size
        X = np.vstack([np.zeros((20, 1)), np.ones((20, 1))])
        with pytest.raises(CalibrationError):
            calibrate_bandwidth(X, 5)


def test_closer_points_get_larger_weights(rng):
    for _ in range(50):
        X = rng.standard_normal((100, 2))
        x_new = rng.standard_normal(2)
        weights = kernel_weights(X, x_new, KernelSpec(rng.uniform(0.5, 3))).w
        order = np.argsort(np.linalg.norm(X - x_new, axis=1))
        assert np.all(np.diff(weights[order]) < 0)


def test_doubling_features_doubles_bandwidth(rng):
    X = rng.standard_normal((200, 1))
    assert calibrate_bandwidth(2 * X, 20) == pytest.approx(2 * calibrate_bandwidth(X, 20), rel=1e-9)
