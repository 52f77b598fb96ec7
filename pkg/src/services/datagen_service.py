"""
Synthetic data-generating processes.

Every generator is a deterministic function of (case, sizes, seed): one
numpy PCG64 generator draws the train, holdout and test samples in that
order, with Gaussian variates from numpy's ziggurat sampler.
"""
import logging
from typing import Tuple

import numpy as np
from scipy.linalg import toeplitz

from ..core.exceptions import InvalidInputError
from ..models.dataset import CaseId, Dataset, DatasetTriple, Role

logger = logging.getLogger(__name__)

CASE12_DIM = 5
CASE12_CORRELATION = 0.5
# Noise parameters are variances: N(0, 0.01) means standard deviation 0.1
CASE1_NOISE_VARIANCE = 0.01
CASE2_NOISE_SCALE = 0.03
CASE3_DIM = 100
CASE3_ACTIVE_EVERY = 20
INDIVIDUAL_RANGE = (-2.0, 2.0)


def parse_case(case) -> CaseId:
    try:
        return CaseId(str(case))
    except ValueError as e:
        valid = ", ".join(c.value for c in CaseId)
        raise InvalidInputError(f"Unknown case '{case}'; expected one of {valid}") from e


def case12_covariance(d: int = CASE12_DIM) -> np.ndarray:
    """Sigma_ij = 0.5^|i - j|"""
    return toeplitz(CASE12_CORRELATION ** np.arange(d))


def case3_coefficients(d: int = CASE3_DIM) -> np.ndarray:
    """beta_j = 1 when the 1-indexed j is a multiple of 20"""
    j = np.arange(1, d + 1)
    return (j % CASE3_ACTIVE_EVERY == 0).astype(float)


def case12_mean(X: np.ndarray) -> np.ndarray:
    return (X[:, 0] + X[:, 1] + X[:, 2] > 0).astype(float)


def individual_mean(x: np.ndarray) -> np.ndarray:
    """x on (-1, 1), saturating at ±1 outside"""
    return np.clip(x, -1.0, 1.0)


def individual_noise_sd(x: np.ndarray) -> np.ndarray:
    return 0.25 + 0.25 * np.abs(x)


def sample_features(case: CaseId, n: int, rng: np.random.Generator) -> np.ndarray:
    if case in (CaseId.CASE1, CaseId.CASE2):
        chol = np.linalg.cholesky(case12_covariance())
        return rng.standard_normal((n, CASE12_DIM)) @ chol.T
    if case is CaseId.CASE3:
        return rng.standard_normal((n, CASE3_DIM))
    return rng.uniform(*INDIVIDUAL_RANGE, size=(n, 1))


def sample_labels(case: CaseId, X: np.ndarray, rng: np.random.Generator, noise: bool = True) -> np.ndarray:
    """Labels y = mu(X) + eps for the given features"""
    n = X.shape[0]
    if case is CaseId.CASE1:
        mean, sd = case12_mean(X), np.full(n, np.sqrt(CASE1_NOISE_VARIANCE))
    elif case is CaseId.CASE2:
        mean, sd = case12_mean(X), CASE2_NOISE_SCALE * np.abs(X[:, 0])
    elif case is CaseId.CASE3:
        mean, sd = X @ case3_coefficients(X.shape[1]), np.ones(n)
    else:
        mean, sd = individual_mean(X[:, 0]), individual_noise_sd(X[:, 0])

    eps = rng.standard_normal(n)
    if not noise:
        return mean
    return mean + sd * eps


def _sample(case: CaseId, n: int, role: Role, rng: np.random.Generator, seed: int, noise: bool) -> Dataset:
    X = sample_features(case, n, rng)
    return Dataset(X, sample_labels(case, X, rng, noise), role, case, seed)


def generate(case, sizes: Tuple[int, int, int], seed: int, noise: bool = True) -> DatasetTriple:
    """Draw (train, holdout, test) samples of the given sizes.

    Args:
        case: case id ("1", "2", "3" or "individual")
        sizes: (n_train, n_holdout, n_test)
        seed: seed of the PCG64 generator
        noise: draw labels with noise (False returns the regression function)

    Returns:
        DatasetTriple
    """
    case = parse_case(case)
    if len(sizes) != 3 or any(int(s) < 1 for s in sizes):
        raise InvalidInputError(f"Sample sizes must be three positive integers, got {sizes}")

    rng = np.random.default_rng(seed)
    n_train, n_holdout, n_test = (int(s) for s in sizes)
    return DatasetTriple(
        train=_sample(case, n_train, Role.TRAIN, rng, seed, noise),
        holdout=_sample(case, n_holdout, Role.HOLDOUT, rng, seed, noise),
        test=_sample(case, n_test, Role.TEST, rng, seed, noise),
    )


def sample_conditional(case, x: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Fresh labels drawn at a fixed one-dimensional location"""
    case = parse_case(case)
    if case is not CaseId.INDIVIDUAL:
        raise InvalidInputError("Conditional sampling is defined for the individualized case only")
    X = np.full((count, 1), float(x))
    return sample_labels(case, X, rng)
