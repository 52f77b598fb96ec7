"""Builders for random test inputs"""
import numpy as np

from src.services.score_service import external_holdout


def linear_mean(coef: float):
    return lambda X: coef * np.asarray(X, dtype=float)[:, 0]


def random_external(rng, n: int, K: int):
    """Concentric external holdout with heterogeneous score scales"""
    scales = rng.uniform(0.5, 2.0, size=K)
    values = np.abs(rng.standard_normal((n, K))) * scales
    return external_holdout(values)


def random_centered(rng, n: int, K: int):
    """External holdout whose scores carry distinct per-row centers"""
    values = np.abs(rng.standard_normal((n, K))) * rng.uniform(0.5, 2.0, size=K)
    centers = rng.standard_normal((n, K))
    return external_holdout(values, centers=centers)
