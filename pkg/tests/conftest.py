"""Shared fixtures and the --runslow switch"""
import numpy as np
import pytest

from src.core.logging_config import setup_logging
from src.models.score import ScoreKind, ScoreSpec
from src.services.score_service import build_holdout

from .factories import linear_mean


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-scale Monte Carlo checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-scale Monte Carlo check, needs --runslow")
    setup_logging("WARNING")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def residual_specs():
    """Two residual scores around different linear fits of a 1-D feature"""
    return (
        ScoreSpec(ScoreKind.RESIDUAL, name="exact", mu=linear_mean(1.0)),
        ScoreSpec(ScoreKind.RESIDUAL, name="biased", mu=linear_mean(0.5)),
    )


@pytest.fixture
def linear_holdout(rng, residual_specs):
    """y = x + N(0, 0.25^2) on 80 points with the two residual scores"""
    X = rng.uniform(-2, 2, size=(80, 1))
    y = X[:, 0] + 0.25 * rng.standard_normal(80)
    return build_holdout(residual_specs, X, y)
