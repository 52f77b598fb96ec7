"""Kernel similarity weights and bandwidth calibration for localized sets"""
import logging
import math
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from ..core.exceptions import CalibrationError, DegenerateWeightsError, InvalidInputError
from ..core.logging_config import get_event_logger
from ..models.kernel import KernelKind, KernelSpec, WeightVector

logger = logging.getLogger(__name__)
events = get_event_logger(__name__)

# Raw similarity mass below this is treated as numerically zero
DEGENERACY_FLOOR = 1e-300
BISECTION_STEPS = 60
BRACKET = (1e-6, 1e6)
ESS_TOLERANCE = 0.01


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X.reshape(-1, 1) if X.ndim == 1 else X


def _distances(X_holdout, x_new) -> np.ndarray:
    X = _as_matrix(X_holdout)
    x = np.asarray(x_new, dtype=float).reshape(1, -1)
    if x.shape[1] != X.shape[1]:
        raise InvalidInputError(f"Feature dimensions differ: holdout {X.shape[1]}, point {x.shape[1]}")
    return cdist(X, x).ravel()


def _similarities(distances: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    if kernel.kind is not KernelKind.LAPLACE:
        raise InvalidInputError(f"Unsupported kernel {kernel.kind}")
    return np.exp(-distances / kernel.bandwidth)


def _check_mass(raw_sum: float, kernel: KernelSpec) -> None:
    if raw_sum < DEGENERACY_FLOOR:
        raise DegenerateWeightsError(
            f"Kernel similarities vanish (sum {raw_sum:.3g}) at bandwidth {kernel.bandwidth:.3g}; "
            "use a larger bandwidth"
        )


def kernel_weights(X_holdout, x_new, kernel: KernelSpec) -> WeightVector:
    """w_i ∝ exp(-||X_i - x_new|| / h), normalized"""
    distances = _distances(X_holdout, x_new)
    raw = _similarities(distances, kernel)
    raw_sum = float(raw.sum())
    _check_mass(raw_sum, kernel)
    # Shift by the nearest distance before exponentiating; the ratio is unchanged
    shifted = np.exp(-(distances - distances.min()) / kernel.bandwidth)
    return WeightVector(shifted / shifted.sum(), raw_sum)


def _ess_from_distances(distances: np.ndarray, bandwidth: float) -> np.ndarray:
    """ESS per column of a distance matrix (rows: holdout, columns: probes)"""
    shifted = np.exp(-(distances - distances.min(axis=0, keepdims=True)) / bandwidth)
    return shifted.sum(axis=0) ** 2 / (shifted**2).sum(axis=0)


def effective_sample_size(X_holdout, x_new, kernel: KernelSpec) -> float:
    """(Σ H_i)^2 / Σ H_i^2 on unnormalized similarities"""
    distances = _distances(X_holdout, x_new)
    _check_mass(float(_similarities(distances, kernel).sum()), kernel)
    return float(_ess_from_distances(distances[:, None], kernel.bandwidth)[0])


def bandwidth_rate(n: int, d: int) -> float:
    """n^(-1/(d+2))"""
    return n ** (-1.0 / (d + 2))


def calibrate_bandwidth(X_holdout, target_ess: float, probe_points: Optional[np.ndarray] = None) -> float:
    """Bandwidth h = c n^(-1/(d+2)) whose mean ESS over the probes matches target_ess.

    Mean ESS increases with h, so c is found by bisection on a log scale over
    a bracket proportional to the data scale.
    """
    X = _as_matrix(X_holdout)
    n, d = X.shape
    if not target_ess > 1:
        raise InvalidInputError(f"target_ess must exceed 1, got {target_ess}")
    probes = X if probe_points is None else _as_matrix(probe_points)

    scale = float(np.mean(X.std(axis=0)))
    if not scale > 0:
        scale = 1.0
    rate = bandwidth_rate(n, d)
    distances = cdist(X, probes)

    def mean_ess(c: float) -> float:
        return float(np.mean(_ess_from_distances(distances, c * rate)))

    lo, hi = BRACKET[0] * scale, BRACKET[1] * scale
    if target_ess >= n:
        events.warning("bandwidth_near_uniform", target_ess=target_ess, n=n)
        return hi * rate

    ess_lo, ess_hi = mean_ess(lo), mean_ess(hi)
    if not ess_lo <= target_ess <= ess_hi:
        raise CalibrationError(
            f"Target ESS {target_ess} unreachable: achievable range [{ess_lo:.4g}, {ess_hi:.4g}]"
        )

    for _ in range(BISECTION_STEPS):
        mid = math.sqrt(lo * hi)
        if mean_ess(mid) < target_ess:
            lo = mid
        else:
            hi = mid

    c = math.sqrt(lo * hi)
    achieved = mean_ess(c)
    if abs(achieved - target_ess) > ESS_TOLERANCE * target_ess:
        raise CalibrationError(
            f"Bandwidth calibration stalled at mean ESS {achieved:.4g} for target {target_ess}"
        )
    events.info("bandwidth_calibrated", c=c, bandwidth=c * rate, mean_ess=achieved, target=target_ess)
    return c * rate
