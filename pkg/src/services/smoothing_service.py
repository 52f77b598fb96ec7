"""
Smoothing-based allocation: Gaussian-kernel smoothed quantiles, log-sum-exp
soft min/max, and projected gradient descent on the scaled simplex
"""
import logging
import math
from typing import Tuple

import numpy as np
from scipy import optimize, special, stats

from ..core.exceptions import InvalidInputError, NumericalError
from ..models.allocation import Allocation, AllocationResult, SmoothingParams, TraceStep
from .allocation_service import LossOracle, empirical_loss

logger = logging.getLogger(__name__)

_BRACKET_WIDTHS = 10.0
_BISECTION_STEPS = 60
_NEWTON_STEPS = 3


def silverman_bandwidths(calibration: np.ndarray) -> Tuple[float, ...]:
    """tau_2k = sd_k * n^(-1/5) for each score column"""
    calibration = np.asarray(calibration, dtype=float)
    n = calibration.shape[0]
    sd = calibration.std(axis=0, ddof=1) if n > 1 else np.zeros(calibration.shape[1])
    return tuple(float(v) for v in np.maximum(sd, 1e-8) * n ** (-0.2))


def default_smoothing_params(oracle: LossOracle, tau1: float = 20.0, max_iter: int = 500) -> SmoothingParams:
    if oracle.calibration is None:
        raise InvalidInputError("Smoothing needs the calibration scores of the oracle")
    return SmoothingParams(tau2=silverman_bandwidths(oracle.calibration), tau1=tau1, max_iter=max_iter)


def smoothed_cdf(scores_k, tau2_k: float, s: float) -> float:
    """F(s) = mean_i Φ((s - S_i) / tau)"""
    if tau2_k <= 0:
        raise InvalidInputError(f"Bandwidth must be positive, got {tau2_k}")
    scores_k = np.asarray(scores_k, dtype=float)
    return float(stats.norm.cdf((s - scores_k) / tau2_k).mean())


def smoothed_quantile(scores_k, tau2_k: float, alpha_k: float) -> float:
    """The s with F(s) = 1 - alpha_k, by bisection to 1e-10"""
    if not 0.0 < alpha_k < 1.0:
        raise InvalidInputError(f"alpha_k must lie in (0, 1), got {alpha_k}")
    scores_k = np.asarray(scores_k, dtype=float)
    lo = scores_k.min() - _BRACKET_WIDTHS * tau2_k
    hi = scores_k.max() + _BRACKET_WIDTHS * tau2_k
    target = 1.0 - alpha_k

    def gap(s: float) -> float:
        return smoothed_cdf(scores_k, tau2_k, s) - target

    if gap(lo) > 0 or gap(hi) < 0:
        raise NumericalError(f"Smoothed quantile at level {target} is outside [{lo}, {hi}]")
    return float(optimize.bisect(gap, lo, hi, xtol=1e-10, maxiter=200))


def smoothed_quantiles(calibration: np.ndarray, tau2: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Vectorized smoothed quantiles of every column at levels 1 - alphas.

    Bisection brackets the root, a few guarded Newton steps polish it to
    machine precision.
    """
    calibration = np.asarray(calibration, dtype=float)
    tau2 = np.asarray(tau2, dtype=float)
    target = 1.0 - np.asarray(alphas, dtype=float)
    n = calibration.shape[0]

    lo = calibration.min(axis=0) - _BRACKET_WIDTHS * tau2
    hi = calibration.max(axis=0) + _BRACKET_WIDTHS * tau2

    def cdf(s: np.ndarray) -> np.ndarray:
        return special.ndtr((s[None, :] - calibration) / tau2[None, :]).mean(axis=0)

    if np.any(cdf(lo) > target) or np.any(cdf(hi) < target):
        raise NumericalError("Smoothed quantile level outside the bracket")

    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        below = cdf(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)

    s = 0.5 * (lo + hi)
    for _ in range(_NEWTON_STEPS):
        density = stats.norm.pdf((s[None, :] - calibration) / tau2[None, :]).sum(axis=0) / (n * tau2)
        step = np.where(density > 0, (cdf(s) - target) / np.maximum(density, 1e-300), 0.0)
        s = np.clip(s - step, lo, hi)
    return s


def soft_max(values: np.ndarray, tau1: float, axis: int = -1) -> np.ndarray:
    """tau1^-1 log Σ exp(tau1 v)"""
    return special.logsumexp(tau1 * np.asarray(values, dtype=float), axis=axis) / tau1


def soft_min(values: np.ndarray, tau1: float, axis: int = -1) -> np.ndarray:
    """-tau1^-1 log Σ exp(-tau1 v)"""
    return -soft_max(-np.asarray(values, dtype=float), tau1, axis=axis)


def smooth_loss_and_gradient(
    oracle: LossOracle, alloc_real: np.ndarray, params: SmoothingParams
) -> Tuple[float, np.ndarray]:
    """Smoothed empirical loss and its gradient with respect to the shares.

    Each set is [lower - slope·q, upper + slope·q]; the intersection length is
    approximated by soft-min of upper ends minus soft-max of lower ends.
    """
    if oracle.calibration is None:
        raise InvalidInputError("Smoothing needs the calibration scores of the oracle")
    alphas = np.clip(np.asarray(alloc_real, dtype=float), params.alpha_floor, 1.0 - params.alpha_floor)
    tau2 = np.asarray(params.tau2)
    calibration = oracle.calibration
    n = calibration.shape[0]
    geometry = oracle.geometry

    q = smoothed_quantiles(calibration, tau2, alphas)
    lower_ends = geometry.lower - geometry.slope * q[None, :]
    upper_ends = geometry.upper + geometry.slope * q[None, :]

    tau1 = params.tau1
    loss = float(np.mean(soft_min(upper_ends, tau1, axis=1) - soft_max(lower_ends, tau1, axis=1)))

    # Partials of the soft extremes are softmax weights
    w_max = special.softmax(tau1 * lower_ends, axis=1)
    w_min = special.softmax(-tau1 * upper_ends, axis=1)
    d_loss_d_q = np.mean((w_min + w_max) * geometry.slope, axis=0)

    # Inverse-function rule for F(q) = 1 - alpha
    density_sum = stats.norm.pdf((q[None, :] - calibration) / tau2[None, :]).sum(axis=0)
    d_q_d_alpha = -n * tau2 / np.maximum(density_sum, 1e-300)
    return loss, d_loss_d_q * d_q_d_alpha


def project_simplex(v: np.ndarray, z: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, Σ x = z} (sort-based)"""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - z
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def round_to_grid(alphas: np.ndarray, budget: int) -> Tuple[int, ...]:
    """Largest-remainder rounding of continuous shares to integer units summing to budget"""
    alphas = np.maximum(np.asarray(alphas, dtype=float), 0.0)
    total = alphas.sum()
    if budget == 0 or total <= 0:
        units = np.zeros(alphas.size, dtype=int)
        if budget > 0:
            units[0] = budget
        return tuple(int(u) for u in units)
    exact = alphas * budget / total
    units = np.floor(exact).astype(int)
    remainder = budget - int(units.sum())
    order = np.argsort(-(exact - units), kind="stable")
    units[order[:remainder]] += 1
    return tuple(int(u) for u in units)


def projected_gradient_optimize(
    oracle: LossOracle, params: SmoothingParams, budget_alpha: float
) -> AllocationResult:
    """Projected gradient descent on the smoothed loss, rounded back to the grid.

    The reported loss is the exact empirical loss of the rounded allocation.
    """
    K = oracle.K
    if K < 2:
        raise InvalidInputError("Smoothing optimization needs at least two scores")
    if len(params.tau2) != K:
        raise InvalidInputError(f"Expected {K} bandwidths, got {len(params.tau2)}")

    upper = max(budget_alpha, params.alpha_floor)
    alphas = np.full(K, budget_alpha / K)
    best_alphas, best_loss = alphas, math.inf
    trace = []

    for iteration in range(1, params.max_iter + 1):
        loss, grad = smooth_loss_and_gradient(oracle, np.clip(alphas, params.alpha_floor, upper), params)
        if loss < best_loss:
            best_alphas, best_loss = alphas, loss
        scale = np.max(np.abs(grad))
        if not np.isfinite(scale) or scale == 0:
            break
        step = params.step_size * budget_alpha / math.sqrt(iteration)
        updated = project_simplex(alphas - step * grad / scale, budget_alpha)
        moved = float(np.linalg.norm(updated - alphas))
        alphas = updated
        if moved < params.tol:
            break
        if iteration % 50 == 0:
            trace.append(TraceStep(iteration, None, loss))

    loss, _ = smooth_loss_and_gradient(oracle, np.clip(alphas, params.alpha_floor, upper), params)
    if loss < best_loss:
        best_alphas, best_loss = alphas, loss

    units = round_to_grid(best_alphas, oracle.max_units)
    allocation = Allocation(units, oracle.n_grid)
    exact = empirical_loss(oracle, allocation)
    logger.debug("Smoothing finished: smooth loss %.6g, exact loss %.6g", best_loss, exact)
    return AllocationResult(allocation, exact, tuple(trace))
