"""Nonconformity score evaluation, sublevel-set inversion and holdout assembly"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from ..core.exceptions import DataError, UnsupportedOperationError
from ..models.prediction_set import REAL_LINE, IntervalUnion
from ..models.score import (
    SIGMA_MIN,
    HoldoutData,
    IntervalGeometry,
    ScoreKind,
    ScoreMatrix,
    ScoreSpec,
)
from .set_service import normalize

logger = logging.getLogger(__name__)


def _as_rows(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        return X.reshape(1, 1)
    if X.ndim == 1:
        return X.reshape(1, -1)
    return X


def _require_evaluable(spec: ScoreSpec) -> None:
    if not spec.is_evaluable:
        raise UnsupportedOperationError(
            f"Score '{spec.name}' is external: it is known only through its score matrix"
        )


def evaluate_batch(spec: ScoreSpec, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Scores S(X_i, y_i) for every row"""
    _require_evaluable(spec)
    X = _as_rows(X)
    y = np.asarray(y, dtype=float).reshape(-1)

    if spec.kind is ScoreKind.RESIDUAL:
        return np.abs(y - spec.mu(X))
    if spec.kind is ScoreKind.RESCALED:
        sigma = np.maximum(spec.sigma(X), SIGMA_MIN)
        return np.abs(y - spec.mu(X)) / sigma
    # CQR: crossing quantile predictions are handled by the max
    return np.maximum(spec.tau_lo(X) - y, y - spec.tau_hi(X))


def score_evaluate(spec: ScoreSpec, x, y: float) -> float:
    """Score of a single hypothesized label y at feature vector x"""
    return float(evaluate_batch(spec, _as_rows(x), np.array([y]))[0])


def geometry_for(specs: Sequence[ScoreSpec], X: np.ndarray) -> IntervalGeometry:
    """Interval geometry of every spec at every row of X"""
    X = _as_rows(X)
    lower, upper, slope = [], [], []
    for spec in specs:
        _require_evaluable(spec)
        if spec.kind is ScoreKind.RESIDUAL:
            center = spec.mu(X)
            lower.append(center)
            upper.append(center)
            slope.append(np.ones(len(X)))
        elif spec.kind is ScoreKind.RESCALED:
            center = spec.mu(X)
            lower.append(center)
            upper.append(center)
            slope.append(np.maximum(spec.sigma(X), SIGMA_MIN))
        else:
            lower.append(spec.tau_lo(X))
            upper.append(spec.tau_hi(X))
            slope.append(np.ones(len(X)))
    return IntervalGeometry(
        np.column_stack(lower), np.column_stack(upper), np.column_stack(slope)
    )


def sublevel_from_geometry(lower: float, upper: float, slope: float, t: float) -> IntervalUnion:
    """The interval [lower - slope·t, upper + slope·t]; whole line for t = +∞"""
    if t == math.inf:
        return REAL_LINE
    return normalize([(lower - slope * t, upper + slope * t)])


def score_sublevel(spec: ScoreSpec, x, t: float) -> IntervalUnion:
    """{y : S(x, y) <= t}"""
    if spec.kind is ScoreKind.EXTERNAL:
        raise UnsupportedOperationError(
            f"Score '{spec.name}' is external: sets cannot be built at new points"
        )
    if t == math.inf:
        return REAL_LINE
    geometry = geometry_for([spec], _as_rows(x))
    return sublevel_from_geometry(
        geometry.lower[0, 0], geometry.upper[0, 0], geometry.slope[0, 0], t
    )


def build_score_matrix(specs: Sequence[ScoreSpec], X: np.ndarray, y: np.ndarray) -> ScoreMatrix:
    """Holdout score matrix with ``values[i, k] = S_k(X_i, y_i)``"""
    X = _as_rows(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(y) == 0:
        raise DataError("Cannot build a score matrix from empty data")
    if len(X) != len(y):
        raise DataError(f"Feature rows ({len(X)}) and labels ({len(y)}) differ in length")

    values = np.column_stack([evaluate_batch(spec, X, y) for spec in specs])
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        i, k = (int(v) for v in bad[0])
        raise DataError(f"Non-finite score at (i={i}, k={k}) for score '{specs[k].name}'")
    return ScoreMatrix(values, tuple(spec.name or f"s{k + 1}" for k, spec in enumerate(specs)))


def build_holdout(specs: Sequence[ScoreSpec], X: np.ndarray, y: np.ndarray) -> HoldoutData:
    """Scores plus interval geometry for labelled rows"""
    X = _as_rows(X)
    scores = build_score_matrix(specs, X, y)
    return HoldoutData(
        scores=scores,
        geometry=geometry_for(specs, X),
        X=X,
        y=np.asarray(y, dtype=float).reshape(-1),
        specs=tuple(specs),
    )


def external_holdout(
    values: np.ndarray,
    centers: Optional[np.ndarray] = None,
    labels: Optional[np.ndarray] = None,
    names: Sequence[str] = (),
) -> HoldoutData:
    """Holdout data for an ingested score matrix.

    Scores are read as residual-type. With ``centers`` each row's sets are
    centered at the supplied point predictions; without them all sets of a
    row share center 0.
    """
    scores = ScoreMatrix(values, tuple(names))
    if centers is None:
        centers = np.zeros_like(scores.values)
        logger.info("No center columns supplied; external sets are treated as concentric")
    centers = np.asarray(centers, dtype=float)
    if centers.shape != scores.values.shape:
        raise DataError(f"Center columns shape {centers.shape} does not match scores {scores.values.shape}")
    specs = tuple(ScoreSpec(ScoreKind.EXTERNAL, name=name) for name in scores.names)
    return HoldoutData(
        scores=scores,
        geometry=IntervalGeometry(centers, centers, np.ones_like(centers)),
        X=None,
        y=None if labels is None else np.asarray(labels, dtype=float),
        specs=specs,
    )
