"""
Built-in regressors and the score menus they realize
"""
import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from sklearn.linear_model import LinearRegression, Ridge
from sklearn.neighbors import KNeighborsRegressor, NearestNeighbors
from sklearn.tree import DecisionTreeRegressor

from ..core.exceptions import CapabilityError, InvalidInputError
from ..models.dataset import CaseId, Dataset, FittedModel, ModelKind
from ..models.score import SIGMA_MIN, ScoreKind, ScoreSpec

logger = logging.getLogger(__name__)

SINGULAR_RIDGE = 1e-8
DEFAULT_KNN_K = 10
DEFAULT_QUANTILE_K = 30
DEFAULT_RIDGE_LAMBDA = 0.1
CASE3_SUBSET_SIZE = 20
TREE_DEPTH = 3

_HANDLES = {
    ModelKind.OLS: ("mu",),
    ModelKind.RIDGE_SUBSET: ("mu",),
    ModelKind.KNN: ("mu",),
    ModelKind.TREE_STUMP: ("mu",),
    ModelKind.KNN_SCALE: ("sigma",),
    ModelKind.KNN_QUANTILE: ("tau_lo", "tau_hi"),
}


def _neighbors(n_train: int, k: int) -> int:
    if k < 1:
        raise InvalidInputError(f"Neighbor count must be positive, got {k}")
    return min(k, n_train)


def _fit_ols(train: Dataset) -> FittedModel:
    design = np.column_stack([np.ones(train.n), train.X])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        logger.warning("⚠️ Singular normal equations; falling back to ridge with lambda=%g", SINGULAR_RIDGE)
        estimator = Ridge(alpha=SINGULAR_RIDGE).fit(train.X, train.y)
        return FittedModel(ModelKind.OLS, estimator, train.d, {"lambda": SINGULAR_RIDGE}, fallback=True)
    return FittedModel(ModelKind.OLS, LinearRegression().fit(train.X, train.y), train.d)


def _fit_ridge_subset(train: Dataset, features: Optional[Sequence[int]], lam: float) -> FittedModel:
    features = tuple(range(train.d)) if features is None else tuple(int(j) for j in features)
    if not features or min(features) < 0 or max(features) >= train.d:
        raise InvalidInputError(f"Feature subset must lie in [0, {train.d}), got {features}")
    estimator = Ridge(alpha=lam).fit(train.X[:, list(features)], train.y)
    return FittedModel(ModelKind.RIDGE_SUBSET, estimator, train.d, {"lambda": lam}, features=features)


def _fit_knn_scale(train: Dataset, k: int) -> FittedModel:
    n_neighbors = _neighbors(train.n, k)
    mean = KNeighborsRegressor(n_neighbors=n_neighbors).fit(train.X, train.y)
    residuals = np.abs(train.y - mean.predict(train.X))
    scale = KNeighborsRegressor(n_neighbors=n_neighbors).fit(train.X, residuals)
    return FittedModel(ModelKind.KNN_SCALE, scale, train.d, {"k": n_neighbors})


def _fit_knn_quantile(train: Dataset, k: int, alpha: float) -> FittedModel:
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"Quantile levels need alpha in (0, 1), got {alpha}")
    n_neighbors = _neighbors(train.n, k)
    index = NearestNeighbors(n_neighbors=n_neighbors).fit(train.X)
    return FittedModel(
        ModelKind.KNN_QUANTILE,
        index,
        train.d,
        {"k": n_neighbors, "levels": (alpha / 2, 1 - alpha / 2)},
        train_y=train.y.copy(),
    )


def fit(kind, train: Dataset, **hyperparams) -> FittedModel:
    """Fit a built-in regressor.

    Args:
        kind: ModelKind or its value
        train: training sample
        **hyperparams: ``lam`` and ``features`` (ridge-subset), ``k`` (k-NN kinds),
            ``alpha`` (knn-quantile levels alpha/2 and 1 - alpha/2)

    Returns:
        FittedModel
    """
    kind = ModelKind(kind)
    if train.n < 1:
        raise InvalidInputError("Cannot fit a model on an empty training set")

    if kind is ModelKind.OLS:
        return _fit_ols(train)
    if kind is ModelKind.RIDGE_SUBSET:
        return _fit_ridge_subset(train, hyperparams.get("features"), hyperparams.get("lam", DEFAULT_RIDGE_LAMBDA))
    if kind is ModelKind.KNN:
        n_neighbors = _neighbors(train.n, hyperparams.get("k", DEFAULT_KNN_K))
        estimator = KNeighborsRegressor(n_neighbors=n_neighbors).fit(train.X, train.y)
        return FittedModel(kind, estimator, train.d, {"k": n_neighbors})
    if kind is ModelKind.KNN_SCALE:
        return _fit_knn_scale(train, hyperparams.get("k", DEFAULT_KNN_K))
    if kind is ModelKind.KNN_QUANTILE:
        return _fit_knn_quantile(train, hyperparams.get("k", DEFAULT_QUANTILE_K), hyperparams.get("alpha", 0.1))

    estimator = DecisionTreeRegressor(max_depth=TREE_DEPTH, random_state=0).fit(train.X, train.y)
    return FittedModel(kind, estimator, train.d, {"max_depth": TREE_DEPTH})


def _checked(model: FittedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.d:
        raise InvalidInputError(f"{model.kind.value} was fitted on {model.d} features, got {X.shape[1]}")
    return X


def _predict_mean(model: FittedModel) -> Callable[[np.ndarray], np.ndarray]:
    if model.features is not None:
        columns = list(model.features)
        return lambda X: model.estimator.predict(_checked(model, X)[:, columns])
    return lambda X: model.estimator.predict(_checked(model, X))


def _predict_quantile(model: FittedModel, level: float) -> Callable[[np.ndarray], np.ndarray]:
    def predict(X: np.ndarray) -> np.ndarray:
        index = model.estimator.kneighbors(_checked(model, X), return_distance=False)
        return np.quantile(model.train_y[index], level, axis=1)

    return predict


def model_handles(model: FittedModel) -> Dict[str, Callable[[np.ndarray], np.ndarray]]:
    """Prediction closures the model provides, keyed by handle name"""
    if model.kind is ModelKind.KNN_SCALE:
        return {"sigma": lambda X: np.maximum(model.estimator.predict(_checked(model, X)), SIGMA_MIN)}
    if model.kind is ModelKind.KNN_QUANTILE:
        lo, hi = model.hyperparams["levels"]
        return {"tau_lo": _predict_quantile(model, lo), "tau_hi": _predict_quantile(model, hi)}
    return {"mu": _predict_mean(model)}


def handle(model: FittedModel, name: str) -> Callable[[np.ndarray], np.ndarray]:
    """A single prediction closure; CapabilityError if the kind does not provide it"""
    handles = model_handles(model)
    if name not in handles:
        raise CapabilityError(
            f"{model.kind.value} provides {', '.join(_HANDLES[model.kind])}, not {name}"
        )
    return handles[name]


# ---------------------------------------------------------------------------
# Score menus
# ---------------------------------------------------------------------------


def residual_score(model: FittedModel, name: str) -> ScoreSpec:
    return ScoreSpec(ScoreKind.RESIDUAL, name=name, mu=handle(model, "mu"))


def score_menu(
    case: CaseId,
    train: Dataset,
    alpha: float = 0.1,
    seed: int = 0,
    n_scores: int = 4,
) -> Tuple[ScoreSpec, ...]:
    """Nonconformity scores for a case, fitted on the training sample.

    Case 1: residuals of ols, ridge (all features), knn and a depth-3 tree.
    Case 2: tree residual, knn residual rescaled by knn-scale, and CQR from
    knn quantiles. Case 3: ``n_scores`` ridge submodels on random 20-feature
    subsets with lambda 0.1. Individualized case: ols and tree residuals.
    """
    if case is CaseId.CASE1:
        return (
            residual_score(fit(ModelKind.OLS, train), "ols"),
            residual_score(fit(ModelKind.RIDGE_SUBSET, train), "ridge"),
            residual_score(fit(ModelKind.KNN, train), "knn"),
            residual_score(fit(ModelKind.TREE_STUMP, train), "tree"),
        )
    if case is CaseId.CASE2:
        quantiles = fit(ModelKind.KNN_QUANTILE, train, alpha=alpha)
        return (
            residual_score(fit(ModelKind.TREE_STUMP, train), "tree"),
            ScoreSpec(
                ScoreKind.RESCALED,
                name="knn-rescaled",
                mu=handle(fit(ModelKind.KNN, train), "mu"),
                sigma=handle(fit(ModelKind.KNN_SCALE, train), "sigma"),
            ),
            ScoreSpec(
                ScoreKind.CQR,
                name="knn-cqr",
                tau_lo=handle(quantiles, "tau_lo"),
                tau_hi=handle(quantiles, "tau_hi"),
            ),
        )
    if case is CaseId.CASE3:
        if n_scores < 1:
            raise InvalidInputError(f"n_scores must be positive, got {n_scores}")
        rng = np.random.default_rng(seed)
        size = min(CASE3_SUBSET_SIZE, train.d)
        specs = []
        for k in range(n_scores):
            features = np.sort(rng.choice(train.d, size=size, replace=False))
            model = fit(ModelKind.RIDGE_SUBSET, train, features=features, lam=DEFAULT_RIDGE_LAMBDA)
            specs.append(residual_score(model, f"ridge{k + 1}"))
        return tuple(specs)
    return (
        residual_score(fit(ModelKind.OLS, train), "ols"),
        residual_score(fit(ModelKind.TREE_STUMP, train), "tree"),
    )
