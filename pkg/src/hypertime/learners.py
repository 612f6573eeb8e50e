"""Deterministic learners whose hyperparameters get tuned, plus loss metrics.

Three families are available: closed-form ridge regression on polynomial
features, k-nearest-neighbours, and gradient-boosted decision stumps. None
of them draws random numbers, so a model is a pure function of its inputs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

RIDGE = "ridge"
KNN = "knn"
BOOSTED_STUMPS = "boosted_stumps"
FAMILIES = (RIDGE, KNN, BOOSTED_STUMPS)

METRICS = ("mse", "rmse", "zero_one")

PROB_CLIP = 1e-6

# Every hyperparameter a family understands, with its default value.
DEFAULTS: dict[str, dict[str, Any]] = {
    RIDGE: {"alpha": 1.0, "degree": 1, "fit_intercept": True, "standardize": True},
    KNN: {"k": 5, "distance": "euclidean"},
    BOOSTED_STUMPS: {"n_estimators": 50, "learning_rate": 0.1, "min_samples_leaf": 1},
}
TUNABLE: dict[str, tuple[str, ...]] = {
    RIDGE: ("alpha", "degree"),
    KNN: ("k", "distance"),
    BOOSTED_STUMPS: ("n_estimators", "learning_rate", "min_samples_leaf"),
}


class LearnerError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerSpec:
    """Learner family plus hyperparameter values that are not being tuned."""

    family: str
    fixed: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise LearnerError(f"unknown learner family {self.family!r}")
        unknown = set(self.fixed) - set(DEFAULTS[self.family])
        if unknown:
            raise LearnerError(f"{self.family} has no hyperparameters {sorted(unknown)}")
        object.__setattr__(self, "fixed", dict(self.fixed))

    def check_tunables(self, names: list[str]) -> None:
        bad = [n for n in names if n not in TUNABLE[self.family]]
        if bad:
            raise LearnerError(
                f"{self.family} cannot tune {bad}; tunable: {list(TUNABLE[self.family])}"
            )

    def resolve(self, config: Mapping[str, Any]) -> dict[str, Any]:
        unknown = set(config) - set(DEFAULTS[self.family])
        if unknown:
            raise LearnerError(f"{self.family} has no hyperparameters {sorted(unknown)}")
        params = {**DEFAULTS[self.family], **self.fixed, **config}
        _check_params(self.family, params)
        return params


def _check_params(family: str, p: dict[str, Any]) -> None:
    if family == RIDGE:
        if not p["alpha"] >= 0:
            raise LearnerError(f"ridge alpha must be >= 0, got {p['alpha']}")
        if int(p["degree"]) not in (1, 2, 3):
            raise LearnerError(f"ridge degree must be 1, 2 or 3, got {p['degree']}")
    elif family == KNN:
        if int(p["k"]) < 1:
            raise LearnerError(f"knn k must be >= 1, got {p['k']}")
        if p["distance"] not in ("euclidean", "manhattan"):
            raise LearnerError(f"unknown knn distance {p['distance']!r}")
    else:
        if int(p["n_estimators"]) < 0:
            raise LearnerError("n_estimators must be >= 0")
        if not 0 < p["learning_rate"] <= 1:
            raise LearnerError(f"learning_rate must lie in (0, 1], got {p['learning_rate']}")
        if int(p["min_samples_leaf"]) < 1:
            raise LearnerError("min_samples_leaf must be >= 1")


# -- models -----------------------------------------------------------------


def polynomial_features(X: np.ndarray, degree: int) -> np.ndarray:
    """All monomials of total degree 1..degree, without the constant column."""
    X = np.asarray(X, dtype=float)
    cols = [X[:, i] for i in range(X.shape[1])]
    for deg in range(2, degree + 1):
        for combo in itertools.combinations_with_replacement(range(X.shape[1]), deg):
            cols.append(np.prod(X[:, combo], axis=1))
    if not cols:
        return np.empty((X.shape[0], 0))
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class RidgeModel:
    weights: np.ndarray
    intercept: float
    mean: np.ndarray
    scale: np.ndarray
    degree: int
    n_features: int
    task: str = "regression"

    def predict(self, X: np.ndarray) -> np.ndarray:
        Z = (polynomial_features(_as_2d(X, self.n_features), self.degree) - self.mean) / self.scale
        return Z @ self.weights + self.intercept


@dataclass(frozen=True, eq=False)
class KNNModel:
    X: np.ndarray
    y: np.ndarray
    k: int
    distance: str
    task: str = "regression"

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _as_2d(X, self.n_features)
        k = min(self.k, self.X.shape[0])
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], 256):
            q = X[start:start + 256]
            diff = q[:, None, :] - self.X[None, :, :]
            if self.distance == "euclidean":
                dist = np.sqrt(np.einsum("qnd,qnd->qn", diff, diff))
            else:
                dist = np.abs(diff).sum(axis=2)
            # stable sort: equal distances resolve to the lower training row
            nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
            out[start:start + 256] = self.y[nearest].mean(axis=1)
        return out


@dataclass(frozen=True)
class Stump:
    feature: int  # -1 means no split: both leaves share ``left``
    threshold: float
    left: float
    right: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.feature < 0:
            return np.full(X.shape[0], self.left)
        return np.where(X[:, self.feature] <= self.threshold, self.left, self.right)


@dataclass(frozen=True, eq=False)
class StumpEnsemble:
    base_score: float
    stumps: tuple[Stump, ...]
    learning_rate: float
    n_features: int
    task: str = "regression"

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = _as_2d(X, self.n_features)
        f = np.full(X.shape[0], self.base_score)
        for stump in self.stumps:
            f += self.learning_rate * stump.predict(X)
        return f

    def predict(self, X: np.ndarray) -> np.ndarray:
        f = self.decision_function(X)
        if self.task == "binary_classification":
            return 1.0 / (1.0 + np.exp(-f))
        return f

    def staged_predict(self, X: np.ndarray):
        X = _as_2d(X, self.n_features)
        f = np.full(X.shape[0], self.base_score)
        yield f.copy()
        for stump in self.stumps:
            f += self.learning_rate * stump.predict(X)
            yield f.copy()


Model = RidgeModel | KNNModel | StumpEnsemble


def _as_2d(X: np.ndarray, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if n_features != 1 or X.shape[0] == 1 else X.reshape(-1, 1)
    if X.shape[1] != n_features:
        raise LearnerError(f"expected {n_features} features, got {X.shape[1]}")
    return X


# -- training ---------------------------------------------------------------


def train(
    spec: LearnerSpec,
    config: Mapping[str, Any],
    X: np.ndarray,
    y: np.ndarray,
    task: str = "regression",
) -> Model:
    """Fit a model of ``spec.family`` with hyperparameters from ``config``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] == 0:
        raise LearnerError("cannot train on empty data")
    if X.shape[0] != y.shape[0]:
        raise LearnerError("features and labels differ in length")
    p = spec.resolve(config)
    if spec.family == RIDGE:
        return _train_ridge(X, y, float(p["alpha"]), int(p["degree"]),
                            bool(p["fit_intercept"]), bool(p["standardize"]), task)
    if spec.family == KNN:
        return KNNModel(X.copy(), y.copy(), int(p["k"]), str(p["distance"]), task)
    return _train_stumps(X, y, int(p["n_estimators"]), float(p["learning_rate"]),
                         int(p["min_samples_leaf"]), task)


def _train_ridge(X, y, alpha, degree, fit_intercept, standardize, task) -> RidgeModel:
    Z = polynomial_features(X, degree)
    mean = Z.mean(axis=0) if standardize else np.zeros(Z.shape[1])
    if standardize:
        scale = Z.std(axis=0)
        scale[scale == 0.0] = 1.0
    else:
        scale = np.ones(Z.shape[1])
    Z = (Z - mean) / scale
    if fit_intercept:
        z_mean = Z.mean(axis=0)
        y_mean = float(y.mean())
    else:
        z_mean = np.zeros(Z.shape[1])
        y_mean = 0.0
    Zc = Z - z_mean
    yc = y - y_mean
    gram = Zc.T @ Zc
    rhs = Zc.T @ yc
    w = None
    if alpha > 0:
        try:
            w = np.linalg.solve(gram + alpha * np.eye(gram.shape[0]), rhs)
        except np.linalg.LinAlgError:
            w = None
    if w is None or not np.all(np.isfinite(w)):
        # alpha = 0 or a singular system: minimum-norm least squares
        w = np.linalg.lstsq(Zc, yc, rcond=None)[0]
    intercept = y_mean - float(z_mean @ w)
    return RidgeModel(w, intercept, mean, scale, degree, X.shape[1], task)


def _best_stump(Xs_sorted, order, r, min_leaf):
    """Exhaustive least-squares stump search on residuals ``r``.

    ``Xs_sorted[:, j]`` is feature ``j`` in ascending order and ``order[:, j]``
    the matching row positions. Returns ``(feature, threshold)`` or ``None``.
    """
    n, p = Xs_sorted.shape
    best_gain, best = -np.inf, None
    total = r.sum()
    for j in range(p):
        xs = Xs_sorted[:, j]
        rs = r[order[:, j]]
        cs = np.cumsum(rs)
        n_left = np.arange(1, n)
        # split between positions i and i+1 only where the value changes
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not valid.any():
            continue
        s_left = cs[:-1]
        gain = s_left**2 / n_left + (total - s_left) ** 2 / (n - n_left)
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            best_gain = gain[i]
            best = (j, 0.5 * (xs[i] + xs[i + 1]))
    return best


def _train_stumps(X, y, n_estimators, learning_rate, min_leaf, task) -> StumpEnsemble:
    classify = task == "binary_classification"
    if classify:
        p0 = min(1 - PROB_CLIP, max(PROB_CLIP, float(y.mean())))
        base = math.log(p0 / (1 - p0))
    else:
        base = float(y.mean())
    order = np.argsort(X, axis=0, kind="stable")
    Xs_sorted = np.take_along_axis(X, order, axis=0)
    f = np.full(X.shape[0], base)
    stumps = []
    for _ in range(n_estimators):
        if classify:
            prob = np.clip(1.0 / (1.0 + np.exp(-f)), PROB_CLIP, 1 - PROB_CLIP)
            r = y - prob
            hess = prob * (1 - prob)
        else:
            r = y - f
            hess = None
        split = _best_stump(Xs_sorted, order, r, min_leaf)
        if split is None:
            mask = np.ones(X.shape[0], dtype=bool)
            stump_leaf = _leaf_value(r, hess, mask)
            stump = Stump(-1, 0.0, stump_leaf, stump_leaf)
        else:
            j, thr = split
            mask = X[:, j] <= thr
            stump = Stump(j, float(thr), _leaf_value(r, hess, mask), _leaf_value(r, hess, ~mask))
        stumps.append(stump)
        f = f + learning_rate * stump.predict(X)
    return StumpEnsemble(base, tuple(stumps), learning_rate, X.shape[1], task)


def _leaf_value(r, hess, mask) -> float:
    if hess is None:
        return float(r[mask].mean())
    # one Newton step on the logistic loss
    return float(r[mask].sum() / max(hess[mask].sum(), PROB_CLIP))


# -- prediction and loss ----------------------------------------------------


def predict(model: Model, X: np.ndarray) -> np.ndarray:
    return model.predict(X)


def pointwise_loss(pred: np.ndarray, y: np.ndarray, metric: str) -> np.ndarray:
    """Per-instance loss; ``rmse`` has no per-instance form and uses squared error."""
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if metric in ("mse", "rmse"):
        return (pred - y) ** 2
    if metric == "zero_one":
        return ((pred >= 0.5).astype(float) != y).astype(float)
    raise LearnerError(f"unknown metric {metric!r}; expected one of {METRICS}")


def score(pred: np.ndarray, y: np.ndarray, metric: str) -> float:
    if len(y) == 0:
        raise LearnerError("cannot score empty data")
    value = float(pointwise_loss(pred, y, metric).mean())
    return math.sqrt(value) if metric == "rmse" else value


def loss(model: Model, X: np.ndarray, y: np.ndarray, metric: str) -> float:
    """Loss of ``model`` on ``(X, y)``: ``mse``, ``rmse`` or ``zero_one``."""
    if len(y) == 0:
        raise LearnerError("cannot score empty data")
    return score(model.predict(X), y, metric)
