"""Logistic regression trained by full-batch gradient descent.

The objective is mean binary cross-entropy with an optional L2 penalty on
the non-bias weights::

    J(theta) = -1/m * sum(y log h + (1 - y) log(1 - h)) + l2 / (2m) * |theta[1:]|^2
    grad     =  1/m * Z^T (h - y) + l2 / m * [0, theta[1:]]

where ``Z`` is the feature matrix with a leading column of ones and
``h = sigmoid(Z @ theta)``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .errors import DivergenceDetected, EmptyDataset, SchemaMismatch, SingleClassDataset
from .features import FEATURE_IDS, NORMALIZED_FEATURES, SCHEMA_VERSION, FeatureVector, NormStats, _fit_stats

MODEL_FORMAT = "subtlephish-lrmodel/1"
PROB_CLAMP = 1e-12
DIVERGENCE_PATIENCE = 10
_ONE_BELOW = float(np.nextafter(1.0, 0.0))
_TINY = float(np.finfo(float).tiny)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _augment(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([np.ones((X.shape[0], 1)), X])


def hypothesis(theta, X) -> np.ndarray:
    """Probability of the positive class for normalized rows of ``X``, strictly inside (0, 1)."""
    return np.clip(sigmoid(_augment(X) @ np.asarray(theta, dtype=float)), _TINY, _ONE_BELOW)


def _check_dataset(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0 or X.shape[0] == 0:
        raise EmptyDataset("dataset is empty")
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} rows but {y.size} labels")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    return X, y


def loss(theta, X, y, l2_penalty=0.0) -> float:
    X, y = _check_dataset(X, y)
    theta = np.asarray(theta, dtype=float)
    m = y.size
    p = np.clip(sigmoid(_augment(X) @ theta), PROB_CLAMP, 1.0 - PROB_CLAMP)
    ce = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(ce + l2_penalty / (2.0 * m) * np.dot(theta[1:], theta[1:]))


def gradient(theta, X, y, l2_penalty=0.0) -> np.ndarray:
    X, y = _check_dataset(X, y)
    theta = np.asarray(theta, dtype=float)
    m = y.size
    Z = _augment(X)
    grad = Z.T @ (sigmoid(Z @ theta) - y) / m
    grad[1:] += l2_penalty / m * theta[1:]
    return grad


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 5000
    convergence_tol: float = 1e-9
    seed: int = 0
    l2_penalty: float = 0.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.convergence_tol < 0 or self.l2_penalty < 0:
            raise ValueError("convergence_tol and l2_penalty must be >= 0")


class LogisticRegressionGD(ClassifierMixin, BaseEstimator):
    """Binary logistic regression fitted with deterministic gradient descent.

    Parameters
    ----------
    learning_rate, max_epochs, convergence_tol, l2_penalty
        Optimizer settings. Training stops when the loss changes by less
        than ``convergence_tol`` between epochs or after ``max_epochs``.
    threshold : float
        A sample is labeled positive when its probability is >= threshold.
    normalize : bool
        Z-score features before training. With the 13-feature schema only
        the count-like features are scaled; otherwise every column is.
    seed : int
        Recorded for provenance. Weights start at zero, so it does not
        influence the fit.
    feature_schema_version : str or None
        Schema the model is trained against; checked by :func:`predict`.
    """

    def __init__(self, learning_rate=0.1, max_epochs=5000, convergence_tol=1e-9, l2_penalty=0.0,
                 threshold=0.5, normalize=True, seed=0, feature_schema_version=None):
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.convergence_tol = convergence_tol
        self.l2_penalty = l2_penalty
        self.threshold = threshold
        self.normalize = normalize
        self.seed = seed
        self.feature_schema_version = feature_schema_version

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(self.learning_rate, self.max_epochs, self.convergence_tol, self.seed, self.l2_penalty)

    def _scaled_columns(self, n_features):
        if not self.normalize:
            return ()
        if n_features == len(FEATURE_IDS):
            return NORMALIZED_FEATURES
        return None

    def _fit_scaler(self, X):
        columns = self._scaled_columns(X.shape[1])
        if columns is None:
            std = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.ones(X.shape[1])
            self.mean_ = X.mean(axis=0)
            self.scale_ = np.where(std > 0, std, 1.0)
            self.norm_stats_ = None
        elif columns:
            self.norm_stats_ = _fit_stats(X, columns)
        else:
            self.norm_stats_ = None

    def _scale(self, X):
        if getattr(self, "norm_stats_", None) is not None:
            return self.norm_stats_.transform(X)
        if getattr(self, "mean_", None) is not None:
            return (X - self.mean_) / self.scale_
        return X

    def fit(self, X, y):
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie strictly between 0 and 1")
        config = self.train_config
        if len(X) == 0:
            raise EmptyDataset("dataset is empty")
        X, y = check_X_y(X, y, dtype=float)
        y = y.astype(float)
        if not np.isin(y, (0.0, 1.0)).all():
            raise ValueError("labels must be 0 (benign) or 1 (phishing)")
        if np.unique(y).size < 2:
            raise SingleClassDataset("training data holds a single class")
        self.mean_ = None
        self._fit_scaler(X)
        Xn = self._scale(X)

        theta = np.zeros(X.shape[1] + 1)
        losses = [loss(theta, Xn, y, config.l2_penalty)]
        rises = 0
        epoch = 0
        for epoch in range(1, config.max_epochs + 1):
            theta = theta - config.learning_rate * gradient(theta, Xn, y, config.l2_penalty)
            current = loss(theta, Xn, y, config.l2_penalty)
            rises = rises + 1 if current > losses[-1] else 0
            losses.append(current)
            if rises >= DIVERGENCE_PATIENCE:
                raise DivergenceDetected(
                    f"loss rose for {rises} consecutive epochs (epoch {epoch}, loss {current:.6g}); "
                    f"lower learning_rate (now {config.learning_rate})"
                )
            if abs(losses[-2] - current) < config.convergence_tol:
                break

        self.theta_ = theta
        self.intercept_ = np.array([theta[0]])
        self.coef_ = theta[1:][None, :]
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = epoch
        self.loss_curve_ = losses
        self.training_data_digest_ = dataset_digest(X, y)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "theta_")
        X = check_array(X, dtype=float)
        return _augment(self._scale(X)) @ self.theta_

    def predict_proba(self, X):
        check_is_fitted(self, "theta_")
        X = check_array(X, dtype=float)
        p = hypothesis(self.theta_, self._scale(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X, threshold=None):
        threshold = self.threshold if threshold is None else threshold
        return (self.predict_proba(X)[:, 1] >= threshold).astype(int)


def dataset_digest(X, y) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(y, dtype="<f8").tobytes())
    return h.hexdigest()


def train(vectors, config: TrainConfig | None = None, threshold=0.5) -> LogisticRegressionGD:
    """Fit a model on labeled raw feature vectors of the current schema."""
    from .features import vectors_to_xy

    config = config or TrainConfig()
    if not vectors:
        raise EmptyDataset("no training vectors")
    for v in vectors:
        if v.schema_version != SCHEMA_VERSION or v.normalized:
            raise SchemaMismatch(f"vector {v.key or '?'} is not a raw {SCHEMA_VERSION} vector")
        if v.label is None:
            raise ValueError(f"vector {v.key or '?'} has no label")
    X, y = vectors_to_xy(vectors)
    model = LogisticRegressionGD(
        learning_rate=config.learning_rate,
        max_epochs=config.max_epochs,
        convergence_tol=config.convergence_tol,
        l2_penalty=config.l2_penalty,
        threshold=threshold,
        seed=config.seed,
        feature_schema_version=SCHEMA_VERSION,
    )
    return model.fit(X, y)


def _check_schema(model, vector: FeatureVector):
    if model.feature_schema_version and vector.schema_version != model.feature_schema_version:
        raise SchemaMismatch(
            f"model expects {model.feature_schema_version}, vector is {vector.schema_version}"
        )
    if len(vector.values) != model.n_features_in_:
        raise SchemaMismatch(f"model expects {model.n_features_in_} features, got {len(vector.values)}")


def predict(model: LogisticRegressionGD, vector: FeatureVector, threshold=None) -> tuple[str, float]:
    """Classify one raw vector; returns ``("phishing" | "benign", probability)``."""
    _check_schema(model, vector)
    if vector.normalized:
        raise SchemaMismatch("predict takes raw vectors; normalization is applied by the model")
    threshold = model.threshold if threshold is None else threshold
    p = float(model.predict_proba(vector.as_array()[None, :])[0, 1])
    return ("phishing" if p >= threshold else "benign"), p


def model_to_dict(model: LogisticRegressionGD) -> dict:
    check_is_fitted(model, "theta_")
    config = asdict(model.train_config)
    config["objective"] = "binary cross-entropy"
    config["optimizer"] = "full-batch gradient descent, zero init"
    return {
        "format": MODEL_FORMAT,
        "feature_schema_version": model.feature_schema_version,
        "theta": [float(t) for t in model.theta_],
        "norm_stats": model.norm_stats_.to_dict() if model.norm_stats_ is not None else None,
        "column_scaling": (
            {"mean": [float(v) for v in model.mean_], "scale": [float(v) for v in model.scale_]}
            if getattr(model, "mean_", None) is not None
            else None
        ),
        "threshold": model.threshold,
        "train_config": config,
        "training_data_digest": model.training_data_digest_,
        "n_iter": model.n_iter_,
        "final_loss": model.loss_curve_[-1],
    }


def save_model(model: LogisticRegressionGD, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> LogisticRegressionGD:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise SchemaMismatch(f"unsupported model format {doc.get('format')!r}")
    cfg = doc["train_config"]
    model = LogisticRegressionGD(
        learning_rate=cfg["learning_rate"],
        max_epochs=cfg["max_epochs"],
        convergence_tol=cfg["convergence_tol"],
        l2_penalty=cfg["l2_penalty"],
        threshold=doc["threshold"],
        seed=cfg["seed"],
        feature_schema_version=doc["feature_schema_version"],
    )
    model.theta_ = np.asarray(doc["theta"], dtype=float)
    model.intercept_ = model.theta_[:1].copy()
    model.coef_ = model.theta_[1:][None, :]
    model.classes_ = np.array([0, 1])
    model.n_features_in_ = model.theta_.size - 1
    model.norm_stats_ = NormStats.from_dict(doc["norm_stats"]) if doc.get("norm_stats") else None
    scaling = doc.get("column_scaling")
    model.mean_ = np.asarray(scaling["mean"]) if scaling else None
    model.scale_ = np.asarray(scaling["scale"]) if scaling else None
    model.n_iter_ = doc.get("n_iter")
    model.loss_curve_ = [doc.get("final_loss")]
    model.training_data_digest_ = doc.get("training_data_digest")
    return model
