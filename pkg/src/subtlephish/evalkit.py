"""Confusion-matrix metrics, stratified splitting and report rendering.

Phishing is the positive class. FAR is the share of phishing pages
accepted as benign, FRR the share of benign pages rejected as phishing.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import MalformedCsv, SingleClassDataset, TooSmall
from .features import FeatureVector, read_feature_csv, vectors_to_xy

PREDICTION_LABELS = {"benign": 0, "phishing": 1, "0": 0, "1": 1}


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")
        if self.total < 1:
            raise ValueError("confusion matrix is empty")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=int)
        y_pred = np.asarray(y_pred, dtype=int)
        return cls(
            tp=int(np.sum((y_true == 1) & (y_pred == 1))),
            fn=int(np.sum((y_true == 1) & (y_pred == 0))),
            fp=int(np.sum((y_true == 0) & (y_pred == 1))),
            tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        )


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    far: Optional[float]
    frr: Optional[float]
    matrix: ConfusionMatrix
    dataset_digest: str = ""

    @property
    def one_minus_precision(self) -> Optional[float]:
        return None if self.precision is None else 100.0 - self.precision

    @property
    def one_minus_recall(self) -> Optional[float]:
        return None if self.recall is None else 100.0 - self.recall

    def to_dict(self) -> dict:
        m = self.matrix
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "far": self.far,
            "frr": self.frr,
            "one_minus_precision": self.one_minus_precision,
            "one_minus_recall": self.one_minus_recall,
            "confusion_matrix": {"tp": m.tp, "fn": m.fn, "fp": m.fp, "tn": m.tn},
            "dataset_digest": self.dataset_digest,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    def to_text(self, name="LR") -> str:
        cols = ("Acc.", "Prec.", "Rec.", "FAR", "FRR", "1-Prec.", "1-Rec.")
        vals = (self.accuracy, self.precision, self.recall, self.far, self.frr,
                self.one_minus_precision, self.one_minus_recall)
        width = 8
        head = "Model".ljust(10) + "".join(c.rjust(width) for c in cols)
        row = name.ljust(10) + "".join(("-" if v is None else f"{v:.1f}").rjust(width) for v in vals)
        m = self.matrix
        return (
            f"{head}\n{row}\n\n"
            f"confusion (phishing = positive): tp={m.tp} fn={m.fn} fp={m.fp} tn={m.tn}\n"
        )


def metrics_from_matrix(matrix: ConfusionMatrix, dataset_digest: str = "") -> EvalReport:
    tp, fn, fp, tn = matrix.tp, matrix.fn, matrix.fp, matrix.tn
    accuracy = 100.0 * (tp + tn) / matrix.total
    precision = 100.0 * tp / (tp + fp) if tp + fp else None
    recall = 100.0 * tp / (tp + fn) if tp + fn else None
    # taken as the complement so that far + recall == 100 holds exactly in floating point
    far = 100.0 - recall if recall is not None else None
    frr = 100.0 * fp / (fp + tn) if fp + tn else None
    return EvalReport(accuracy, precision, recall, far, frr, matrix, dataset_digest)


def load_labeled_dataset(path) -> list[FeatureVector]:
    return read_feature_csv(path, require_labels=True)


def vectors_digest(vectors: Sequence[FeatureVector]) -> str:
    h = hashlib.sha256()
    for v in vectors:
        h.update(v.key.encode("utf-8"))
        h.update(np.asarray(v.values, dtype="<f8").tobytes())
        h.update(b"-" if v.label is None else str(v.label).encode())
    return h.hexdigest()


def evaluate(model, dataset: Sequence[FeatureVector], threshold=None) -> EvalReport:
    X, y = vectors_to_xy(dataset)
    if not ((y == 0).any() and (y == 1).any()):
        raise SingleClassDataset("evaluation needs both benign and phishing samples")
    threshold = model.threshold if threshold is None else threshold
    y_pred = (model.predict_proba(X)[:, 1] >= threshold).astype(int)
    return metrics_from_matrix(ConfusionMatrix.from_labels(y, y_pred), vectors_digest(dataset))


def read_predictions(path) -> dict[str, int]:
    """Read a ``key,label`` file produced by a third-party detector."""
    predictions = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise MalformedCsv(lineno, "expected two columns: key,label")
            key, label = row[0].strip(), row[1].strip().lower()
            if lineno == 1 and key == "key":
                continue
            if label not in PREDICTION_LABELS:
                raise MalformedCsv(lineno, f"unknown label {label!r}")
            predictions[key] = PREDICTION_LABELS[label]
    return predictions


def evaluate_predictions(predictions: dict, dataset: Sequence[FeatureVector]) -> EvalReport:
    """Score external predictions on the same labeled dataset."""
    missing = [v.key for v in dataset if v.key not in predictions]
    if missing:
        raise MalformedCsv(0, f"{len(missing)} dataset keys have no prediction, e.g. {missing[0]}")
    y = [v.label for v in dataset]
    if len(set(y)) < 2:
        raise SingleClassDataset("evaluation needs both benign and phishing samples")
    y_pred = [predictions[v.key] for v in dataset]
    return metrics_from_matrix(ConfusionMatrix.from_labels(y, y_pred), vectors_digest(dataset))


def split(dataset: Sequence, train_fraction: float, seed: int, labels=None):
    """Stratified, seeded shuffle split into ``(train, test)``.

    The train side holds ``round(train_fraction * n)`` samples; per-class
    quotas are apportioned by largest remainder, so each class is within
    one sample of its exact share.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = len(dataset)
    n_train = int(round(train_fraction * n))
    if n < 2 or n_train < 1 or n_train >= n:
        raise TooSmall(f"cannot split {n} samples at fraction {train_fraction}")
    if labels is None:
        labels = [getattr(item, "label", None) for item in dataset]
    classes = sorted({lab for lab in labels}, key=lambda c: (c is None, c))
    by_class = {c: [i for i, lab in enumerate(labels) if lab == c] for c in classes}

    exact = {c: train_fraction * len(idx) for c, idx in by_class.items()}
    quota = {c: int(np.floor(v)) for c, v in exact.items()}
    leftover = n_train - sum(quota.values())
    for c in sorted(classes, key=lambda c: (-(exact[c] - quota[c]), classes.index(c)))[:leftover]:
        quota[c] += 1

    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in classes:
        idx = np.array(by_class[c])
        rng.shuffle(idx)
        train_idx.extend(idx[: quota[c]].tolist())
        test_idx.extend(idx[quota[c]:].tolist())
    train_idx.sort()
    test_idx.sort()
    return [dataset[i] for i in train_idx], [dataset[i] for i in test_idx]

