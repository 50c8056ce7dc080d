"""Correlate an evidence bundle into the 13-feature vector.

Feature schema (order is part of the versioned contract):

=====  ========================  ============
id     name                      category
=====  ========================  ============
f1     fake_invalid              reputation
f2     domain_age_days           reputation
f3     rank_score                reputation
f4     reputation_flagged        reputation
f5     seeks_input               goal
f6     redirect_distance         goal
f7     url_content_consistency   consistency
f8     benign_host               consistency
f9     has_ip_host               analytics
f10    suspicious_symbol_count   analytics
f11    subdomain_count           analytics
f12    url_length                analytics
f13    registrable_label_length  analytics
=====  ========================  ============
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .domkit import ContentProfile, inspect_content, page_title, parse_html, visible_text
from .errors import (
    AlreadyNormalized,
    EmptyDocument,
    MalformedCsv,
    MalformedUrl,
    MissingSnapshot,
    SchemaVersionMismatch,
    TooFewSamples,
    UnlabeledRow,
    ZeroVariance,
)
from .evidence.store import bundle_key, iter_keys, load_bundle
from .textmetrics import CorrelationResult, levenshtein, pearson
from .urlkit import is_benign_host, parse_url, url_analytics

SCHEMA_VERSION = "subtlephish-features/1"
FEATURE_IDS = tuple(f"f{i}" for i in range(1, 14))
FEATURE_NAMES = (
    "fake_invalid",
    "domain_age_days",
    "rank_score",
    "reputation_flagged",
    "seeks_input",
    "redirect_distance",
    "url_content_consistency",
    "benign_host",
    "has_ip_host",
    "suspicious_symbol_count",
    "subdomain_count",
    "url_length",
    "registrable_label_length",
)
CATEGORIES = {
    "reputation": ("f1", "f2", "f3", "f4"),
    "goal": ("f5", "f6"),
    "consistency": ("f7", "f8"),
    "analytics": ("f9", "f10", "f11", "f12", "f13"),
}
BINARY_FEATURES = ("f1", "f4", "f7", "f8", "f9")
NORMALIZED_FEATURES = ("f2", "f5", "f6", "f10", "f11", "f12", "f13")
NORMALIZED_INDEX = tuple(FEATURE_IDS.index(f) for f in NORMALIZED_FEATURES)
LABEL_VALUES = {"benign": 0, "phishing": 1}
CSV_HEADER = ("key",) + FEATURE_IDS + ("label",)
CSV_SCHEMA_PREFIX = "# schema: "


class DegenerateFeature(UserWarning):
    """A normalized feature was constant over the fit set; its scale was clamped to 1."""


@dataclass(frozen=True)
class FeatureConfig:
    benign_hosts: Optional[frozenset] = None
    suffix_rules: Optional[frozenset] = None
    validity_keywords: Optional[tuple] = None
    captcha_markers: Optional[tuple] = None
    age_imputation_days: float = 0.0
    use_reputation: bool = True


@dataclass(frozen=True)
class FeatureVector:
    values: tuple
    label: Optional[int] = None
    key: str = ""
    notes: tuple = ()
    normalized: bool = False
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        if len(self.values) != len(FEATURE_IDS):
            raise ValueError(f"expected {len(FEATURE_IDS)} feature values, got {len(self.values)}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("feature values must be finite")
        if self.label not in (None, 0, 1):
            raise ValueError(f"label must be 0, 1 or None, got {self.label!r}")

    def __getitem__(self, feature_id: str) -> float:
        return self.values[FEATURE_IDS.index(feature_id)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def named(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.values))


def _profile(html: str, status: int, config: FeatureConfig) -> ContentProfile:
    if not html.strip():
        return ContentProfile()
    return inspect_content(html, status, config.validity_keywords, config.captcha_markers)


def _mentions_label(html: str, label: str) -> bool:
    if not label or not html.strip():
        return False
    try:
        root = parse_html(html)
    except EmptyDocument:
        return False
    text = (page_title(root) + " " + visible_text(root)).lower()
    return label.lower() in text


def extract_features(bundle, config: FeatureConfig | None = None) -> FeatureVector:
    """Turn one evidence bundle into a raw (unnormalized) feature vector.

    Absent optional evidence is imputed and noted, never an error.
    """
    config = config or FeatureConfig()
    snapshot = getattr(bundle, "snapshot", None)
    if snapshot is None:
        raise MissingSnapshot("bundle has no page snapshot")
    notes = []
    html = snapshot.final_html
    profile = _profile(html, snapshot.http_status, config)

    age = config.age_imputation_days
    if bundle.whois is None:
        notes.append("whois absent")
    elif bundle.whois.creation_date is None:
        notes.append("whois date missing")
    else:
        age = float(max(0, (snapshot.fetched_at.date() - bundle.whois.creation_date).days))

    if bundle.rank is None:
        notes.append("rank absent")
        rank_score = 0.0
    elif bundle.rank.present_in_index:
        rank_score = 1.0 / bundle.rank.top_rank
    else:
        rank_score = 0.0

    flagged = 0.0
    if bundle.reputation is None:
        notes.append("reputation absent")
    elif config.use_reputation:
        flagged = float(bundle.reputation.flagged)

    try:
        parts = parse_url(snapshot.url_final, config.suffix_rules, config.benign_hosts)
    except MalformedUrl:
        notes.append("final url unparseable")
        parts = parse_url(snapshot.url_initial, config.suffix_rules, config.benign_hosts)
    analytics = url_analytics(parts)

    values = (
        float(profile.fake_invalid),
        age,
        rank_score,
        flagged,
        float(profile.sensitive_inputs),
        float(levenshtein(snapshot.url_initial, snapshot.url_final)),
        float(_mentions_label(html, parts.registrable_label)),
        float(is_benign_host(parts, config.benign_hosts)),
        float(analytics.has_ip_host),
        float(analytics.suspicious_symbol_count),
        float(analytics.subdomain_count),
        float(analytics.url_length),
        float(analytics.registrable_label_length),
    )
    label = LABEL_VALUES[bundle.label] if bundle.label else None
    return FeatureVector(values, label, bundle_key(snapshot.url_initial), tuple(notes))


def extract_store(store_root, config: FeatureConfig | None = None) -> list[FeatureVector]:
    """Features for every bundle in a replay store, ordered by bundle key."""
    return [extract_features(load_bundle(key, store_root), config) for key in iter_keys(store_root)]


@dataclass(frozen=True)
class NormStats:
    means: tuple
    stds: tuple
    count: int
    features: tuple = NORMALIZED_FEATURES

    def to_dict(self) -> dict:
        return {"features": list(self.features), "means": list(self.means), "stds": list(self.stds),
                "count": self.count}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(tuple(d["means"]), tuple(d["stds"]), int(d["count"]), tuple(d["features"]))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=float, copy=True)
        idx = [FEATURE_IDS.index(f) for f in self.features]
        X[:, idx] = (X[:, idx] - np.asarray(self.means)) / np.asarray(self.stds)
        return X


def _fit_stats(X: np.ndarray, features=NORMALIZED_FEATURES) -> NormStats:
    if X.shape[0] < 2:
        raise TooFewSamples(f"normalization needs at least 2 vectors, got {X.shape[0]}")
    idx = [FEATURE_IDS.index(f) for f in features]
    cols = X[:, idx]
    means = cols.mean(axis=0)
    stds = cols.std(axis=0, ddof=1)
    for name, s in zip(features, stds):
        if s == 0:
            warnings.warn(f"feature {name} is constant over the fit set", DegenerateFeature, stacklevel=3)
    stds = np.where(stds > 0, stds, 1.0)
    return NormStats(tuple(float(m) for m in means), tuple(float(s) for s in stds), int(X.shape[0]), tuple(features))


def fit_norm_stats(vectors: Sequence[FeatureVector]) -> NormStats:
    if any(v.normalized for v in vectors):
        raise AlreadyNormalized("cannot fit normalization on normalized vectors")
    return _fit_stats(np.array([v.values for v in vectors], dtype=float).reshape(len(vectors), len(FEATURE_IDS)))


def apply_norm(vector: FeatureVector, stats: NormStats) -> FeatureVector:
    if vector.normalized:
        raise AlreadyNormalized(f"vector {vector.key or '?'} is already normalized")
    out = stats.transform(vector.as_array()[None, :])[0]
    return replace(vector, values=tuple(float(v) for v in out), normalized=True)


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer from evidence bundles to an ``(n, 13)`` array."""

    def __init__(self, age_imputation_days=0.0, use_reputation=True, benign_hosts=None, suffix_rules=None,
                 validity_keywords=None, captcha_markers=None):
        self.age_imputation_days = age_imputation_days
        self.use_reputation = use_reputation
        self.benign_hosts = benign_hosts
        self.suffix_rules = suffix_rules
        self.validity_keywords = validity_keywords
        self.captcha_markers = captcha_markers

    def _config(self) -> FeatureConfig:
        return FeatureConfig(
            benign_hosts=frozenset(self.benign_hosts) if self.benign_hosts is not None else None,
            suffix_rules=frozenset(self.suffix_rules) if self.suffix_rules is not None else None,
            validity_keywords=tuple(self.validity_keywords) if self.validity_keywords is not None else None,
            captcha_markers=tuple(self.captcha_markers) if self.captcha_markers is not None else None,
            age_imputation_days=self.age_imputation_days,
            use_reputation=self.use_reputation,
        )

    def fit(self, bundles=None, y=None):
        self.n_features_out_ = len(FEATURE_IDS)
        return self

    def transform(self, bundles) -> np.ndarray:
        config = self._config()
        rows = [extract_features(b, config).values for b in bundles]
        return np.array(rows, dtype=float).reshape(len(rows), len(FEATURE_IDS))

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)


class FeatureScaler(TransformerMixin, BaseEstimator):
    """Z-score the count-like features; binary features and rank_score pass through."""

    def __init__(self, features=NORMALIZED_FEATURES):
        self.features = features

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[1] != len(FEATURE_IDS):
            raise ValueError(f"expected {len(FEATURE_IDS)} columns, got {X.shape[1]}")
        self.stats_ = _fit_stats(X, tuple(self.features))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "stats_")
        X = check_array(X, dtype=float)
        return self.stats_.transform(X)


@dataclass
class CorrelationReport:
    names: tuple
    cells: list = field(default_factory=list)  # cells[i][j] -> CorrelationResult | None

    def get(self, a: str, b: str) -> Optional[CorrelationResult]:
        return self.cells[self.names.index(a)][self.names.index(b)]

    @property
    def age_rank(self) -> Optional[CorrelationResult]:
        return self.get("f2", "f3")

    def to_dict(self) -> dict:
        def cell(c):
            return None if c is None else c.coefficient

        return {
            "names": list(self.names),
            "matrix": [[cell(c) for c in row] for row in self.cells],
            "age_rank": cell(self.age_rank),
            "n": next((c.n for row in self.cells for c in row if c is not None), None),
        }

    def to_text(self) -> str:
        width = 7
        lines = [" " * 6 + "".join(n.rjust(width) for n in self.names)]
        for name, row in zip(self.names, self.cells):
            cells = ["undef".rjust(width) if c is None else f"{c.coefficient:+.3f}".rjust(width) for c in row]
            lines.append(name.ljust(6) + "".join(cells))
        age_rank = self.age_rank
        lines.append("")
        lines.append(
            "age x rank (f2, f3): " + ("undefined" if age_rank is None else f"{age_rank.coefficient:+.4f}")
        )
        return "\n".join(lines) + "\n"


def correlation_report(vectors: Sequence[FeatureVector]) -> CorrelationReport:
    """Pairwise Pearson coefficients among the 13 features and the label."""
    if len(vectors) < 2:
        raise TooFewSamples("correlation report needs at least 2 vectors")
    if any(v.label is None for v in vectors):
        raise UnlabeledRow(0, "correlation report needs labeled vectors")
    names = FEATURE_IDS + ("label",)
    columns = [[v.values[i] for v in vectors] for i in range(len(FEATURE_IDS))]
    columns.append([float(v.label) for v in vectors])
    cells = []
    for a in columns:
        row = []
        for b in columns:
            try:
                row.append(pearson(a, b))
            except ZeroVariance:
                row.append(None)
        cells.append(row)
    return CorrelationReport(names, cells)


def _format_value(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(float(v))


def write_feature_csv(vectors: Sequence[FeatureVector], path=None) -> str:
    """Serialize vectors; returns the text and writes it when ``path`` is given."""
    buf = io.StringIO()
    buf.write(f"{CSV_SCHEMA_PREFIX}{SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for v in vectors:
        if v.normalized:
            raise AlreadyNormalized("feature CSVs hold raw vectors only")
        writer.writerow([v.key, *(_format_value(x) for x in v.values), "" if v.label is None else v.label])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def read_feature_csv(path, require_labels=False, expected_schema=SCHEMA_VERSION) -> list[FeatureVector]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(CSV_SCHEMA_PREFIX):
        raise MalformedCsv(1, "missing schema line")
    schema = lines[0][len(CSV_SCHEMA_PREFIX):].strip()
    if schema != expected_schema:
        raise SchemaVersionMismatch(f"file schema {schema!r}, reader expects {expected_schema!r}")
    rows = list(csv.reader(lines[1:]))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise MalformedCsv(2, "unexpected header")
    vectors = []
    for lineno, row in enumerate(rows[1:], start=3):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise MalformedCsv(lineno, f"expected {len(CSV_HEADER)} columns, got {len(row)}")
        try:
            values = tuple(float(x) for x in row[1:-1])
        except ValueError as exc:
            raise MalformedCsv(lineno, str(exc)) from None
        if not all(math.isfinite(v) for v in values):
            raise MalformedCsv(lineno, "non-finite feature value")
        label_text = row[-1].strip()
        if label_text == "":
            if require_labels:
                raise UnlabeledRow(lineno, "row has no label")
            label = None
        elif label_text in ("0", "1"):
            label = int(label_text)
        else:
            raise MalformedCsv(lineno, f"bad label {label_text!r}")
        vectors.append(FeatureVector(values, label, row[0]))
    return vectors


def vectors_to_xy(vectors: Sequence[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([v.values for v in vectors], dtype=float).reshape(len(vectors), len(FEATURE_IDS))
    y = np.array([-1 if v.label is None else v.label for v in vectors], dtype=int)
    return X, y

