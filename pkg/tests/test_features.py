import warnings
from dataclasses import replace
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_bundle
from subtlephish.errors import (
    AlreadyNormalized,
    MalformedCsv,
    MissingSnapshot,
    SchemaVersionMismatch,
    TooFewSamples,
    UnlabeledRow,
)
from subtlephish.features import (
    BINARY_FEATURES,
    CSV_HEADER,
    FEATURE_IDS,
    NORMALIZED_FEATURES,
    DegenerateFeature,
    FeatureConfig,
    FeatureExtractor,
    FeatureScaler,
    FeatureVector,
    apply_norm,
    correlation_report,
    extract_features,
    extract_store,
    fit_norm_stats,
    read_feature_csv,
    write_feature_csv,
)

LOGIN = """<html><head><title>Sign in</title></head><body><h1>Account verification</h1>
<form action="/next"><input type="email" name="email"><input type="password" name="pass">
<button type="submit">Continue</button></form></body></html>"""


def test_schema_layout():
    assert FEATURE_IDS == tuple(f"f{i}" for i in range(1, 14))
    assert set(BINARY_FEATURES).isdisjoint(NORMALIZED_FEATURES)
    assert CSV_HEADER[0] == "key" and CSV_HEADER[-1] == "label" and len(CSV_HEADER) == 15


def test_redirecting_login_fixture():
    b = make_bundle("http://promo-gift.xyz/r", "<html><body><script>location.href='...'</script></body></html>",
                    final="https://secure-account-update.vercel.app/session/verify?id=8812", rendered=LOGIN,
                    created=date(2020, 12, 1))
    v = extract_features(b)
    assert v["f6"] > 30 and v["f5"] >= 2
    assert v["f2"] == 31
    assert v["f8"] == 1.0  # landing page is on a hosting service
    assert v["f10"] == 2


def test_hosted_page_on_ddns():
    v = extract_features(make_bundle("http://phishfb.ddns.net/login", LOGIN))
    assert v["f8"] == 1.0 and v["f6"] == 0 and v["f11"] == 1


def test_fake_error_and_consistency():
    v = extract_features(make_bundle("http://shop.example.com/", "<html><body>Page Not Found 404</body></html>"))
    assert v["f1"] == 1.0
    brand = extract_features(make_bundle("http://acme.com/", "<title>ACME store</title><p>Welcome"))
    assert brand["f7"] == 1.0
    other = extract_features(make_bundle("http://acme.com/", "<title>PayPal</title><p>Welcome"))
    assert other["f7"] == 0.0


def test_absent_evidence_is_imputed_and_noted():
    b = make_bundle("http://10.1.2.3/x", LOGIN, created=None)
    v = extract_features(b, FeatureConfig(age_imputation_days=-1))
    assert v["f2"] == -1 and v["f9"] == 1.0 and v["f13"] == 0
    assert "whois absent" in v.notes


def test_rank_and_reputation():
    v = extract_features(make_bundle("http://acme.com/", "<p>x", rank=4, flagged=True))
    assert v["f3"] == 0.25 and v["f4"] == 1.0
    assert extract_features(make_bundle("http://acme.com/", "<p>x", flagged=True),
                            FeatureConfig(use_reputation=False))["f4"] == 0.0


def test_missing_snapshot():
    with pytest.raises(MissingSnapshot):
        extract_features(object())


def test_extractor_transformer(corpus_items):
    bundles = [item.bundle for item in corpus_items[:10]]
    X = FeatureExtractor().fit_transform(bundles)
    assert X.shape == (10, 13)
    assert np.array_equal(X[3], extract_features(bundles[3]).as_array())
    assert list(FeatureExtractor().get_feature_names_out())[0] == "fake_invalid"


def test_normalization(corpus_items):
    vectors = [extract_features(i.bundle) for i in corpus_items]
    stats = fit_norm_stats(vectors)
    normed = [apply_norm(v, stats) for v in vectors]
    X = np.array([v.values for v in normed])
    for f in NORMALIZED_FEATURES:
        col = X[:, FEATURE_IDS.index(f)]
        if np.ptp(np.array([v[f] for v in vectors])) > 0:
            assert col.mean() == pytest.approx(0, abs=1e-9)
            assert col.std(ddof=1) == pytest.approx(1, abs=1e-9)
    for f in BINARY_FEATURES:
        assert np.array_equal(X[:, FEATURE_IDS.index(f)], [v[f] for v in vectors])
    with pytest.raises(AlreadyNormalized):
        apply_norm(normed[0], stats)
    with pytest.raises(AlreadyNormalized):
        fit_norm_stats(normed)
    with pytest.raises(TooFewSamples):
        fit_norm_stats(vectors[:1])
    scaler = FeatureScaler().fit(np.array([v.values for v in vectors]))
    assert np.allclose(scaler.transform(np.array([v.values for v in vectors])), X)


def test_constant_feature_warns():
    vectors = [FeatureVector(tuple([1.0] * 13), 0), FeatureVector(tuple([1.0] * 13), 1)]
    with pytest.warns(DegenerateFeature):
        stats = fit_norm_stats(vectors)
    assert all(s == 1.0 for s in stats.stds)


def test_csv_roundtrip(tmp_path, corpus_items):
    vectors = [extract_features(i.bundle) for i in corpus_items[:20]]
    path = tmp_path / "f.csv"
    text = write_feature_csv(vectors, path)
    assert text.splitlines()[0] == "# schema: subtlephish-features/1"
    back = read_feature_csv(path, require_labels=True)
    assert [(v.key, v.values, v.label) for v in back] == [(v.key, v.values, v.label) for v in vectors]
    assert write_feature_csv(back) == text


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=13, max_size=13))
@settings(max_examples=50)
def test_csv_float_roundtrip_exact(values):
    import tempfile
    from pathlib import Path

    v = FeatureVector(tuple(values), 1, "k")
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "x.csv"
        write_feature_csv([v], path)
        assert read_feature_csv(path)[0].values == v.values


def test_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("key,f1\n")
    with pytest.raises(MalformedCsv):
        read_feature_csv(path)
    path.write_text("# schema: other/9\n")
    with pytest.raises(SchemaVersionMismatch):
        read_feature_csv(path)
    good = write_feature_csv([FeatureVector(tuple([0.0] * 13), None, "k")])
    path.write_text(good)
    assert read_feature_csv(path)[0].label is None
    with pytest.raises(UnlabeledRow):
        read_feature_csv(path, require_labels=True)
    path.write_text(good.replace(",0,", ",nan,", 1))
    with pytest.raises(MalformedCsv):
        read_feature_csv(path)
    path.write_text(good.rstrip("\n") + ",extra\n")
    with pytest.raises(MalformedCsv) as info:
        read_feature_csv(path)
    assert info.value.line == 3


def test_correlation_report(corpus_items):
    vectors = [extract_features(i.bundle) for i in corpus_items]
    report = correlation_report(vectors)
    assert report.get("f6", "f6").coefficient == pytest.approx(1.0)
    assert report.get("f2", "f3").coefficient == pytest.approx(report.get("f3", "f2").coefficient)
    assert report.age_rank is report.get("f2", "f3")
    d = report.to_dict()
    assert len(d["matrix"]) == 14 and d["n"] == len(vectors)
    assert "age x rank" in report.to_text()
    constant = [replace(v, values=(0.0,) + v.values[1:]) for v in vectors]
    assert correlation_report(constant).get("f1", "label") is None
    with pytest.raises(UnlabeledRow):
        correlation_report([replace(v, label=None) for v in vectors])


def test_extract_store_ordered(small_store):
    vectors = extract_store(small_store)
    assert len(vectors) == 120
    assert [v.key for v in vectors] == sorted(v.key for v in vectors)
