"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import hashlib
import os
import math
import random
import shutil
import socket
import subprocess
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

import subtlephish
from subtlephish.cli import run
from subtlephish.domkit import extract_skeleton, inspect_content, skeleton_similarity
from subtlephish.evalkit import ConfusionMatrix, metrics_from_matrix
from subtlephish.evidence.whois import default_tag_aliases, parse_creation_date
from subtlephish.features import extract_features
from subtlephish.lrmodel import LogisticRegressionGD, gradient, loss
from subtlephish.synthcorpus import TEMPLATES, render_template, whois_text
from subtlephish.textmetrics import levenshtein
from conftest import make_bundle


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else ""))
        assert ok, f"criterion {number} failed: {detail}"

    return report


def _oracle(x, y):
    @lru_cache(maxsize=None)
    def lev(i, j):
        if min(i, j) == 0:
            return max(i, j)
        return min(lev(i - 1, j) + 1, lev(i, j - 1) + 1, lev(i - 1, j - 1) + (x[i - 1] != y[j - 1]))

    return lev(len(x), len(y))


def test_criterion_1_levenshtein_oracle(verdict):
    start = time.perf_counter()
    rng = random.Random(1)
    alphabets = ["ab", "acgt", "abcdefghijklmnopqrstuvwxyz0123456789", "xé字-/.:@", "AaBbCc"]
    mismatches = 0
    for _ in range(1000):
        alphabet = rng.choice(alphabets)
        x = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 20)))
        y = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 20)))
        mismatches += levenshtein(x, y) != _oracle(x, y)
    base = levenshtein("", "") == 0 and levenshtein("abc", "") == 3 and levenshtein("", "abcd") == 4
    elapsed = time.perf_counter() - start
    verdict(1, "Levenshtein matches recursive oracle on 1000 pairs",
            mismatches == 0 and base and elapsed < 5, f"{mismatches} mismatches, {elapsed:.2f}s")


def test_criterion_2_gradient_check(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(60):
        m, n = int(rng.integers(5, 50)), int(rng.integers(1, 14))
        X = rng.normal(size=(m, n))
        y = rng.integers(0, 2, size=m).astype(float)
        theta = rng.normal(scale=0.8, size=n + 1)
        l2 = float(rng.choice([0.0, 0.5]))
        analytic = gradient(theta, X, y, l2)
        numeric = np.empty_like(theta)
        for j in range(theta.size):
            e = np.zeros_like(theta)
            e[j] = 1e-6
            numeric[j] = (loss(theta + e, X, y, l2) - loss(theta - e, X, y, l2)) / 2e-6
        rel = np.linalg.norm(analytic - numeric) / (np.linalg.norm(analytic) + np.linalg.norm(numeric))
        worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    verdict(2, "analytic gradient matches central differences on 60 configs",
            worst < 1e-5 and elapsed < 10, f"worst rel err {worst:.2e}, {elapsed:.2f}s")


def _pipeline(root):
    store, csv, model, report = root / "store", root / "f.csv", root / "m.json", root / "r.json"
    steps = [
        ["synth", "--store", str(store), "--seed", "42", "--benign", "500", "--phish", "500"],
        ["extract", "--store", str(store), "--out", str(csv)],
        ["train", "--features", str(csv), "--model", str(model), "--learning-rate", "0.1",
         "--max-epochs", "5000", "--train-fraction", "0.8", "--split-seed", "7"],
        ["evaluate", "--model", str(model), "--features", str(csv), "--train-fraction", "0.8",
         "--split-seed", "7", "--out", str(report)],
    ]
    for step in steps:
        assert run(step) == 0, step
    import json

    return json.loads(report.read_text()), hashlib.sha256(report.read_bytes()).hexdigest()


def test_criterion_3_synthetic_benchmark(verdict, tmp_path, capsys):
    start = time.perf_counter()
    first, digest_a = _pipeline(tmp_path / "a")
    elapsed = time.perf_counter() - start
    _, digest_b = _pipeline(tmp_path / "b")
    capsys.readouterr()
    ok = (first["accuracy"] >= 95 and first["far"] <= 5 and first["frr"] <= 5
          and digest_a == digest_b and elapsed < 60)
    verdict(3, "synthetic benchmark: accuracy >= 95, FAR <= 5, FRR <= 5, deterministic", ok,
            f"acc {first['accuracy']:.1f} FAR {first['far']:.1f} FRR {first['frr']:.1f}, "
            f"digests {'equal' if digest_a == digest_b else 'differ'}, {elapsed:.1f}s per run")


def test_criterion_4_metric_identity(verdict):
    rng = random.Random(4)
    identity = True
    for _ in range(5000):
        tp, fn, fp, tn = (rng.randint(0, 10_000) for _ in range(4))
        if tp + fn == 0 or tp + fn + fp + tn == 0:
            continue
        r = metrics_from_matrix(ConfusionMatrix(tp, fn, fp, tn))
        identity &= r.far + r.recall == 100
    r = metrics_from_matrix(ConfusionMatrix(tp=90, fn=10, fp=5, tn=95))
    example = (math.isclose(r.accuracy, 92.5) and round(r.precision, 2) == 94.74 and math.isclose(r.recall, 90.0)
               and math.isclose(r.far, 10.0) and math.isclose(r.frr, 5.0))
    verdict(4, "far + recall == 100 exactly; worked example 92.5/94.74/90.0/10.0/5.0", identity and example,
            f"acc {r.accuracy} prec {r.precision:.2f} rec {r.recall} far {r.far} frr {r.frr}")


def test_criterion_5_trend_detectors(verdict):
    fake = inspect_content("<html><body>Page Not Found 404</body></html>", 200).fake_invalid
    gate_html = ('<html><body><div class="g-recaptcha" data-sitekey="x"></div>'
                 '<script>document.write("<form>")</script></body></html>')
    captcha = inspect_content(gate_html, 200).captcha_gated
    login = ('<html><body><form><input type="email" name="email"><input type="password" name="pw">'
             '</form></body></html>')
    redirect = extract_features(make_bundle(
        "http://win-prize.xyz/a", "<script>location='x'</script>",
        final="https://account-verify-secure.vercel.app/signin/session?id=4471", rendered=login))
    hosted = extract_features(make_bundle("http://phishfb.ddns.net/", login))
    ok = fake and captcha and redirect["f6"] > 30 and redirect["f5"] >= 2 and hosted["f8"] == 1
    verdict(5, "fake-invalid, captcha gate, redirect+input, benign host detectors", ok,
            f"fake_invalid={fake} captcha_gated={captcha} f6={redirect['f6']:.0f} "
            f"f5={redirect['f5']:.0f} f8={hosted['f8']:.0f}")


UNRELATED_PAIRS = [("login", "captcha"), ("login", "fake_error"), ("shop", "captcha"),
                   ("shop", "redirect_stub"), ("blog", "captcha"), ("shop", "document_upload")]


def test_criterion_6_dom_similarity(verdict):
    skeletons = {name: extract_skeleton(render_template(name, 42)) for name in TEMPLATES}
    self_sim = min(skeleton_similarity(s, s) for s in skeletons.values())
    clone = skeleton_similarity(extract_skeleton(render_template("login", 42)),
                                extract_skeleton(render_template("login", 43)))
    unrelated = max(skeleton_similarity(skeletons[a], skeletons[b]) for a, b in UNRELATED_PAIRS)
    verdict(6, "skeleton similarity: self 1.0, T2 clones >= 0.95, unrelated <= 0.5",
            self_sim == 1.0 and clone >= 0.95 and unrelated <= 0.5,
            f"self {self_sim:.2f}, clone {clone:.2f}, worst unrelated {unrelated:.2f}")


def _isolation_prefix():
    """Command prefix that runs a child in a fresh network namespace, if the host allows it."""
    unshare = shutil.which("unshare")
    if not unshare:
        return None
    for flags in ("-n", "-rn"):
        if subprocess.run([unshare, flags, "true"], capture_output=True).returncode == 0:
            return [unshare, flags]
    return None


def _extract_cmd(store, out):
    return [sys.executable, "-m", "subtlephish.cli", "extract", "--store", str(store), "--out", str(out)]


def test_criterion_7_replay_determinism(verdict, small_store, tmp_path, monkeypatch, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    prefix = _isolation_prefix()
    isolated = prefix is not None
    if isolated:
        env = dict(os.environ, PYTHONPATH=str(Path(subtlephish.__file__).parents[1]))
        for out in (a, b):
            proc = subprocess.run([*prefix, *_extract_cmd(small_store, out)], capture_output=True, text=True, env=env)
            assert proc.returncode == 0, proc.stderr
    else:
        for out in (a, b):
            assert run(["extract", "--store", str(small_store), "--out", str(out)]) == 0

    # in-process as well, counting every attempted connection
    attempts = []
    real_connect = socket.socket.connect

    def counting_connect(self, address):
        attempts.append(address)
        return real_connect(self, address)

    monkeypatch.setattr(socket.socket, "connect", counting_connect)
    monkeypatch.setattr(socket, "create_connection", lambda *a, **k: attempts.append(a) or (_ for _ in ()).throw(
        OSError("blocked")))
    c = tmp_path / "c.csv"
    assert run(["extract", "--store", str(small_store), "--out", str(c)]) == 0
    capsys.readouterr()
    same = a.read_bytes() == b.read_bytes() == c.read_bytes()
    verdict(7, "extract twice with networking disabled gives byte-identical CSVs and no connections",
            same and not attempts,
            f"{'network namespace' if isolated else 'in-process guard only'}, "
            f"{len(a.read_bytes().splitlines()) - 2} rows, {len(attempts)} connection attempts")


def test_criterion_8_whois_dates(verdict):
    from datetime import date

    created = date(2018, 11, 23)
    parsed = 0
    for tag in default_tag_aliases():
        for fmt in ("iso", "dd-mon-yyyy", "yyyy.mm.dd", "dd/mm/yyyy"):
            parsed += parse_creation_date(whois_text("example.com", created, tag, fmt)) == (created, tag)
    no_date = parse_creation_date(whois_text("example.com", None, "Creation Date", "iso")) is None
    verdict(8, "WHOIS creation date: 7 aliases x 4 formats, no-date fixture absent",
            parsed == 28 and no_date, f"{parsed}/28 parsed, no-date -> {'absent' if no_date else 'parsed'}")


def test_criterion_9_training_determinism(verdict):
    rng = np.random.default_rng(9)
    X = np.vstack([rng.normal(-1.5, 0.4, size=(10, 2)), rng.normal(1.5, 0.4, size=(10, 2))])
    y = np.array([0] * 10 + [1] * 10)
    a = LogisticRegressionGD().fit(X, y)
    b = LogisticRegressionGD().fit(X, y)
    identical = a.theta_.tobytes() == b.theta_.tobytes()
    accuracy = float((a.predict(X) == y).mean())
    ln2 = abs(loss(np.zeros(3), X, y) - math.log(2))
    verdict(9, "identical theta across runs, separable toy set fully fit, loss(0) = ln 2",
            identical and accuracy == 1.0 and ln2 < 1e-9,
            f"theta {'identical' if identical else 'differs'}, train acc {accuracy:.0%}, |loss0 - ln2| {ln2:.1e}")
