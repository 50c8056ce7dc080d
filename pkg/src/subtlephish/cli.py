"""Command-line front end: fetch, extract, train, predict, evaluate, analyze, synth.

Exit codes: 0 success, 1 usage error, 2 data error, 3 service error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import DataError, SubtlePhishError
from .evidence import net
from .evidence.collector import EvidenceCollector
from .evidence.store import bundle_key, dump_json, load_bundle
from .lists import read_list

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SERVICE = 0, 1, 2, 3
HELP_WIDTH = 100

log = logging.getLogger("subtlephish")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=HELP_WIDTH, max_help_position=36)


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _config_digest(args) -> str:
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "func"}
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()


def write_manifest(path, args, inputs, outputs, started_at, extra=None):
    manifest = {
        "command": args.command,
        "config_digest": _config_digest(args),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "mode": "live" if getattr(args, "live", False) else "replay",
        "started_at": started_at,
        "finished_at": _now(),
        "tool_version": f"subtlephish {__version__}",
    }
    if extra:
        manifest.update(extra)
    Path(path).write_bytes(dump_json(manifest))
    return manifest


def _manifest_path(output) -> Path:
    output = Path(output)
    if output.is_dir():
        return output / "manifest.json"
    return output.with_name(output.name + ".manifest.json")


# --- shared option groups -------------------------------------------------


def _add_mode(p):
    group = p.add_mutually_exclusive_group()
    group.add_argument("--live", action="store_true", help="query live services (network access)")
    group.add_argument("--replay", action="store_true", help="read recorded evidence only (default)")


def _add_services(p):
    p.add_argument("--renderer", default=os.environ.get("SUBTLEPHISH_RENDERER"),
                   help="WebDriver endpoint for rendering (env SUBTLEPHISH_RENDERER)")
    p.add_argument("--whois-server", default="whois.iana.org:43", help="WHOIS server host:port")
    p.add_argument("--rank-endpoint", default=None, help="search API endpoint (key from RANK_API_KEY)")
    p.add_argument("--reputation-endpoint", default=None,
                   help="reputation API endpoint (key from REPUTATION_API_KEY)")
    p.add_argument("--timeout", type=float, default=10.0, help="per-request timeout in seconds")
    p.add_argument("--quiet-period", type=float, default=2.0, help="renderer DOM quiet period in seconds")
    p.add_argument("--max-wait", type=float, default=15.0, help="renderer settle limit in seconds")


def _add_feature_config(p):
    p.add_argument("--benign-hosts", type=Path, help="benign hosting list file (replaces the shipped list)")
    p.add_argument("--suffixes", type=Path, help="multi-label public suffix file")
    p.add_argument("--keywords", type=Path, help="validity keyword file")
    p.add_argument("--captcha-markers", type=Path, help="captcha marker file")
    p.add_argument("--no-reputation", action="store_true", help="zero the reputation feature (f4)")
    p.add_argument("--age-imputation", type=float, default=0.0, help="domain age used when WHOIS is absent")


def _add_split(p):
    p.add_argument("--train-fraction", type=float, default=None,
                   help="stratified split fraction; omit to use the whole file")
    p.add_argument("--split-seed", type=int, default=7, help="seed of the stratified split")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subtlephish", formatter_class=_formatter,
                     description="Phishing page detection from correlated evidence.")
    parser.add_argument("--version", action="version", version=f"subtlephish {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("fetch", help="collect evidence for URLs into a replay store", formatter_class=_formatter)
    p.add_argument("urls", nargs="*", help="URLs to fetch")
    p.add_argument("--url-list", type=Path, help="file of URLs, one per line, optional '\\t<label>'")
    p.add_argument("--store", type=Path, required=True, help="replay store directory")
    p.add_argument("--workers", type=int, default=4, help="parallel fetch workers (live mode)")
    _add_mode(p)
    _add_services(p)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("extract", help="turn a replay store into a feature CSV", formatter_class=_formatter)
    p.add_argument("--store", type=Path, required=True, help="replay store directory")
    p.add_argument("--out", type=Path, required=True, help="feature CSV to write")
    _add_feature_config(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit the logistic regression model", formatter_class=_formatter)
    p.add_argument("--features", type=Path, required=True, help="labeled feature CSV")
    p.add_argument("--model", type=Path, required=True, help="model file to write")
    p.add_argument("--learning-rate", type=float, default=0.1, help="gradient descent step size")
    p.add_argument("--max-epochs", type=int, default=5000, help="epoch limit")
    p.add_argument("--tol", type=float, default=1e-9, help="stop when the loss changes less than this")
    p.add_argument("--l2", type=float, default=0.0, help="L2 penalty on non-bias weights")
    p.add_argument("--threshold", type=float, default=0.5, help="decision threshold")
    p.add_argument("--seed", type=int, default=0, help="seed recorded with the model")
    _add_split(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify one URL or stored bundle", formatter_class=_formatter)
    p.add_argument("--model", type=Path, required=True, help="model file")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--url", help="URL to classify")
    target.add_argument("--key", help="bundle key in the store")
    p.add_argument("--store", type=Path, required=True, help="replay store directory")
    p.add_argument("--threshold", type=float, default=None, help="override the model threshold")
    p.add_argument("--out", type=Path, help="also write the verdict as JSON")
    _add_mode(p)
    _add_services(p)
    _add_feature_config(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a model on a labeled feature CSV", formatter_class=_formatter)
    p.add_argument("--model", type=Path, help="model file")
    p.add_argument("--features", type=Path, required=True, help="labeled feature CSV")
    p.add_argument("--predictions", type=Path, help="score an external key,label prediction file instead")
    p.add_argument("--out", type=Path, help="machine-readable JSON report")
    _add_split(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="correlation report or DOM similarity", formatter_class=_formatter)
    asub = p.add_subparsers(dest="analysis", metavar="ANALYSIS", parser_class=_Parser)
    a = asub.add_parser("corr", help="pairwise Pearson report over a labeled CSV", formatter_class=_formatter)
    a.add_argument("--features", type=Path, required=True, help="labeled feature CSV")
    a.add_argument("--out", type=Path, help="JSON report to write")
    a.set_defaults(func=cmd_analyze_corr)
    a = asub.add_parser("domsim", help="skeleton similarity of two HTML files", formatter_class=_formatter)
    a.add_argument("first", type=Path, help="first HTML file")
    a.add_argument("second", type=Path, help="second HTML file")
    a.add_argument("--threshold", type=float, default=0.8, help="similarity reported as 'similar' at or above")
    a.set_defaults(func=cmd_analyze_domsim)
    p.set_defaults(func=lambda args: _missing_subcommand(p))

    p = sub.add_parser("synth", help="generate the synthetic corpus into a store", formatter_class=_formatter)
    p.add_argument("--store", type=Path, required=True, help="replay store directory")
    p.add_argument("--seed", type=int, default=42, help="generator seed")
    p.add_argument("--benign", type=int, default=500, help="benign page count")
    p.add_argument("--phish", type=int, default=500, help="phishing page count")
    p.add_argument("--mix", default="0.2,0.2,0.2,0.2,0.2", help="T1..T5 proportions, comma separated")
    p.add_argument("--benign-host-fraction", type=float, default=0.1,
                   help="share of benign pages on hosting services")
    p.set_defaults(func=cmd_synth)
    return parser


def _missing_subcommand(parser):
    parser.print_usage(sys.stderr)
    raise UsageError("a subcommand is required")


# --- commands -------------------------------------------------------------


def _feature_config(args):
    from .features import FeatureConfig

    return FeatureConfig(
        benign_hosts=frozenset(read_list(args.benign_hosts)) if args.benign_hosts else None,
        suffix_rules=frozenset(read_list(args.suffixes)) if args.suffixes else None,
        validity_keywords=tuple(read_list(args.keywords)) if args.keywords else None,
        captcha_markers=tuple(read_list(args.captcha_markers)) if args.captcha_markers else None,
        age_imputation_days=args.age_imputation,
        use_reputation=not args.no_reputation,
    )


def _collector(args) -> EvidenceCollector:
    if not args.live:
        return EvidenceCollector(args.store, live=False)
    from .evidence.render import WebDriverRenderer
    from .evidence.services import RankClient, ReputationClient
    from .evidence.whois import WhoisClient

    host, _, port = args.whois_server.partition(":")
    renderer = (
        WebDriverRenderer(args.renderer, quiet_period=args.quiet_period, max_wait=args.max_wait)
        if args.renderer else None
    )
    rank = RankClient(args.rank_endpoint, timeout=args.timeout) if args.rank_endpoint else RankClient(timeout=args.timeout)
    reputation = (
        ReputationClient(args.reputation_endpoint, timeout=args.timeout)
        if args.reputation_endpoint else ReputationClient(timeout=args.timeout)
    )
    return EvidenceCollector(
        args.store, live=True, renderer=renderer,
        whois=WhoisClient((host, int(port or 43)), timeout=args.timeout),
        rank=rank, reputation=reputation, http_timeout=args.timeout,
    )


def read_url_list(path) -> list[tuple[str, str | None]]:
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        url, _, label = line.partition("\t")
        entries.append((url.strip(), label.strip() or None))
    return entries


def cmd_fetch(args) -> int:
    started = _now()
    entries = [(u, None) for u in args.urls]
    if args.url_list:
        entries += read_url_list(args.url_list)
    if not entries:
        raise UsageError("no URLs given")
    labels = {u: lab for u, lab in entries if lab}
    urls = list(dict.fromkeys(u for u, _ in entries))
    args.store.mkdir(parents=True, exist_ok=True)
    outcomes = _collector(args).fetch_many(urls, labels, workers=args.workers)
    failures = [o for o in outcomes if o.error is not None]
    for o in outcomes:
        if o.error is None:
            print(f"stored {o.key} {o.url}")
        else:
            print(f"error [{getattr(o.error, 'module', 'evidence')}] {type(o.error).__name__}: {o.url}: {o.error}",
                  file=sys.stderr)
    write_manifest(args.store / "fetch.manifest.json", args, [args.url_list] if args.url_list else [], [args.store],
                   started, {"fetched": len(outcomes) - len(failures), "failed": len(failures)})
    if not failures:
        return EXIT_OK
    if all(isinstance(o.error, DataError) for o in failures):
        return EXIT_DATA
    return EXIT_SERVICE


def cmd_extract(args) -> int:
    from .features import extract_store, write_feature_csv

    started = _now()
    net.set_live(False)
    vectors = extract_store(args.store, _feature_config(args))
    write_feature_csv(vectors, args.out)
    write_manifest(_manifest_path(args.out), args, [args.store], [args.out], started, {"rows": len(vectors)})
    print(f"wrote {len(vectors)} rows to {args.out}")
    return EXIT_OK


def _maybe_split(vectors, args, side):
    if args.train_fraction is None:
        return vectors
    from .evalkit import split

    train, test = split(vectors, args.train_fraction, args.split_seed)
    return train if side == "train" else test


def cmd_train(args) -> int:
    from .evalkit import load_labeled_dataset
    from .lrmodel import TrainConfig, save_model, train

    started = _now()
    vectors = _maybe_split(load_labeled_dataset(args.features), args, "train")
    config = TrainConfig(args.learning_rate, args.max_epochs, args.tol, args.seed, args.l2)
    model = train(vectors, config, threshold=args.threshold)
    save_model(model, args.model)
    write_manifest(_manifest_path(args.model), args, [args.features], [args.model], started,
                   {"samples": len(vectors), "epochs": model.n_iter_, "final_loss": model.loss_curve_[-1]})
    print(f"trained on {len(vectors)} samples in {model.n_iter_} epochs, loss {model.loss_curve_[-1]:.6f}")
    return EXIT_OK


def cmd_predict(args) -> int:
    from .features import extract_features
    from .lrmodel import load_model, predict

    started = _now()
    model = load_model(args.model)
    target = args.url or args.key
    if args.live and args.url:
        bundle = _collector(args).collect(args.url)
    else:
        net.set_live(False)
        bundle = load_bundle(target, args.store)
    vector = extract_features(bundle, _feature_config(args))
    label, p = predict(model, vector, args.threshold)
    print(f"{label} p={p:.4f} {target}")
    if args.out:
        args.out.write_bytes(dump_json({"target": target, "key": bundle_key(bundle.snapshot.url_initial),
                                        "label": label, "probability": p}))
        write_manifest(_manifest_path(args.out), args, [args.model, args.store], [args.out], started)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .evalkit import evaluate, evaluate_predictions, load_labeled_dataset, read_predictions

    started = _now()
    vectors = _maybe_split(load_labeled_dataset(args.features), args, "test")
    if args.predictions:
        report = evaluate_predictions(read_predictions(args.predictions), vectors)
        name, inputs = "external", [args.predictions, args.features]
    elif args.model:
        from .lrmodel import load_model

        report = evaluate(load_model(args.model), vectors)
        name, inputs = "LR", [args.model, args.features]
    else:
        raise UsageError("evaluate needs --model or --predictions")
    print(report.to_text(name), end="")
    if args.out:
        args.out.write_text(report.to_json(), encoding="utf-8")
        write_manifest(_manifest_path(args.out), args, inputs, [args.out], started,
                       {"report_digest": report.digest()})
    return EXIT_OK


def cmd_analyze_corr(args) -> int:
    from .evalkit import load_labeled_dataset
    from .features import correlation_report

    started = _now()
    report = correlation_report(load_labeled_dataset(args.features))
    print(report.to_text(), end="")
    if args.out:
        args.out.write_bytes(dump_json(report.to_dict()))
        write_manifest(_manifest_path(args.out), args, [args.features], [args.out], started)
    return EXIT_OK


def cmd_analyze_domsim(args) -> int:
    from .domkit import extract_skeleton, skeleton_similarity

    a = extract_skeleton(args.first.read_text(encoding="utf-8"))
    b = extract_skeleton(args.second.read_text(encoding="utf-8"))
    score = skeleton_similarity(a, b)
    verdict = "similar" if score >= args.threshold else "different"
    print(f"similarity={score:.4f} {verdict}")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthcorpus import CorpusConfig, generate, write_corpus

    started = _now()
    try:
        mix = tuple(float(x) for x in args.mix.split(","))
    except ValueError:
        raise UsageError(f"bad --mix {args.mix!r}") from None
    config = CorpusConfig(n_benign=args.benign, n_phish=args.phish, seed=args.seed, trend_mix=mix,
                          benign_host_fraction=args.benign_host_fraction)
    manifest = write_corpus(generate(config), args.store, config)
    # the corpus manifest doubles as the run manifest
    write_manifest(args.store / "manifest.json", args, [], [args.store], started, manifest)
    counts = ", ".join(f"{k}={v}" for k, v in manifest["counts"].items())
    print(f"wrote {sum(manifest['counts'].values())} bundles to {args.store} ({counts})")
    return EXIT_OK


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "live", False):
        net.set_live(True)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"subtlephish: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SubtlePhishError as exc:
        key = f" key={exc.key}" if exc.key else ""
        print(f"error [{exc.module}]{key} {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error [io] {exc}", file=sys.stderr)
        return EXIT_DATA
    finally:
        net.set_live(False)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
