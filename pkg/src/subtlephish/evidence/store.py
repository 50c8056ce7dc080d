"""On-disk record/replay store for evidence bundles.

Layout::

    <root>/<sha256 of canonical url_initial>/bundle.json
    <root>/<sha256 of canonical url_initial>/meta.json
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from datetime import datetime
from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

from .. import __version__
from ..errors import NotRecorded, StoreCorrupt
from .types import EvidenceBundle, format_timestamp

RECORDER_VERSION = f"subtlephish-recorder/{__version__}"
_KEY_RE = re.compile(r"^[0-9a-f]{64}$")
_write_lock = threading.Lock()


def canonical_url(url: str) -> str:
    text = url.strip()
    if "://" not in text:
        text = "http://" + text
    parts = urlsplit(text)
    path = parts.path or "/"
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(), path, parts.query, parts.fragment))


def bundle_key(url: str) -> str:
    return hashlib.sha256(canonical_url(url).encode("utf-8")).hexdigest()


def dump_json(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def store_bundle(bundle: EvidenceBundle, store_root, recorded_at: datetime | None = None) -> str:
    """Write a bundle and its checksum metadata; returns the bundle key.

    ``recorded_at`` defaults to the snapshot time so that regenerating a
    store from the same inputs is byte-identical.
    """
    key = bundle_key(bundle.snapshot.url_initial)
    payload = dump_json(bundle.to_dict())
    meta = {
        "recorder_version": RECORDER_VERSION,
        "key": key,
        "url_initial": bundle.snapshot.url_initial,
        "fetched_at": format_timestamp(bundle.snapshot.fetched_at),
        "recorded_at": format_timestamp(recorded_at or bundle.snapshot.fetched_at),
        "checksums": {"bundle.json": hashlib.sha256(payload).hexdigest()},
    }
    directory = Path(store_root) / key
    with _write_lock:
        directory.mkdir(parents=True, exist_ok=True)
        _atomic_write(directory / "bundle.json", payload)
        _atomic_write(directory / "meta.json", dump_json(meta))
    return key


def resolve_key(key_or_url: str) -> str:
    return key_or_url if _KEY_RE.match(key_or_url) else bundle_key(key_or_url)


def has_bundle(key_or_url: str, store_root) -> bool:
    return (Path(store_root) / resolve_key(key_or_url) / "bundle.json").is_file()


def load_bundle(key_or_url: str, store_root) -> EvidenceBundle:
    key = resolve_key(key_or_url)
    directory = Path(store_root) / key
    bundle_path = directory / "bundle.json"
    if not bundle_path.is_file():
        raise NotRecorded(f"no recorded evidence for {key_or_url}", key=key)
    payload = bundle_path.read_bytes()
    try:
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        expected = meta["checksums"]["bundle.json"]
    except (OSError, ValueError, KeyError) as exc:
        raise StoreCorrupt(f"unreadable metadata: {exc}", key=key) from None
    if hashlib.sha256(payload).hexdigest() != expected:
        raise StoreCorrupt("bundle checksum mismatch", key=key)
    try:
        return EvidenceBundle.from_dict(json.loads(payload.decode("utf-8")))
    except (ValueError, KeyError, TypeError) as exc:
        raise StoreCorrupt(f"invalid bundle: {exc}", key=key) from None


def iter_keys(store_root) -> list[str]:
    root = Path(store_root)
    if not root.is_dir():
        return []
    return sorted(p.name for p in root.iterdir() if _KEY_RE.match(p.name) and (p / "bundle.json").is_file())
