"""Assemble evidence bundles, live or from the replay store."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

from ..errors import HttpError, MalformedUrl, NoRecord, NotRecorded, ServiceError
from ..urlkit import parse_url
from . import net
from .render import fetch_snapshot
from .store import bundle_key, load_bundle, store_bundle
from .types import EvidenceBundle

log = logging.getLogger(__name__)


@dataclass
class FetchOutcome:
    url: str
    key: str | None = None
    error: Exception | None = None


class EvidenceCollector:
    """Gather one bundle per URL.

    In replay mode bundles only come from ``store_root``; in live mode the
    page, WHOIS, rank and reputation services are queried and any failing
    optional service is recorded as absent with the reason.
    """

    def __init__(self, store_root, live=False, renderer=None, whois=None, rank=None, reputation=None,
                 http_timeout=10.0, http_session=None):
        self.store_root = store_root
        self.live = live
        self.renderer = renderer
        self.whois = whois
        self.rank = rank
        self.reputation = reputation
        self.http_timeout = http_timeout
        self.http_session = http_session

    def collect(self, url: str, label: str | None = None) -> EvidenceBundle:
        if not self.live:
            return load_bundle(url, self.store_root)
        if net.is_live():
            return self._collect_live(url, label)
        with net.live_mode(True):
            return self._collect_live(url, label)

    def _collect_live(self, url, label):
        try:
            snapshot = fetch_snapshot(url, self.renderer, timeout=self.http_timeout, session=self.http_session)
        except HttpError as exc:
            if exc.snapshot is None:
                raise
            snapshot = exc.snapshot
        domain = parse_url(url).registrable_domain
        absent = {}

        whois = self._optional("whois", self.whois, domain, absent)
        rank = self._optional("rank", self.rank, domain, absent)
        reputation = self._optional("reputation", self.reputation, snapshot.url_final, absent)
        initial_reputation = None
        if snapshot.url_final != snapshot.url_initial and reputation is not None:
            initial_reputation = self._optional("initial_reputation", self.reputation, url, {})
        return EvidenceBundle(snapshot, whois, rank, reputation, label, absent, initial_reputation)

    @staticmethod
    def _optional(name, client, arg, absent):
        if client is None:
            absent[name] = "service not configured"
            return None
        if getattr(client, "configured", True) is False:
            absent[name] = "no API key"
            return None
        try:
            return client.query(arg)
        except NoRecord as exc:
            absent[name] = f"no record: {exc}"
        except (ServiceError, MalformedUrl) as exc:
            absent[name] = f"{type(exc).__name__}: {exc}"
        return None

    def fetch_many(self, urls, labels=None, workers=4) -> list[FetchOutcome]:
        """Collect and store bundles with a bounded worker pool.

        Results are written by the calling thread only, so the store sees a
        single writer.
        """
        labels = labels or {}
        outcomes = {url: FetchOutcome(url) for url in urls}
        if not self.live:
            for url in urls:
                try:
                    load_bundle(url, self.store_root)
                    outcomes[url].key = bundle_key(url)
                except NotRecorded as exc:
                    outcomes[url].error = exc
            return [outcomes[u] for u in urls]
        # switch once here; per-thread toggling would race
        with net.live_mode(True), ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            futures = {pool.submit(self.collect, url, labels.get(url)): url for url in urls}
            for future in as_completed(futures):
                url = futures[future]
                try:
                    bundle = future.result()
                except Exception as exc:  # noqa: BLE001 - reported per URL
                    log.warning("fetch failed for %s: %s", url, exc)
                    outcomes[url].error = exc
                    continue
                outcomes[url].key = store_bundle(bundle, self.store_root)
        return [outcomes[u] for u in urls]

