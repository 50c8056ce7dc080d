"""Search-index rank and reputation-listing clients.

The default adapters speak the Custom Search JSON API and the Safe Browsing
v4 lookup API. Other services plug in by subclassing and overriding
``request``/``parse``.
"""

from __future__ import annotations

import os

import requests

from ..errors import (
    MalformedUrl,
    QuotaExceeded,
    RankServiceUnavailable,
    ReputationServiceUnavailable,
)
from ..urlkit import parse_url
from .net import RateLimiter, require_network
from .types import RankInfo, ReputationVerdict

RANK_API_KEY_ENV = "RANK_API_KEY"
RANK_ENGINE_ENV = "RANK_ENGINE_ID"
REPUTATION_API_KEY_ENV = "REPUTATION_API_KEY"

DEFAULT_RANK_ENDPOINT = "https://www.googleapis.com/customsearch/v1"
DEFAULT_REPUTATION_ENDPOINT = "https://safebrowsing.googleapis.com/v4/threatMatches:find"


def rank_from_links(domain: str, links) -> RankInfo:
    """Score the top ten result links against the queried registrable domain."""
    target = parse_url(domain).registrable_domain
    positions = []
    for position, link in enumerate(list(links)[:10], start=1):
        try:
            if parse_url(link).registrable_domain == target:
                positions.append(position)
        except MalformedUrl:
            continue
    if not positions:
        return RankInfo(False)
    return RankInfo(True, positions[0], len(positions))


class RankClient:
    def __init__(self, endpoint=DEFAULT_RANK_ENDPOINT, api_key=None, engine_id=None, timeout=10.0,
                 session=None, per_second=None):
        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get(RANK_API_KEY_ENV)
        self.engine_id = engine_id if engine_id is not None else os.environ.get(RANK_ENGINE_ENV)
        self.timeout = timeout
        self.session = session or requests.Session()
        self._limiter = RateLimiter(per_second)

    @property
    def configured(self) -> bool:
        return bool(self.api_key)

    def request(self, domain: str) -> dict:
        params = {"key": self.api_key, "q": domain, "num": 10}
        if self.engine_id:
            params["cx"] = self.engine_id
        try:
            resp = self.session.get(self.endpoint, params=params, timeout=self.timeout)
        except requests.RequestException as exc:
            raise RankServiceUnavailable(str(exc)) from None
        if resp.status_code == 429 or (resp.status_code == 403 and "limitexceeded" in resp.text.lower()):
            raise QuotaExceeded(f"rank service quota exhausted ({resp.status_code})")
        if resp.status_code != 200:
            raise RankServiceUnavailable(f"rank service returned {resp.status_code}")
        try:
            return resp.json()
        except ValueError:
            raise RankServiceUnavailable("rank service returned invalid JSON") from None

    def parse(self, domain: str, payload: dict) -> RankInfo:
        links = [item.get("link", "") for item in payload.get("items") or []]
        return rank_from_links(domain, links)

    def query(self, domain: str) -> RankInfo:
        if not domain:
            raise ValueError("domain must be non-empty")
        require_network("rank")
        self._limiter.wait()
        return self.parse(domain, self.request(domain))


class ReputationClient:
    source = "safe-browsing"
    threat_types = ("MALWARE", "SOCIAL_ENGINEERING", "UNWANTED_SOFTWARE", "POTENTIALLY_HARMFUL_APPLICATION")

    def __init__(self, endpoint=DEFAULT_REPUTATION_ENDPOINT, api_key=None, timeout=10.0, session=None,
                 per_second=None):
        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get(REPUTATION_API_KEY_ENV)
        self.timeout = timeout
        self.session = session or requests.Session()
        self._limiter = RateLimiter(per_second)

    @property
    def configured(self) -> bool:
        return bool(self.api_key)

    def request(self, url: str) -> dict:
        body = {
            "client": {"clientId": "subtlephish", "clientVersion": "0.1.0"},
            "threatInfo": {
                "threatTypes": list(self.threat_types),
                "platformTypes": ["ANY_PLATFORM"],
                "threatEntryTypes": ["URL"],
                "threatEntries": [{"url": url}],
            },
        }
        try:
            resp = self.session.post(self.endpoint, params={"key": self.api_key}, json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ReputationServiceUnavailable(str(exc)) from None
        if resp.status_code != 200:
            raise ReputationServiceUnavailable(f"reputation service returned {resp.status_code}")
        if not resp.content.strip():
            return {}
        try:
            return resp.json()
        except ValueError:
            raise ReputationServiceUnavailable("reputation service returned invalid JSON") from None

    def parse(self, url: str, payload: dict) -> ReputationVerdict:
        matches = payload.get("matches") or []
        if not matches:
            return ReputationVerdict(False, self.source)
        kinds = sorted({m.get("threatType", "UNKNOWN") for m in matches})
        return ReputationVerdict(True, self.source, ",".join(kinds))

    def query(self, url: str) -> ReputationVerdict:
        parse_url(url)
        require_network("reputation")
        self._limiter.wait()
        return self.parse(url, self.request(url))


def query_rank(domain: str, endpoint=DEFAULT_RANK_ENDPOINT, **kwargs) -> RankInfo:
    return RankClient(endpoint, **kwargs).query(domain)


def query_reputation(url: str, endpoint=DEFAULT_REPUTATION_ENDPOINT, **kwargs) -> ReputationVerdict:
    return ReputationClient(endpoint, **kwargs).query(url)
