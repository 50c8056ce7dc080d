"""Evidence retrieval: page snapshots, WHOIS, search rank, reputation, replay store."""

from .collector import EvidenceCollector
from .render import WebDriverRenderer, fetch_snapshot
from .services import RankClient, ReputationClient, query_rank, query_reputation, rank_from_links
from .store import bundle_key, iter_keys, load_bundle, store_bundle
from .types import EvidenceBundle, PageSnapshot, RankInfo, ReputationVerdict, WhoisRecord
from .whois import WhoisClient, parse_creation_date, query_whois

__all__ = [
    "EvidenceBundle",
    "EvidenceCollector",
    "PageSnapshot",
    "RankClient",
    "RankInfo",
    "ReputationClient",
    "ReputationVerdict",
    "WebDriverRenderer",
    "WhoisClient",
    "WhoisRecord",
    "bundle_key",
    "fetch_snapshot",
    "iter_keys",
    "load_bundle",
    "parse_creation_date",
    "query_rank",
    "query_reputation",
    "query_whois",
    "rank_from_links",
    "store_bundle",
]
