"""Evidence records gathered for one URL."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import Optional

LABELS = ("benign", "phishing")


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class PageSnapshot:
    url_initial: str
    url_final: str
    http_status: int
    html_initial: str
    html_rendered: Optional[str]
    fetched_at: datetime

    def __post_init__(self):
        if not self.url_initial:
            raise ValueError("url_initial must be non-empty")
        if self.html_rendered is None and self.url_final != self.url_initial:
            raise ValueError("an unrendered snapshot cannot have moved to another URL")
        if self.fetched_at.tzinfo is None:
            raise ValueError("fetched_at must be timezone-aware")

    @property
    def final_html(self) -> str:
        return self.html_initial if self.html_rendered is None else self.html_rendered

    def to_dict(self) -> dict:
        return {
            "url_initial": self.url_initial,
            "url_final": self.url_final,
            "http_status": self.http_status,
            "html_initial": self.html_initial,
            "html_rendered": self.html_rendered,
            "fetched_at": format_timestamp(self.fetched_at),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PageSnapshot":
        return cls(
            url_initial=d["url_initial"],
            url_final=d["url_final"],
            http_status=int(d["http_status"]),
            html_initial=d["html_initial"],
            html_rendered=d["html_rendered"],
            fetched_at=parse_timestamp(d["fetched_at"]),
        )


@dataclass(frozen=True)
class WhoisRecord:
    raw: str
    creation_date: Optional[date] = None
    matched_tag: Optional[str] = None

    def __post_init__(self):
        if self.creation_date is not None:
            if not self.matched_tag or self.matched_tag.lower() not in self.raw.lower():
                raise ValueError("creation_date requires a matched_tag present in the raw record")

    def to_dict(self) -> dict:
        return {
            "raw": self.raw,
            "creation_date": self.creation_date.isoformat() if self.creation_date else None,
            "matched_tag": self.matched_tag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WhoisRecord":
        created = d.get("creation_date")
        return cls(d["raw"], date.fromisoformat(created) if created else None, d.get("matched_tag"))


@dataclass(frozen=True)
class RankInfo:
    present_in_index: bool
    top_rank: Optional[int] = None
    match_count: int = 0

    def __post_init__(self):
        if not self.present_in_index and (self.top_rank is not None or self.match_count):
            raise ValueError("absent domains carry no rank")
        if self.present_in_index and (self.top_rank is None or self.top_rank < 1):
            raise ValueError("present domains need a positive top_rank")
        if not 0 <= self.match_count <= 10:
            raise ValueError("match_count must be within the top ten")

    def to_dict(self) -> dict:
        return {"present_in_index": self.present_in_index, "top_rank": self.top_rank, "match_count": self.match_count}

    @classmethod
    def from_dict(cls, d: dict) -> "RankInfo":
        return cls(bool(d["present_in_index"]), d.get("top_rank"), int(d.get("match_count", 0)))


@dataclass(frozen=True)
class ReputationVerdict:
    flagged: bool
    source: str
    detail: Optional[str] = None

    def __post_init__(self):
        if not self.source:
            raise ValueError("source must be non-empty")

    def to_dict(self) -> dict:
        return {"flagged": self.flagged, "source": self.source, "detail": self.detail}

    @classmethod
    def from_dict(cls, d: dict) -> "ReputationVerdict":
        return cls(bool(d["flagged"]), d["source"], d.get("detail"))


@dataclass(frozen=True)
class EvidenceBundle:
    """Everything known about one URL.

    ``absent`` maps the name of each missing optional part (``whois``,
    ``rank``, ``reputation``) to the reason it is missing.
    """

    snapshot: PageSnapshot
    whois: Optional[WhoisRecord] = None
    rank: Optional[RankInfo] = None
    reputation: Optional[ReputationVerdict] = None
    label: Optional[str] = None
    absent: dict = field(default_factory=dict)
    initial_reputation: Optional[ReputationVerdict] = None

    def __post_init__(self):
        if self.snapshot is None:
            raise ValueError("a bundle always carries a snapshot")
        if self.label is not None and self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        for part in ("whois", "rank", "reputation"):
            if getattr(self, part) is None and not self.absent.get(part):
                raise ValueError(f"missing {part} evidence needs a recorded reason")

    def to_dict(self) -> dict:
        return {
            "snapshot": self.snapshot.to_dict(),
            "whois": self.whois.to_dict() if self.whois else None,
            "rank": self.rank.to_dict() if self.rank else None,
            "reputation": self.reputation.to_dict() if self.reputation else None,
            "initial_reputation": self.initial_reputation.to_dict() if self.initial_reputation else None,
            "label": self.label,
            "absent": dict(sorted(self.absent.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvidenceBundle":
        return cls(
            snapshot=PageSnapshot.from_dict(d["snapshot"]),
            whois=WhoisRecord.from_dict(d["whois"]) if d.get("whois") else None,
            rank=RankInfo.from_dict(d["rank"]) if d.get("rank") else None,
            reputation=ReputationVerdict.from_dict(d["reputation"]) if d.get("reputation") else None,
            initial_reputation=(
                ReputationVerdict.from_dict(d["initial_reputation"]) if d.get("initial_reputation") else None
            ),
            label=d.get("label"),
            absent=dict(d.get("absent") or {}),
        )
