"""WHOIS lookups over the port-43 text protocol and creation-date extraction."""

from __future__ import annotations

import re
import socket
import warnings
from datetime import date, datetime, timezone
from functools import lru_cache

from ..errors import NoRecord, WhoisUnavailable
from ..lists import default_list
from .net import RateLimiter, require_network
from .types import WhoisRecord

DEFAULT_SERVER = ("whois.iana.org", 43)

_MONTHS = {m: i for i, m in enumerate("jan feb mar apr may jun jul aug sep oct nov dec".split(), start=1)}
_ISO_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})(?:([T ])(\S+))?")
_DMY_NAME_RE = re.compile(r"^(\d{1,2})-([A-Za-z]{3})-(\d{4})\b")
_YMD_DOT_RE = re.compile(r"^(\d{4})\.(\d{1,2})\.(\d{1,2})\b")
_DMY_SLASH_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})\b")
_REFERRAL_RE = re.compile(r"^\s*(?:refer|whois|registrar whois server):\s*(\S+)", re.I | re.M)
_NO_RECORD_RE = re.compile(r"no match for|not found|no data found|no entries found|status:\s*free", re.I)


class UnparseableDate(UserWarning):
    """A date tag was found but its value matched none of the known formats."""


@lru_cache(maxsize=None)
def default_tag_aliases() -> tuple[str, ...]:
    return tuple(default_list("whois_tags"))


def _parse_iso(m: re.Match) -> date:
    day = date(int(m[1]), int(m[2]), int(m[3]))
    if not m[5]:
        return day
    text = f"{m[1]}-{m[2]}-{m[3]}T{m[5]}".replace("Z", "+00:00").replace("z", "+00:00")
    # fromisoformat on 3.10 only accepts 3 or 6 fractional digits
    text = re.sub(r"\.(\d+)", lambda f: "." + (f[1] + "000000")[:6], text)
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        return day
    if stamp.tzinfo is not None:
        return stamp.astimezone(timezone.utc).date()
    return stamp.date()


def parse_date_value(value: str) -> date | None:
    """Parse ISO 8601, DD-Mon-YYYY, YYYY.MM.DD or DD/MM/YYYY; None otherwise."""
    value = value.strip()
    try:
        if m := _ISO_RE.match(value):
            return _parse_iso(m)
        if m := _DMY_NAME_RE.match(value):
            month = _MONTHS.get(m[2].lower())
            return date(int(m[3]), month, int(m[1])) if month else None
        if m := _YMD_DOT_RE.match(value):
            return date(int(m[1]), int(m[2]), int(m[3]))
        if m := _DMY_SLASH_RE.match(value):
            return date(int(m[3]), int(m[2]), int(m[1]))
    except ValueError:
        return None
    return None


def parse_creation_date(raw: str, tag_aliases=None) -> tuple[date, str] | None:
    """Find the registration date, trying tag aliases in priority order.

    Returns ``(date, alias)`` for the first alias whose value parses, or
    None. A tag whose value cannot be parsed triggers an ``UnparseableDate``
    warning and the search continues.
    """
    tag_aliases = default_tag_aliases() if tag_aliases is None else tuple(tag_aliases)
    if not tag_aliases:
        raise ValueError("tag_aliases must be non-empty")
    lines = raw.splitlines()
    for alias in tag_aliases:
        pattern = re.compile(r"^\s*" + re.escape(alias) + r"\s*:\s*(.*)$", re.I)
        for line in lines:
            m = pattern.match(line)
            if not m:
                continue
            parsed = parse_date_value(m[1])
            if parsed is not None:
                return parsed, alias
            warnings.warn(f"unparseable {alias!r} value: {m[1].strip()!r}", UnparseableDate, stacklevel=2)
    return None


def record_from_text(raw: str, tag_aliases=None) -> WhoisRecord:
    found = parse_creation_date(raw, tag_aliases)
    if found is None:
        return WhoisRecord(raw)
    return WhoisRecord(raw, found[0], found[1])


class WhoisClient:
    """Query a WHOIS server, following at most one referral."""

    def __init__(self, server=DEFAULT_SERVER, timeout=10.0, tag_aliases=None, follow_referral=True, per_second=None):
        self.server = server
        self.timeout = timeout
        self.tag_aliases = tag_aliases
        self.follow_referral = follow_referral
        self._limiter = RateLimiter(per_second)

    def _ask(self, host: str, port: int, query: str) -> str:
        require_network("whois")
        self._limiter.wait()
        try:
            with socket.create_connection((host, port), timeout=self.timeout) as sock:
                sock.sendall(query.encode("utf-8") + b"\r\n")
                chunks = []
                while True:
                    chunk = sock.recv(4096)
                    if not chunk:
                        break
                    chunks.append(chunk)
        except OSError as exc:
            raise WhoisUnavailable(f"{host}:{port}: {exc}") from None
        return b"".join(chunks).decode("utf-8", errors="replace")

    def query(self, domain: str) -> WhoisRecord:
        host, port = self.server
        raw = self._ask(host, port, domain)
        if self.follow_referral:
            m = _REFERRAL_RE.search(raw)
            if m and m[1].lower() != host.lower():
                referred = m[1].split("://")[-1].rstrip("/")
                raw = self._ask(referred, 43, domain)
        record = record_from_text(raw, self.tag_aliases)
        if record.creation_date is None and (not raw.strip() or _NO_RECORD_RE.search(raw)):
            raise NoRecord(f"no WHOIS record for {domain}")
        return record


def query_whois(domain: str, endpoint=DEFAULT_SERVER, timeout=10.0) -> WhoisRecord:
    return WhoisClient(endpoint, timeout).query(domain)
