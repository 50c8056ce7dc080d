"""URL parsing, lexical URL features and benign-hosting detection."""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass
from functools import lru_cache
from urllib.parse import urlsplit

from .errors import MalformedUrl
from .lists import default_list

_LABEL_RE = re.compile(r"^[a-z0-9_](?:[a-z0-9_-]{0,61}[a-z0-9_])?$")
_IPV4_RE = re.compile(r"^\d{1,3}(?:\.\d{1,3}){3}$")
_SCHEME_RE = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.-]*://")

SUSPICIOUS_SYMBOLS = ("@", "-")


@lru_cache(maxsize=None)
def default_suffix_rules() -> frozenset[str]:
    return frozenset(s.lower() for s in default_list("suffixes"))


@lru_cache(maxsize=None)
def default_benign_hosts() -> frozenset[str]:
    return frozenset(s.lower() for s in default_list("benign_hosts"))


@dataclass(frozen=True)
class DomainParts:
    raw: str
    scheme: str
    host: str
    host_labels: tuple[str, ...]
    registrable_domain: str
    registrable_label: str
    subdomain_labels: tuple[str, ...]
    path_and_query: str

    @property
    def is_ip(self) -> bool:
        return _is_ip_host(self.host)

    def unparse(self) -> str:
        return f"{self.scheme}://{self.host}{self.path_and_query}"


@dataclass(frozen=True)
class UrlAnalytics:
    has_ip_host: bool
    suspicious_symbol_count: int
    subdomain_count: int
    url_length: int
    registrable_label_length: int


def _is_ipv4(host: str) -> bool:
    return bool(_IPV4_RE.match(host)) and all(int(octet) <= 255 for octet in host.split("."))


def _is_ip_host(host: str) -> bool:
    if _is_ipv4(host):
        return True
    if host.startswith("[") and host.endswith("]"):
        try:
            ipaddress.IPv6Address(host[1:-1])
        except ValueError:
            return False
        return True
    return False


def _host_suffix_match(host: str, entry: str) -> bool:
    return host == entry or host.endswith("." + entry)


def parse_url(raw: str, suffix_rules=None, benign_hosts=None) -> DomainParts:
    """Split a URL into host labels and its registrable domain.

    The registrable domain is the last two labels unless a longer entry of
    ``suffix_rules`` matches, in which case it is that suffix plus one label.
    A benign-host entry that matches the host overrides both, so that
    ``x.sites.google.com`` resolves to ``sites.google.com``.
    """
    if not raw or not raw.strip():
        raise MalformedUrl("empty URL")
    text = raw.strip()
    candidate = text if _SCHEME_RE.match(text) else "http://" + text
    try:
        split = urlsplit(candidate)
        hostname = split.hostname
        split.port  # noqa: B018 - raises ValueError on a bad port
    except ValueError as exc:
        raise MalformedUrl(f"cannot parse {raw!r}: {exc}") from None
    if not hostname:
        raise MalformedUrl(f"no host in {raw!r}")
    host = hostname.lower().rstrip(".")
    scheme = split.scheme.lower() or "http"

    path_and_query = split.path
    if split.query:
        path_and_query += "?" + split.query
    if split.fragment:
        path_and_query += "#" + split.fragment

    if ":" in host:
        # urlsplit strips IPv6 brackets
        bracketed = f"[{host}]"
        if not _is_ip_host(bracketed):
            raise MalformedUrl(f"bad IPv6 host in {raw!r}")
        return DomainParts(raw, scheme, bracketed, (bracketed,), bracketed, "", (), path_and_query)

    labels = tuple(host.split("."))
    if _is_ipv4(host):
        return DomainParts(raw, scheme, host, labels, host, "", (), path_and_query)
    if not all(_LABEL_RE.match(label) for label in labels):
        raise MalformedUrl(f"invalid host {host!r} in {raw!r}")

    suffix_rules = default_suffix_rules() if suffix_rules is None else suffix_rules
    benign_hosts = default_benign_hosts() if benign_hosts is None else benign_hosts

    n_registrable = 2
    for suffix in suffix_rules:
        size = suffix.count(".") + 1
        if size + 1 > n_registrable and _host_suffix_match(host, suffix.lower()):
            n_registrable = size + 1
    benign_sizes = [e.count(".") + 1 for e in benign_hosts if _host_suffix_match(host, e.lower())]
    if benign_sizes:
        n_registrable = max(benign_sizes)
    n_registrable = min(n_registrable, len(labels))

    registrable = labels[-n_registrable:]
    return DomainParts(
        raw=raw,
        scheme=scheme,
        host=host,
        host_labels=labels,
        registrable_domain=".".join(registrable),
        registrable_label=registrable[0],
        subdomain_labels=labels[:-n_registrable],
        path_and_query=path_and_query,
    )


def url_analytics(parts: DomainParts) -> UrlAnalytics:
    is_ip = parts.is_ip
    return UrlAnalytics(
        has_ip_host=is_ip,
        suspicious_symbol_count=sum(parts.raw.count(sym) for sym in SUSPICIOUS_SYMBOLS),
        subdomain_count=0 if is_ip else len(parts.subdomain_labels),
        url_length=len(parts.raw),
        registrable_label_length=0 if is_ip else len(parts.registrable_label),
    )


def is_benign_host(parts: DomainParts, benign_hosts=None) -> bool:
    """True when the host sits on a listed hosting service, on label boundaries."""
    benign_hosts = default_benign_hosts() if benign_hosts is None else benign_hosts
    if not benign_hosts:
        raise ValueError("benign host list is empty")
    if parts.is_ip:
        return False
    host = parts.host.lower()
    return any(_host_suffix_match(host, entry.lower()) for entry in benign_hosts)
