"""Deterministic synthetic corpus of labeled evidence bundles.

Phishing pages follow five evasion trends:

T1  deployed under a free hosting / dynamic-DNS service
T2  page skeleton cloned from a benign template
T3  minimal initial page that redirects to the real one after rendering
T4  asks for identity documents through an upload form
T5  claims to be an error page, or hides behind a captcha

Benign pages are stable, old, indexed sites whose title names their domain.
Only generic page archetypes are produced; no real brand is imitated.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

from .errors import InvalidMix
from .evidence.store import dump_json, store_bundle
from .evidence.types import EvidenceBundle, PageSnapshot, RankInfo, ReputationVerdict, WhoisRecord
from .textmetrics import levenshtein

TRENDS = ("T1", "T2", "T3", "T4", "T5")
DEFAULT_FETCHED_AT = datetime(2021, 1, 1, tzinfo=timezone.utc)
MIN_REDIRECT_DISTANCE = 31

WHOIS_TAGS = (
    "Creation Date",
    "Registration Time",
    "Registered Date",
    "Commencement Date",
    "Changed Date",
    "Registered On",
    "Created On",
)
DATE_FORMATS = ("iso", "dd-mon-yyyy", "yyyy.mm.dd", "dd/mm/yyyy")

# hosting service -> (creation date, search rank of the service itself)
HOSTING_SERVICES = {
    "ddns.net": (date(1999, 7, 22), 2),
    "000webhostapp.com": (date(2016, 3, 14), 3),
    "sites.google.com": (date(1997, 9, 15), 1),
    "co.vu": (date(2012, 5, 2), 4),
    "vercel.app": (date(2020, 4, 21), 2),
}
TLDS = ("com", "org", "net", "com.au", "co.uk", "io")
SHORTENER_TLDS = ("top", "xyz", "link", "click")

_SYLLABLES = (
    "ka ro mi to na lu ve sa po ri de ma ta li no be ga fi zu ko "
    "ran tel mor vik sen dal por lin mes tor cal ber"
).split()
_WORDS = (
    "account secure verify update service support online portal access "
    "signin wallet billing center review confirm"
).split()
_FAKE_ERRORS = (
    "Page Not Found 404",
    "404 Error Page",
    "OOPS! Page Not Exist",
    "Access Forbidden",
    "This page is no longer available",
    "The requested content does not exist",
)
_PALETTE = ("blue", "green", "dark", "light", "teal", "grey")


@dataclass(frozen=True)
class CorpusConfig:
    n_benign: int = 500
    n_phish: int = 500
    seed: int = 42
    trend_mix: tuple = (0.2, 0.2, 0.2, 0.2, 0.2)
    benign_host_fraction: float = 0.1
    benign_login_fraction: float = 0.3
    flagged_fraction: float = 0.2
    phish_redirect_fraction: float = 0.6
    ip_host_fraction: float = 0.1
    fetched_at: datetime = DEFAULT_FETCHED_AT

    def validate(self):
        if self.n_benign < 1 or self.n_phish < 1:
            raise InvalidMix("n_benign and n_phish must be >= 1")
        if len(self.trend_mix) != len(TRENDS):
            raise InvalidMix(f"trend_mix needs {len(TRENDS)} proportions, got {len(self.trend_mix)}")
        if any(p < 0 for p in self.trend_mix):
            raise InvalidMix("trend proportions must be nonnegative")
        if abs(sum(self.trend_mix) - 1.0) > 1e-9:
            raise InvalidMix(f"trend proportions sum to {sum(self.trend_mix)}, not 1")
        for name in ("benign_host_fraction", "benign_login_fraction", "flagged_fraction",
                     "phish_redirect_fraction", "ip_host_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidMix(f"{name} must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trend_mix"] = list(self.trend_mix)
        d["fetched_at"] = self.fetched_at.strftime("%Y-%m-%dT%H:%M:%SZ")
        return d


def trend_counts(n: int, mix) -> dict:
    """Split ``n`` phishing pages over trends by largest remainder."""
    exact = [n * p for p in mix]
    counts = [int(e) for e in exact]
    order = sorted(range(len(mix)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return dict(zip(TRENDS, counts))


# --- HTML templates -------------------------------------------------------
# Structure is fixed per template; only text and attribute values vary.


def _nav(rng, links):
    items = "".join(f'<li class="nav-item"><a href="/{w}">{w.title()}</a></li>' for w in links)
    return f'<nav class="{rng.choice(_PALETTE)}-nav"><ul>{items}</ul></nav>'


def page_shop(rng, name):
    products = "".join(
        f'<div class="product"><img src="/img/p{i}.jpg" alt="item {i}"><h3>{_word(rng).title()} {i}</h3>'
        f'<p>{_sentence(rng)}</p><span class="price">${rng.randint(5, 300)}.00</span></div>'
        for i in range(3)
    )
    return (
        f"<!DOCTYPE html><html><head><title>{name.title()} Store</title>"
        f'<meta charset="utf-8"><link rel="stylesheet" href="/css/site.css"></head><body>'
        f'<header><h1>{name.title()}</h1>{_nav(rng, ["home", "shop", "about", "contact"])}</header>'
        f'<main><section class="grid">{products}</section></main>'
        f"<footer><p>&copy; {name.title()} {rng.randint(2001, 2020)}</p></footer></body></html>"
    )


def page_blog(rng, name):
    articles = "".join(
        f"<article><h2>{_sentence(rng, 4)}</h2><p>{_sentence(rng)}</p><p>{_sentence(rng)}</p></article>"
        for _ in range(2)
    )
    return (
        f"<html><head><title>{name.title()} News</title></head><body>"
        f"<header><h1>{name.title()} Journal</h1></header>"
        f'<div class="content">{articles}</div>'
        f'<aside><h4>Archive</h4><ul><li>{_word(rng)}</li><li>{_word(rng)}</li></ul></aside>'
        f"<footer><p>{name.title()} editorial team</p></footer></body></html>"
    )


def page_login(rng, title, heading):
    """Sign-in page; benign sites use it and T2 clones it."""
    return (
        f"<html><head><title>{title}</title>"
        f'<link rel="stylesheet" href="/static/{rng.choice(_PALETTE)}.css"></head><body>'
        f'<header><h1>{heading}</h1>{_nav(rng, ["home", "help", "privacy"])}</header>'
        f'<main><div class="card"><form method="post" action="/{_word(rng)}">'
        f'<label for="em">Email address</label><input type="email" id="em" name="email">'
        f'<label for="pw">Password</label><input type="password" id="pw" name="pass">'
        f'<button type="submit">{rng.choice(["Sign in", "Log in", "Continue"])}</button>'
        f"</form></div></main>"
        f"<footer><p>{_sentence(rng, 5)}</p></footer></body></html>"
    )


def page_hosted(rng, name, service, with_login=False):
    """A page on a hosting service: the service's shell with user content inside."""
    form = ""
    if with_login:
        form = (
            f'<form method="post" action="{_word(rng)}.php"><input type="text" name="email" placeholder="Email">'
            f'<input type="password" name="password" placeholder="Password">'
            f'<input type="submit" value="Log In"></form>'
        )
    return (
        f"<html><head><title>{name}</title></head><body>"
        f'<div class="site-shell"><div class="top-bar"><span>{service}</span></div>'
        f'<div class="container"><h1>{name}</h1><p>{_sentence(rng)}</p>{form}<p>{_sentence(rng)}</p></div>'
        f'<div class="shell-footer"><a href="https://{service}/">Powered by {service}</a></div></div>'
        f"</body></html>"
    )


def page_redirect_stub(rng):
    return (
        "<html><head><title>Home</title>"
        f'<script src="https://d{rng.randint(1000, 9999)}x.cloudfront.net/{_word(rng)}.js"></script>'
        '</head><body><div id="app"></div></body></html>'
    )


def page_rendered_login(rng, title):
    return (
        f"<html><head><title>{title}</title></head><body>"
        f'<div id="app"><div class="modal"><h2>{title}</h2><p>{_sentence(rng)}</p>'
        f'<form action="/{_word(rng)}"><input type="text" name="email_or_phone" id="email">'
        f'<input type="password" name="pass"><button>Continue</button></form></div></div>'
        f"</body></html>"
    )


def page_document_upload(rng):
    return (
        f"<html><head><title>{rng.choice(['Identity verification', 'Verify your identity'])}</title></head><body>"
        f"<h1>Confirm your identity</h1>"
        f"<ol><li>Take a photo of your passport or driver licence</li><li>Upload it below</li></ol>"
        f'<form method="post" enctype="multipart/form-data">'
        f'<label>Full name</label><input type="text" name="fullname">'
        f'<label>Passport or ID card photo</label><input type="file" name="document" accept="image/*">'
        f'<label>Selfie holding the document</label><input type="file" name="selfie">'
        f"<button>Submit</button></form></body></html>"
    )


def page_fake_error(rng):
    message = rng.choice(_FAKE_ERRORS)
    return (
        f"<html><head><title>{rng.choice(['Error', 'Not available', 'Oops'])}</title></head><body>"
        f"<h1>{message}</h1><p>{rng.choice(['Please try again later.', 'Return to the home page.'])}</p>"
        f"</body></html>"
    )


def page_captcha(rng):
    hidden_form = '<form><input type=\\"password\\" name=\\"p\\"></form>'
    return (
        "<html><head><title>Checking your browser</title>"
        '<script src="https://www.google.com/recaptcha/api.js" async defer></script></head><body>'
        f'<div class="g-recaptcha" data-sitekey="{_token(rng, 24)}" data-callback="go"></div>'
        f'<script>function go(){{document.body.innerHTML="{hidden_form}";}}</script>'
        "</body></html>"
    )


TEMPLATES = {
    "shop": lambda rng: page_shop(rng, _name(rng)),
    "blog": lambda rng: page_blog(rng, _name(rng)),
    "login": lambda rng: page_login(rng, "Sign in", _name(rng).title()),
    "hosted": lambda rng: page_hosted(rng, _name(rng).title(), rng.choice(sorted(HOSTING_SERVICES))),
    "hosted_login": lambda rng: page_hosted(rng, _name(rng).title(), rng.choice(sorted(HOSTING_SERVICES)), True),
    "redirect_stub": page_redirect_stub,
    "rendered_login": lambda rng: page_rendered_login(rng, "Video"),
    "document_upload": page_document_upload,
    "fake_error": page_fake_error,
    "captcha": page_captcha,
}


def render_template(name: str, seed: int) -> str:
    """One instantiation of a named template (used by tests and ``analyze domsim``)."""
    return TEMPLATES[name](random.Random(seed))


# --- lexical helpers ------------------------------------------------------


def _name(rng, syllables=None):
    count = syllables or rng.randint(2, 3)
    return "".join(rng.choice(_SYLLABLES) for _ in range(count))


def _word(rng):
    return rng.choice(_WORDS)


def _sentence(rng, words=8):
    text = " ".join(rng.choice(_WORDS + _SYLLABLES) for _ in range(words))
    return text.capitalize() + "."


def _token(rng, n):
    return "".join(rng.choice("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789") for _ in range(n))


def _format_date(d: date, fmt: str) -> str:
    if fmt == "iso":
        return f"{d.isoformat()}T{d.day % 24:02d}:{d.month * 3:02d}:00Z"
    if fmt == "dd-mon-yyyy":
        return d.strftime("%d-%b-%Y")
    if fmt == "yyyy.mm.dd":
        return d.strftime("%Y.%m.%d")
    return d.strftime("%d/%m/%Y")


def whois_text(domain: str, created: date | None, tag: str, fmt: str) -> str:
    lines = [
        f"Domain Name: {domain.upper()}",
        "Registrar: Example Registrar Ltd",
        "Registrar URL: http://registrar.invalid",
    ]
    if created is not None:
        lines.append(f"{tag}: {_format_date(created, fmt)}")
    else:
        lines.append("Registrant Organization: REDACTED FOR PRIVACY")
    lines.append("Name Server: NS1.REGISTRAR.INVALID")
    return "\n".join(lines) + "\n"


def make_whois(rng, domain, created):
    tag = rng.choice(WHOIS_TAGS)
    raw = whois_text(domain, created, tag, rng.choice(DATE_FORMATS))
    return WhoisRecord(raw, created, tag if created else None)


# --- bundle builders ------------------------------------------------------


@dataclass
class _Builder:
    config: CorpusConfig
    rng: random.Random
    used: set = field(default_factory=set)

    @property
    def now(self) -> datetime:
        return self.config.fetched_at

    def unique(self, make):
        for _ in range(1000):
            url = make()
            if url not in self.used:
                self.used.add(url)
                return url
        raise RuntimeError("could not generate a unique URL")

    def reputation(self, phishing: bool) -> ReputationVerdict:
        if phishing and self.rng.random() < self.config.flagged_fraction:
            return ReputationVerdict(True, "synthetic", "SOCIAL_ENGINEERING")
        return ReputationVerdict(False, "synthetic")

    def days_ago(self, lo, hi) -> date:
        return self.now.date() - timedelta(days=self.rng.randint(lo, hi))

    def fresh_domain(self, allow_ip=False):
        if allow_ip and self.rng.random() < self.config.ip_host_fraction:
            return ".".join(str(self.rng.randint(11, 223)) for _ in range(4))
        parts = [self.rng.choice(_WORDS), _name(self.rng, 2)]
        if self.rng.random() < 0.5:
            parts.append(self.rng.choice(_WORDS))
        return "-".join(parts) + "." + self.rng.choice(("com", "net", "info", "online", "site"))

    def new_domain_evidence(self, domain):
        rng = self.rng
        created = None if rng.random() < 0.05 else self.days_ago(0, 90)
        return make_whois(rng, domain, created), RankInfo(False)

    def landing(self, url: str) -> str:
        """Where a phishing page ends up after rendering: often a tokenized session URL."""
        if self.rng.random() >= self.config.phish_redirect_fraction:
            return url
        base = url.split("?", 1)[0].rstrip("/")
        return f"{base}/{self.rng.choice(_WORDS)}?session={_token(self.rng, self.rng.randint(16, 40))}"

    def snapshot(self, url_initial, html_initial, html_rendered=None, url_final=None, status=200):
        if html_rendered is None:
            html_rendered = html_initial
        return PageSnapshot(url_initial, url_final or url_initial, status, html_initial, html_rendered, self.now)

    # benign ------------------------------------------------------------
    def benign(self) -> EvidenceBundle:
        rng = self.rng
        if rng.random() < self.config.benign_host_fraction:
            service = rng.choice(sorted(HOSTING_SERVICES))
            created, service_rank = HOSTING_SERVICES[service]
            name = _name(rng)
            url = self.unique(lambda: _hosted_url(rng, name, service))
            html = page_hosted(rng, name.title(), service)
            whois = make_whois(rng, service, created)
            rank = RankInfo(True, service_rank, rng.randint(1, 10))
        else:
            name = _name(rng)
            tld = rng.choice(TLDS)
            url = self.unique(lambda: f"https://{rng.choice(['www.', ''])}{name}.{tld}/{rng.choice(['', 'index.html', 'home'])}")
            kind = rng.choice(("shop", "blog"))
            if rng.random() < self.config.benign_login_fraction:
                html = page_login(rng, f"{name.title()} - Sign in", name.title())
            elif kind == "shop":
                html = page_shop(rng, name)
            else:
                html = page_blog(rng, name)
            whois = make_whois(rng, f"{name}.{tld}", self.days_ago(2 * 365, 20 * 365))
            top = rng.randint(1, 10)
            rank = RankInfo(True, top, rng.randint(1, 11 - top))
        return EvidenceBundle(self.snapshot(url, html), whois, rank, self.reputation(False), "benign")

    # phishing ----------------------------------------------------------
    def t1(self) -> EvidenceBundle:
        rng = self.rng
        service = rng.choice(sorted(HOSTING_SERVICES))
        created, service_rank = HOSTING_SERVICES[service]
        label = rng.choice(_WORDS) + _name(rng, 2)
        url = self.unique(lambda: _hosted_url(rng, label, service, path=rng.choice(["", "/login", "/auth/index.php"])))
        html = page_hosted(rng, rng.choice(["Account Login", "Sign in to continue"]), service, with_login=True)
        whois = make_whois(rng, service, created)
        rank = RankInfo(True, service_rank, rng.randint(1, 10))
        snap = self.snapshot(url, html, url_final=self.landing(url))
        return EvidenceBundle(snap, whois, rank, self.reputation(True), "phishing")

    def t2(self) -> EvidenceBundle:
        rng = self.rng
        domain = self.fresh_domain(allow_ip=True)
        url = self.unique(lambda: f"https://{domain}/{rng.choice(['signin', 'login.php', 'account/verify'])}")
        html = page_login(rng, "Sign in", rng.choice(["Welcome back", "Account access", "Member login"]))
        whois, rank = self.new_domain_evidence(domain)
        snap = self.snapshot(url, html, url_final=self.landing(url))
        return EvidenceBundle(snap, whois, rank, self.reputation(True), "phishing")

    def t3(self) -> EvidenceBundle:
        rng = self.rng
        short_domain = _token(rng, 3).lower() + "." + rng.choice(SHORTENER_TLDS)
        url_initial = self.unique(lambda: f"http://{short_domain}/{_token(rng, 6)}")
        while True:
            app = f"{_name(rng, 2)}-{rng.choice(_WORDS)}-{_token(rng, 5).lower()}"
            url_final = f"https://{app}.vercel.app/{rng.choice(_WORDS)}/session?id={_token(rng, 12)}"
            if levenshtein(url_initial, url_final) >= MIN_REDIRECT_DISTANCE:
                break
        initial = page_redirect_stub(rng)
        rendered = page_rendered_login(rng, rng.choice(["Video", "Shared file", "Voice message"]))
        whois, rank = self.new_domain_evidence(short_domain)
        snap = self.snapshot(url_initial, initial, rendered, url_final)
        return EvidenceBundle(snap, whois, rank, self.reputation(True), "phishing")

    def t4(self) -> EvidenceBundle:
        rng = self.rng
        domain = self.fresh_domain(allow_ip=True)
        url = self.unique(lambda: f"https://{domain}/{rng.choice(['kyc', 'verify', 'identity/upload'])}")
        whois, rank = self.new_domain_evidence(domain)
        html = page_document_upload(rng)
        snap = self.snapshot(url, html, url_final=self.landing(url))
        return EvidenceBundle(snap, whois, rank, self.reputation(True), "phishing")

    def t5(self) -> EvidenceBundle:
        rng = self.rng
        domain = self.fresh_domain()
        url = self.unique(lambda: f"https://{domain}/{rng.choice(['', 'index.php', 'secure'])}")
        whois, rank = self.new_domain_evidence(domain)
        html = page_fake_error(rng) if rng.random() < 0.5 else page_captcha(rng)
        snap = self.snapshot(url, html, url_final=self.landing(url))
        return EvidenceBundle(snap, whois, rank, self.reputation(True), "phishing")


def _hosted_url(rng, label, service, path=""):
    if service == "sites.google.com":
        return f"https://sites.google.com/view/{label}{path}"
    return f"https://{label}.{service}{path or '/'}"


@dataclass(frozen=True)
class SyntheticItem:
    bundle: EvidenceBundle
    label: str
    trend: str | None


def generate(config: CorpusConfig | None = None) -> list[SyntheticItem]:
    """Generate the corpus; identical configs give identical output."""
    config = config or CorpusConfig()
    config.validate()
    builder = _Builder(config, random.Random(config.seed))
    counts = trend_counts(config.n_phish, config.trend_mix)
    plan = [None] * config.n_benign + [t for t in TRENDS for _ in range(counts[t])]
    builder.rng.shuffle(plan)
    items = []
    for trend in plan:
        if trend is None:
            items.append(SyntheticItem(builder.benign(), "benign", None))
        else:
            bundle = getattr(builder, trend.lower())()
            items.append(SyntheticItem(bundle, "phishing", trend))
    return items


def write_corpus(items, store_root, config: CorpusConfig) -> dict:
    """Store every bundle and write ``manifest.json`` next to them."""
    root = Path(store_root)
    root.mkdir(parents=True, exist_ok=True)
    keys = {}
    for item in items:
        key = store_bundle(item.bundle, root)
        keys[key] = item.trend or "benign"
    per_trend = {t: 0 for t in ("benign",) + TRENDS}
    for trend in keys.values():
        per_trend[trend] += 1
    manifest = {
        "generator": "subtlephish-synth/1",
        "config": config.to_dict(),
        "seed": config.seed,
        "counts": per_trend,
        "trends": dict(sorted(keys.items())),
    }
    (root / "manifest.json").write_bytes(dump_json(manifest))
    return manifest
