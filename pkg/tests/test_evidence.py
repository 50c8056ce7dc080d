import json
import warnings
from datetime import date, datetime, timezone

import pytest

from conftest import FETCHED, make_bundle
from fakes import FakeServices, FakeWhois
from subtlephish.errors import (
    HttpError,
    NetworkDisabled,
    NoRecord,
    NotRecorded,
    QuotaExceeded,
    StoreCorrupt,
    WhoisUnavailable,
)
from subtlephish.evidence import net
from subtlephish.evidence.collector import EvidenceCollector
from subtlephish.evidence.render import WebDriverRenderer, fetch_snapshot
from subtlephish.evidence.services import RankClient, ReputationClient, rank_from_links
from subtlephish.evidence.store import bundle_key, canonical_url, iter_keys, load_bundle, store_bundle
from subtlephish.evidence.types import EvidenceBundle, PageSnapshot, RankInfo, WhoisRecord
from subtlephish.evidence.whois import (
    UnparseableDate,
    WhoisClient,
    default_tag_aliases,
    parse_creation_date,
    parse_date_value,
)
from subtlephish.synthcorpus import WHOIS_TAGS, whois_text

CREATED = date(2019, 3, 7)
FORMATS = ["iso", "dd-mon-yyyy", "yyyy.mm.dd", "dd/mm/yyyy"]


@pytest.fixture
def services():
    fake = FakeServices()
    yield fake
    fake.close()


# --- WHOIS parsing ---------------------------------------------------------


def test_shipped_aliases():
    assert len(default_tag_aliases()) == 7
    assert tuple(WHOIS_TAGS) == default_tag_aliases()


@pytest.mark.parametrize("fmt", FORMATS)
@pytest.mark.parametrize("tag", default_tag_aliases())
def test_every_alias_in_every_format(tag, fmt):
    raw = whois_text("example.com", CREATED, tag, fmt)
    assert parse_creation_date(raw) == (CREATED, tag)


def test_no_date_record():
    raw = whois_text("example.com", None, "Creation Date", "iso")
    assert parse_creation_date(raw) is None
    from subtlephish.evidence.whois import record_from_text

    assert record_from_text(raw).creation_date is None


@pytest.mark.parametrize("value,expected", [
    ("2019-03-07T23:30:00-05:00", date(2019, 3, 8)),
    ("2019-03-07T10:00:00.123Z", date(2019, 3, 7)),
    ("2019-03-07", date(2019, 3, 7)),
    ("07-mar-2019", date(2019, 3, 7)),
    ("2019.03.07", date(2019, 3, 7)),
    ("07/03/2019", date(2019, 3, 7)),
    ("31/02/2019", None),
    ("yesterday", None),
])
def test_date_values(value, expected):
    assert parse_date_value(value) == expected


def test_alias_priority_and_unparseable_warning():
    raw = "Registered On: 2001.01.01\nCreation Date: sometime\nCreated On: 02/02/2002\n"
    with pytest.warns(UnparseableDate):
        found = parse_creation_date(raw)
    # Creation Date is unparseable, so the next alias in priority order wins
    assert found == (date(2001, 1, 1), "Registered On")


def test_custom_aliases():
    raw = "Domain created: 2010-05-05\n"
    assert parse_creation_date(raw) is None
    assert parse_creation_date(raw, ["Domain created"]) == (date(2010, 5, 5), "Domain created")
    with pytest.raises(ValueError):
        parse_creation_date(raw, [])


# --- types -----------------------------------------------------------------


def test_snapshot_invariants():
    with pytest.raises(ValueError):
        PageSnapshot("http://a.com/", "http://b.com/", 200, "x", None, FETCHED)
    with pytest.raises(ValueError):
        PageSnapshot("http://a.com/", "http://a.com/", 200, "x", None, datetime(2021, 1, 1))
    with pytest.raises(ValueError):
        WhoisRecord("nothing here", CREATED, "Creation Date")
    with pytest.raises(ValueError):
        RankInfo(False, 3)
    with pytest.raises(ValueError):
        EvidenceBundle(PageSnapshot("http://a.com/", "http://a.com/", 200, "", None, FETCHED))


def test_bundle_roundtrip():
    b = make_bundle("http://a.example.com/x", "<p>hi", final="http://b.example.com/", rank=3,
                    flagged=True, label="phishing")
    assert EvidenceBundle.from_dict(json.loads(json.dumps(b.to_dict()))) == b


# --- store -----------------------------------------------------------------


def test_store_roundtrip_and_keys(tmp_path):
    b = make_bundle("http://Example.COM", "<p>hi", label="benign")
    key = store_bundle(b, tmp_path)
    assert key == bundle_key("http://example.com/")
    assert canonical_url("Example.com") == "http://example.com/"
    assert load_bundle("http://example.com/", tmp_path) == b
    assert load_bundle(key, tmp_path) == b
    assert iter_keys(tmp_path) == [key]
    first = (tmp_path / key / "bundle.json").read_bytes(), (tmp_path / key / "meta.json").read_bytes()
    store_bundle(b, tmp_path)
    assert ((tmp_path / key / "bundle.json").read_bytes(), (tmp_path / key / "meta.json").read_bytes()) == first


def test_store_tamper_detected(tmp_path):
    key = store_bundle(make_bundle("http://a.com/", "<p>hi"), tmp_path)
    path = tmp_path / key / "bundle.json"
    path.write_text(path.read_text().replace("hi", "ho"))
    with pytest.raises(StoreCorrupt) as info:
        load_bundle(key, tmp_path)
    assert info.value.key == key
    (tmp_path / key / "meta.json").unlink()
    with pytest.raises(StoreCorrupt):
        load_bundle(key, tmp_path)


def test_not_recorded(tmp_path):
    with pytest.raises(NotRecorded):
        load_bundle("http://missing.example/", tmp_path)
    assert iter_keys(tmp_path / "nope") == []


# --- network gate ----------------------------------------------------------


def test_replay_mode_refuses_network(services):
    with pytest.raises(NetworkDisabled):
        fetch_snapshot(services.base + "/p", None)
    with pytest.raises(NetworkDisabled):
        WhoisClient(("127.0.0.1", 1)).query("example.com")
    with pytest.raises(NetworkDisabled):
        RankClient(services.base + "/search", api_key="k").query("example.com")
    with pytest.raises(NetworkDisabled):
        ReputationClient(services.base + "/reputation", api_key="k").query("http://example.com/")
    assert services.requests == []


def test_live_mode_context_restores():
    assert not net.is_live()
    with net.live_mode():
        assert net.is_live()
    assert not net.is_live()


# --- service clients against local fakes --------------------------------------


def test_whois_client():
    raw = whois_text("example.com", CREATED, "Registered On", "dd-mon-yyyy")
    fake = FakeWhois({"example.com": raw, "empty.com": ""})
    try:
        with net.live_mode():
            client = WhoisClient(fake.address, timeout=2, follow_referral=False)
            record = client.query("example.com")
            assert record.creation_date == CREATED and record.matched_tag == "Registered On"
            with pytest.raises(NoRecord):
                client.query("unknown.com")
            with pytest.raises(NoRecord):
                client.query("empty.com")
        assert fake.queries == ["example.com", "unknown.com", "empty.com"]
    finally:
        fake.close()
    with net.live_mode(), pytest.raises(WhoisUnavailable):
        WhoisClient(fake.address, timeout=1).query("example.com")


def test_rank_from_links():
    links = ["https://other.org/", "https://www.example.com/a", "not a url at all", "http://example.com/b"]
    assert rank_from_links("example.com", links) == RankInfo(True, 2, 2)
    assert rank_from_links("example.com", []) == RankInfo(False)
    eleven = ["http://x.org/"] * 10 + ["http://example.com/"]
    assert rank_from_links("example.com", eleven) == RankInfo(False)


def test_rank_client(services):
    services.search_links["example.com"] = ["http://a.org/", "http://www.example.com/"]
    client = RankClient(services.base + "/search", api_key="k", engine_id="e")
    with net.live_mode():
        assert client.query("example.com") == RankInfo(True, 2, 1)
        assert client.query("fresh.com") == RankInfo(False)
        services.rank_status = 429
        with pytest.raises(QuotaExceeded):
            client.query("example.com")
    assert not RankClient(services.base, api_key="").configured


def test_reputation_client(services):
    services.flagged.add("http://bad.example/")
    client = ReputationClient(services.base + "/reputation", api_key="k")
    with net.live_mode():
        assert client.query("http://bad.example/").flagged
        assert not client.query("http://fine.example/").flagged


def test_renderer_and_snapshot(services):
    services.pages["/start"] = (200, "<html><body><script>location='/landing'</script></body></html>")
    services.rendered["/start"] = ("/landing", "<html><body><form><input type=password></form></body></html>")
    renderer = WebDriverRenderer(services.base + "/wd", quiet_period=0.05, max_wait=2, poll_interval=0.01)
    with net.live_mode():
        snap = fetch_snapshot(services.base + "/start", renderer, now=FETCHED)
    assert snap.url_final == services.base + "/landing"
    assert "password" in snap.html_rendered and "location" in snap.html_initial
    assert ("DELETE", "/wd/session/s0") in services.requests
    with net.live_mode(), pytest.raises(HttpError) as info:
        fetch_snapshot(services.base + "/missing", None, now=FETCHED)
    assert info.value.snapshot.http_status == 404


def test_collector_live_and_replay(services, tmp_path):
    services.pages["/a"] = (200, "<html><body><p>Shop</p></body></html>")
    services.pages["/b"] = (200, "<html><body><p>Other</p></body></html>")
    fake_whois = FakeWhois({"127.0.0.1": whois_text("x", CREATED, "Creation Date", "iso")})
    try:
        collector = EvidenceCollector(
            tmp_path, live=True, whois=WhoisClient(fake_whois.address, timeout=2, follow_referral=False),
            rank=RankClient(services.base + "/search", api_key=""),
            reputation=ReputationClient(services.base + "/reputation", api_key="k"),
        )
        urls = [services.base + "/a", services.base + "/b", services.base + "/missing"]
        outcomes = collector.fetch_many(urls, {urls[0]: "benign"}, workers=2)
    finally:
        fake_whois.close()
    assert not net.is_live()
    assert [o.error is None for o in outcomes] == [True, True, True]
    replay = EvidenceCollector(tmp_path)
    a = replay.collect(urls[0])
    assert a.label == "benign" and a.rank is None and a.absent["rank"] == "no API key"
    assert a.whois.creation_date == CREATED
    assert replay.collect(urls[2]).snapshot.http_status == 404
    with pytest.raises(NotRecorded):
        replay.collect(services.base + "/never")
    assert [o.error is None for o in replay.fetch_many(urls + ["http://never.example/"])] == [True] * 3 + [False]


def test_collector_records_missing_services(services, tmp_path):
    services.pages["/c"] = (200, "<p>x")
    bundle = EvidenceCollector(tmp_path, live=True).collect(services.base + "/c")
    assert bundle.absent == {"whois": "service not configured", "rank": "service not configured",
                             "reputation": "service not configured"}
    assert not net.is_live()
