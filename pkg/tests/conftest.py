from datetime import date, datetime, timezone

import pytest

from subtlephish.evidence import net
from subtlephish.evidence.types import (
    EvidenceBundle,
    PageSnapshot,
    RankInfo,
    ReputationVerdict,
    WhoisRecord,
)

FETCHED = datetime(2021, 1, 1, tzinfo=timezone.utc)


def make_bundle(url, html, *, final=None, rendered=None, status=200, created=date(2015, 1, 1),
                rank=None, flagged=False, label=None):
    if final is not None and rendered is None:
        rendered = html
    snapshot = PageSnapshot(url, final or url, status, html, rendered, FETCHED)
    whois = WhoisRecord(f"Creation Date: {created.isoformat()}\n", created, "Creation Date") if created else None
    absent = {} if created else {"whois": "no record"}
    return EvidenceBundle(
        snapshot=snapshot,
        whois=whois,
        rank=RankInfo(True, rank, 1) if rank else RankInfo(False),
        reputation=ReputationVerdict(flagged, "fixture"),
        label=label,
        absent=absent,
    )


@pytest.fixture(autouse=True)
def _replay_mode():
    net.set_live(False)
    yield
    net.set_live(False)


@pytest.fixture(scope="session")
def corpus_items():
    from subtlephish.synthcorpus import CorpusConfig, generate

    return generate(CorpusConfig(n_benign=60, n_phish=60, seed=3))


@pytest.fixture(scope="session")
def small_store(tmp_path_factory, corpus_items):
    from subtlephish.synthcorpus import CorpusConfig, write_corpus

    root = tmp_path_factory.mktemp("store")
    write_corpus(corpus_items, root, CorpusConfig(n_benign=60, n_phish=60, seed=3))
    return root
