"""Shared fixtures: an offline EDGAR cache built from bundled documents."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from tenkscore.edgar import EdgarClient, FetchPolicy, RateLimiter, Ticker
from tenkscore.pipeline import fetch_and_parse

FIXTURES = Path(__file__).parent / "fixtures"

TEST_USER_AGENT = "tenkscore-tests test@example.com"

# ticker -> (cik, accession, primary document)
FIXTURE_COMPANIES = {
    "RGLD": ("0000085535", "0000085535-24-000015", "rgld-20231231.htm"),
    "IBM": ("0000051143", "0000051143-24-000012", "ibm-20231231.htm"),
    "AAPL": ("0000320193", "0000320193-23-000106", "aapl-20230930.htm"),
}

TABLE2_ROWS = [
    (
        "BUSINESS",
        "NarrativeText",
        "Payable Metal: Ounces or pounds of metal in concentrate payable to "
        "the operator after deducting a percentage of metal in concentrate "
        "paid to a third-party smelter pursuant to smelting contracts.",
    ),
    (
        "BUSINESS",
        "NarrativeText",
        "Reserve: That part of a mineral deposit that could be economically "
        "and legally extracted or produced at the time of the reserve "
        "determination.",
    ),
    (
        "BUSINESS",
        "NarrativeText",
        "Royalty: The right to receive a percentage or other denomination of "
        "mineral production from a resource extraction operation.",
    ),
]


def build_fixture_cache(cache_dir: Path) -> Path:
    """Lay the bundled fixtures out exactly like the EDGAR client's cache."""
    cache_dir.mkdir(parents=True, exist_ok=True)
    shutil.copy(FIXTURES / "company_tickers.json", cache_dir / "company_tickers.json")
    for ticker, (cik, accession, document) in FIXTURE_COMPANIES.items():
        cik_dir = cache_dir / cik
        cik_dir.mkdir(parents=True, exist_ok=True)
        shutil.copy(
            FIXTURES / "submissions" / f"CIK{cik}.json", cik_dir / "submissions.json"
        )
        doc_dir = cik_dir / accession.replace("-", "")
        doc_dir.mkdir(parents=True, exist_ok=True)
        shutil.copy(FIXTURES / "filings" / document, doc_dir / document)
        (doc_dir / "meta.json").write_text(
            json.dumps({"media_type": "text/html", "ticker": ticker}), encoding="utf-8"
        )
    return cache_dir


def offline_client_for(cache_dir: Path) -> EdgarClient:
    policy = FetchPolicy(
        user_agent=TEST_USER_AGENT, cache_dir=cache_dir, offline_mode=True
    )
    return EdgarClient(policy, limiter=RateLimiter(10))


@pytest.fixture(scope="session")
def fixture_cache(tmp_path_factory) -> Path:
    return build_fixture_cache(tmp_path_factory.mktemp("edgar-cache"))


@pytest.fixture()
def offline_client(fixture_cache) -> EdgarClient:
    client = offline_client_for(fixture_cache)
    yield client
    client.close()


@pytest.fixture(scope="session")
def parsed_corpus(fixture_cache):
    """All three fixture companies parsed once per session."""
    client = offline_client_for(fixture_cache)
    corpus = {}
    try:
        for symbol in FIXTURE_COMPANIES:
            corpus[symbol] = fetch_and_parse(client, Ticker(symbol))
    finally:
        client.close()
    return corpus


@pytest.fixture(scope="session")
def rgld_filing(parsed_corpus):
    return parsed_corpus["RGLD"][2023].filing
