"""EDGAR client: value types, caching, throttling, retries, offline mode."""

from __future__ import annotations

import json
from datetime import date

import httpx
import pytest

from tenkscore.edgar import (
    AccessionNumber,
    Cik,
    EdgarClient,
    FetchPolicy,
    FilingRef,
    RateLimiter,
    Ticker,
)
from tenkscore.errors import (
    MalformedResponse,
    NotFound,
    RateLimitExceeded,
    UnknownCik,
    UnknownTicker,
    ValidationError,
)

from conftest import TEST_USER_AGENT


class FakeClock:
    def __init__(self) -> None:
        self.now = 0.0
        self.sleeps: list[float] = []

    def __call__(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        self.now += seconds


def make_policy(tmp_path, **kwargs) -> FetchPolicy:
    kwargs.setdefault("user_agent", TEST_USER_AGENT)
    kwargs.setdefault("cache_dir", tmp_path / "cache")
    return FetchPolicy(**kwargs)


def make_client(tmp_path, handler, **kwargs) -> tuple[EdgarClient, list[httpx.Request]]:
    requests: list[httpx.Request] = []

    def recording_handler(request: httpx.Request) -> httpx.Response:
        requests.append(request)
        return handler(request)

    clock = FakeClock()
    client = EdgarClient(
        make_policy(tmp_path, **kwargs),
        transport=httpx.MockTransport(recording_handler),
        limiter=RateLimiter(10, clock=clock, sleep=clock.sleep),
        backoff_sleep=lambda _: None,
    )
    return client, requests


# -- value types -------------------------------------------------------------


def test_ticker_uppercases_and_validates():
    assert Ticker("aapl").symbol == "AAPL"
    assert Ticker("BRK.B").symbol == "BRK.B"
    with pytest.raises(ValidationError):
        Ticker("")
    with pytest.raises(ValidationError):
        Ticker("WAYTOOLONGSYM")
    with pytest.raises(ValidationError):
        Ticker("BAD$")


def test_cik_padding_and_short_form():
    cik = Cik.from_int(320193)
    assert cik.value == "0000320193"
    assert cik.short == "320193"
    with pytest.raises(ValidationError):
        Cik("320193")
    with pytest.raises(ValidationError):
        Cik("0000000000")


def test_accession_dashed_and_dashless_roundtrip():
    acc = AccessionNumber("0000320193-23-000106")
    assert acc.dashless == "000032019323000106"
    assert AccessionNumber.from_dashless(acc.dashless) == acc
    with pytest.raises(ValidationError):
        AccessionNumber("320193-23-106")


def test_filing_ref_rejects_future_date():
    with pytest.raises(ValidationError):
        FilingRef(
            cik=Cik.from_int(1),
            accession=AccessionNumber("0000000001-99-000001"),
            form_type="10-K",
            filing_date=date.today().replace(year=date.today().year + 1),
            primary_document="doc.htm",
        )


def test_fetch_policy_requires_contact_and_caps_rate(tmp_path):
    with pytest.raises(ValidationError):
        make_policy(tmp_path, user_agent="no contact here")
    with pytest.raises(ValidationError):
        make_policy(tmp_path, max_requests_per_second=25)


# -- rate limiter ------------------------------------------------------------


def test_single_request_released_immediately():
    clock = FakeClock()
    limiter = RateLimiter(10, clock=clock, sleep=clock.sleep)
    limiter.acquire()
    assert clock.now == 0.0


def test_limit_one_per_second_spaces_releases():
    clock = FakeClock()
    limiter = RateLimiter(1, clock=clock, sleep=clock.sleep)
    stamps = []
    for _ in range(3):
        limiter.acquire()
        stamps.append(clock.now)
    gaps = [b - a for a, b in zip(stamps, stamps[1:])]
    assert all(gap >= 1.0 for gap in gaps)


def test_hundred_requests_at_ten_per_second_take_nine_seconds():
    clock = FakeClock()
    limiter = RateLimiter(10, clock=clock, sleep=clock.sleep)
    for _ in range(100):
        limiter.acquire()
    assert clock.now == pytest.approx(9.0)


def test_sliding_window_never_exceeds_capacity():
    clock = FakeClock()
    limiter = RateLimiter(10, clock=clock, sleep=clock.sleep)
    releases = []
    for _ in range(40):
        limiter.acquire()
        releases.append(clock.now)
    for start in releases:
        in_window = [t for t in releases if start <= t < start + 1.0]
        assert len(in_window) <= 10


# -- resolve_cik ---------------------------------------------------------------


TICKER_PAYLOAD = {
    "0": {"cik_str": 320193, "ticker": "AAPL", "title": "Apple Inc."},
    "1": {"cik_str": 85535, "ticker": "RGLD", "title": "ROYAL GOLD INC"},
}


def ticker_map_handler(request: httpx.Request) -> httpx.Response:
    if request.url.path.endswith("company_tickers.json"):
        return httpx.Response(200, json=TICKER_PAYLOAD)
    return httpx.Response(404)


def test_resolve_cik_fetches_once_then_caches(tmp_path):
    client, requests = make_client(tmp_path, ticker_map_handler)
    assert client.resolve_cik(Ticker("AAPL")) == Cik("0000320193")
    assert client.resolve_cik(Ticker("RGLD")) == Cik("0000085535")
    assert len(requests) == 1  # second lookup served from cache


def test_resolve_cik_case_insensitive(tmp_path):
    client, _ = make_client(tmp_path, ticker_map_handler)
    assert client.resolve_cik(Ticker("aapl")) == client.resolve_cik(Ticker("AAPL"))


def test_resolve_cik_unknown_ticker(tmp_path):
    client, _ = make_client(tmp_path, ticker_map_handler)
    with pytest.raises(UnknownTicker):
        client.resolve_cik(Ticker("ZZZZNOTRL"))


def test_offline_resolve_uses_fixture_cache(offline_client):
    assert offline_client.resolve_cik(Ticker("RGLD")) == Cik("0000085535")
    assert offline_client.resolve_cik(Ticker("IBM")) == Cik("0000051143")


# -- list_10k_filings -----------------------------------------------------------


def submissions_payload(rows, files=()):
    return {
        "cik": "85535",
        "filings": {
            "recent": {
                "accessionNumber": [r[0] for r in rows],
                "filingDate": [r[1] for r in rows],
                "reportDate": [r[1] for r in rows],
                "form": [r[2] for r in rows],
                "primaryDocument": [r[3] for r in rows],
            },
            "files": list(files),
        },
    }


def test_list_filings_excludes_amendments_by_default(offline_client):
    refs = offline_client.list_10k_filings(Cik("0000085535"))
    assert [ref.form_type for ref in refs] == ["10-K"]
    assert refs[0].accession.value == "0000085535-24-000015"


def test_list_filings_includes_amendments_on_request(offline_client):
    refs = offline_client.list_10k_filings(Cik("0000085535"), include_amendments=True)
    assert [ref.form_type for ref in refs] == ["10-K/A", "10-K"]


def test_list_filings_newest_first(tmp_path):
    payload = submissions_payload(
        [
            ("0000085535-20-000010", "2020-02-10", "10-K", "a.htm"),
            ("0000085535-22-000010", "2022-02-10", "10-K", "b.htm"),
            ("0000085535-21-000010", "2021-02-10", "10-K", "c.htm"),
        ]
    )

    def handler(request):
        return httpx.Response(200, json=payload)

    client, _ = make_client(tmp_path, handler)
    refs = client.list_10k_filings(Cik("0000085535"))
    dates = [ref.filing_date for ref in refs]
    assert dates == sorted(dates, reverse=True)


def test_list_filings_empty_when_no_10k(tmp_path):
    payload = submissions_payload([("0000085535-20-000010", "2020-02-10", "8-K", "a.htm")])
    client, _ = make_client(tmp_path, lambda request: httpx.Response(200, json=payload))
    assert client.list_10k_filings(Cik("0000085535")) == []


def test_list_filings_follows_supplementary_pages(tmp_path):
    extra = {
        "accessionNumber": ["0000085535-05-000010"],
        "filingDate": ["2005-02-10"],
        "form": ["10-K"],
        "primaryDocument": ["old.htm"],
    }
    payload = submissions_payload(
        [("0000085535-24-000015", "2024-02-15", "10-K", "new.htm")],
        files=[{"name": "CIK0000085535-submissions-001.json"}],
    )

    def handler(request):
        if "submissions-001" in request.url.path:
            return httpx.Response(200, json=extra)
        return httpx.Response(200, json=payload)

    client, _ = make_client(tmp_path, handler)
    refs = client.list_10k_filings(Cik("0000085535"))
    assert len(refs) == 2
    assert refs[-1].accession.value == "0000085535-05-000010"


def test_list_filings_malformed_response(tmp_path):
    client, _ = make_client(
        tmp_path, lambda request: httpx.Response(200, json={"filings": {"recent": {}}})
    )
    with pytest.raises(MalformedResponse):
        client.list_10k_filings(Cik("0000085535"))


def test_list_filings_unknown_cik(tmp_path):
    client, _ = make_client(tmp_path, lambda request: httpx.Response(404))
    with pytest.raises(UnknownCik):
        client.list_10k_filings(Cik("0000099999"))


# -- fetch_document ---------------------------------------------------------------


def make_ref(document="doc.htm") -> FilingRef:
    return FilingRef(
        cik=Cik("0000085535"),
        accession=AccessionNumber("0000085535-24-000015"),
        form_type="10-K",
        filing_date=date(2024, 2, 15),
        primary_document=document,
    )


def test_fetch_document_cold_then_warm_cache(tmp_path):
    body = b"<html><body><p>Hello filings.</p></body></html>"

    def handler(request):
        return httpx.Response(200, content=body, headers={"Content-Type": "text/html"})

    client, requests = make_client(tmp_path, handler)
    first, media_type = client.fetch_document(make_ref())
    assert first == body and media_type == "text/html"
    assert len(requests) == 1

    second, _ = client.fetch_document(make_ref())
    assert second == body
    assert len(requests) == 1  # warm cache: zero additional network requests


def test_fetch_document_cache_layout(tmp_path):
    client, _ = make_client(tmp_path, lambda request: httpx.Response(200, content=b"x"))
    client.fetch_document(make_ref())
    expected = tmp_path / "cache" / "0000085535" / "000008553524000015" / "doc.htm"
    assert expected.read_bytes() == b"x"
    sidecar = json.loads((expected.parent / "meta.json").read_text())
    assert sidecar["accession"] == "0000085535-24-000015"


def test_fetch_document_not_found(tmp_path):
    client, _ = make_client(tmp_path, lambda request: httpx.Response(404))
    with pytest.raises(NotFound):
        client.fetch_document(make_ref("missing.htm"))


def test_fetch_document_offline_miss_is_not_found(tmp_path):
    policy = make_policy(tmp_path, offline_mode=True)
    client = EdgarClient(policy, transport=httpx.MockTransport(lambda r: httpx.Response(200)))
    with pytest.raises(NotFound):
        client.fetch_document(make_ref())


def test_offline_mode_never_touches_network(tmp_path):
    called = []

    def handler(request):
        called.append(request)
        return httpx.Response(200, json=TICKER_PAYLOAD)

    policy = make_policy(tmp_path, offline_mode=True)
    client = EdgarClient(policy, transport=httpx.MockTransport(handler))
    with pytest.raises(NotFound):
        client.resolve_cik(Ticker("AAPL"))
    with pytest.raises(NotFound):
        client.list_10k_filings(Cik("0000085535"))
    assert called == []


# -- headers and retries --------------------------------------------------------------


def test_all_requests_carry_user_agent(tmp_path):
    client, requests = make_client(tmp_path, ticker_map_handler)
    client.resolve_cik(Ticker("AAPL"))
    assert requests and all(
        request.headers["User-Agent"] == TEST_USER_AGENT for request in requests
    )


def test_transient_errors_retried_then_succeed(tmp_path):
    attempts = []

    def flaky(request):
        attempts.append(request)
        if len(attempts) < 3:
            return httpx.Response(503)
        return httpx.Response(200, json=TICKER_PAYLOAD)

    client, _ = make_client(tmp_path, flaky)
    assert client.resolve_cik(Ticker("AAPL")) == Cik("0000320193")
    assert len(attempts) == 3


def test_persistent_throttling_raises_rate_limit(tmp_path):
    client, requests = make_client(tmp_path, lambda request: httpx.Response(429))
    with pytest.raises(RateLimitExceeded):
        client.resolve_cik(Ticker("AAPL"))
    assert len(requests) == 4  # initial attempt plus three retries
