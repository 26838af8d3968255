"""SEC-EDGAR client: ticker resolution, 10-K listings, document fetch.

All network access goes through a process-wide sliding-window rate limiter
(SEC fair access caps clients at 10 requests/second) and a local on-disk
cache laid out to mirror EDGAR archive paths.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

import httpx

from .errors import (
    CacheWriteError,
    MalformedResponse,
    NetworkError,
    NotFound,
    RateLimitExceeded,
    UnknownCik,
    UnknownTicker,
    ValidationError,
)

TICKER_MAP_URL = "https://www.sec.gov/files/company_tickers.json"
SUBMISSIONS_URL = "https://data.sec.gov/submissions/CIK{cik}.json"
SUBMISSIONS_FILE_URL = "https://data.sec.gov/submissions/{name}"
ARCHIVES_URL = "https://www.sec.gov/Archives/edgar/data/{cik_short}/{accession}/{document}"

_TICKER_RE = re.compile(r"^[A-Z.\-]{1,10}$")
_CIK_RE = re.compile(r"^\d{10}$")
_ACCESSION_RE = re.compile(r"^\d{10}-\d{2}-\d{6}$")

_RETRY_BACKOFF = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class Ticker:
    """An exchange ticker symbol, normalized to uppercase."""

    symbol: str

    def __post_init__(self) -> None:
        normalized = self.symbol.strip().upper()
        object.__setattr__(self, "symbol", normalized)
        if not _TICKER_RE.match(normalized):
            raise ValidationError(f"invalid ticker symbol: {self.symbol!r}")

    def __str__(self) -> str:
        return self.symbol


@dataclass(frozen=True)
class Cik:
    """SEC Central Index Key as a zero-padded 10-digit string."""

    value: str

    def __post_init__(self) -> None:
        if not _CIK_RE.match(self.value) or int(self.value) == 0:
            raise ValidationError(f"invalid CIK: {self.value!r}")

    @classmethod
    def from_int(cls, number: int) -> "Cik":
        return cls(str(number).zfill(10))

    @property
    def short(self) -> str:
        """CIK without leading zeros, as used in archive URLs."""
        return str(int(self.value))

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class AccessionNumber:
    """Accession number in canonical dashed form ##########-##-######."""

    value: str

    def __post_init__(self) -> None:
        if not _ACCESSION_RE.match(self.value):
            raise ValidationError(f"invalid accession number: {self.value!r}")

    @classmethod
    def from_dashless(cls, digits: str) -> "AccessionNumber":
        if not re.match(r"^\d{18}$", digits):
            raise ValidationError(f"invalid dashless accession: {digits!r}")
        return cls(f"{digits[:10]}-{digits[10:12]}-{digits[12:]}")

    @property
    def dashless(self) -> str:
        return self.value.replace("-", "")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FilingRef:
    """Identity of one filing on EDGAR."""

    cik: Cik
    accession: AccessionNumber
    form_type: str
    filing_date: date
    primary_document: str
    fiscal_year: int | None = None

    def __post_init__(self) -> None:
        if not self.primary_document:
            raise ValidationError("primary_document must be nonempty")
        if self.filing_date > date.today():
            raise ValidationError(f"filing_date {self.filing_date} is in the future")


@dataclass
class FetchPolicy:
    """Network etiquette and cache configuration for EDGAR access."""

    user_agent: str
    max_requests_per_second: float = 10.0
    cache_dir: Path = field(default_factory=lambda: Path("cache"))
    offline_mode: bool = False

    def __post_init__(self) -> None:
        self.cache_dir = Path(self.cache_dir)
        if not (0 < self.max_requests_per_second <= 10):
            raise ValidationError("max_requests_per_second must be in (0, 10]")
        if "@" not in self.user_agent:
            raise ValidationError(
                "user_agent must include a contact address (SEC fair-access policy)"
            )

    @classmethod
    def from_env(cls) -> "FetchPolicy":
        user_agent = os.environ.get("EDGAR_USER_AGENT", "")
        if not user_agent:
            raise ValidationError("EDGAR_USER_AGENT environment variable is required")
        return cls(
            user_agent=user_agent,
            cache_dir=Path(os.environ.get("EDGAR_CACHE_DIR", "cache")),
            offline_mode=os.environ.get("EDGAR_OFFLINE", "0") == "1",
        )


class RateLimiter:
    """Blocking gate releasing at most N requests per sliding window.

    For integral rates the window is one second with capacity N; fractional
    rates fall back to fixed spacing of 1/rate seconds. Thread-safe; the
    lock is held through the wait so callers are released one at a time.
    """

    def __init__(
        self,
        max_requests_per_second: float,
        clock=time.monotonic,
        sleep=time.sleep,
    ) -> None:
        if max_requests_per_second <= 0:
            raise ValidationError("rate must be positive")
        if max_requests_per_second >= 1 and float(max_requests_per_second).is_integer():
            self._capacity = int(max_requests_per_second)
            self._window = 1.0
        else:
            self._capacity = 1
            self._window = 1.0 / max_requests_per_second
        self._clock = clock
        self._sleep = sleep
        self._releases: list[float] = []
        self._lock = threading.Lock()

    def acquire(self) -> None:
        """Block until a request may be released under the rate limit."""
        with self._lock:
            now = self._clock()
            self._prune(now)
            if len(self._releases) >= self._capacity:
                wake_at = self._releases[0] + self._window
                delay = wake_at - now
                if delay > 0:
                    self._sleep(delay)
                now = self._clock()
                self._prune(now)
            self._releases.append(now)

    def _prune(self, now: float) -> None:
        cutoff = now - self._window
        while self._releases and self._releases[0] <= cutoff:
            self._releases.pop(0)


_shared_limiters: dict[float, RateLimiter] = {}
_shared_limiters_lock = threading.Lock()


def shared_limiter(max_requests_per_second: float) -> RateLimiter:
    """Process-global limiter so concurrent clients share one release gate."""
    with _shared_limiters_lock:
        limiter = _shared_limiters.get(max_requests_per_second)
        if limiter is None:
            limiter = RateLimiter(max_requests_per_second)
            _shared_limiters[max_requests_per_second] = limiter
        return limiter


class EdgarClient:
    """Resolve tickers, list historic 10-K filings, and fetch documents.

    Every response is cached under ``policy.cache_dir``; with
    ``offline_mode`` set, only the cache is consulted and misses raise
    :class:`NotFound`.
    """

    def __init__(
        self,
        policy: FetchPolicy,
        transport: httpx.BaseTransport | None = None,
        limiter: RateLimiter | None = None,
        backoff_sleep=time.sleep,
    ) -> None:
        self.policy = policy
        self._limiter = limiter or shared_limiter(policy.max_requests_per_second)
        self._backoff_sleep = backoff_sleep
        self._http = httpx.Client(
            headers={"User-Agent": policy.user_agent},
            timeout=30.0,
            follow_redirects=True,
            transport=transport,
        )

    # -- cache paths -------------------------------------------------------

    def _ticker_map_path(self) -> Path:
        return self.policy.cache_dir / "company_tickers.json"

    def _submissions_path(self, cik: Cik, name: str = "submissions.json") -> Path:
        return self.policy.cache_dir / cik.value / name

    def _document_dir(self, ref: FilingRef) -> Path:
        return self.policy.cache_dir / ref.cik.value / ref.accession.dashless

    # -- HTTP --------------------------------------------------------------

    def throttle(self) -> None:
        """Wait for permission to issue one request."""
        self._limiter.acquire()

    def _get(self, url: str) -> httpx.Response:
        if self.policy.offline_mode:
            raise NotFound(f"offline mode: {url} not in cache")
        last_error: Exception | None = None
        rate_limited = False
        for attempt in range(1 + len(_RETRY_BACKOFF)):
            if attempt > 0:
                self._backoff_sleep(_RETRY_BACKOFF[attempt - 1])
            self.throttle()
            try:
                response = self._http.get(url)
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code == 404:
                raise NotFound(url)
            if response.status_code in (403, 429):
                rate_limited = True
                last_error = NetworkError(f"HTTP {response.status_code} for {url}")
                continue
            if response.status_code >= 500:
                last_error = NetworkError(f"HTTP {response.status_code} for {url}")
                continue
            response.raise_for_status()
            return response
        if rate_limited:
            raise RateLimitExceeded(f"upstream throttling persisted for {url}")
        raise NetworkError(f"request failed for {url}: {last_error}")

    # -- public API --------------------------------------------------------

    def resolve_cik(self, ticker: Ticker) -> Cik:
        """Look up the CIK registered for a ticker in EDGAR's mapping file."""
        mapping = self._load_ticker_map()
        entry = mapping.get(ticker.symbol)
        if entry is None:
            raise UnknownTicker(f"ticker {ticker.symbol} not in EDGAR company mapping")
        return Cik.from_int(entry)

    def _load_ticker_map(self) -> dict[str, int]:
        path = self._ticker_map_path()
        if path.exists():
            payload = json.loads(path.read_text(encoding="utf-8"))
        else:
            if self.policy.offline_mode:
                raise NotFound("offline mode: ticker mapping not in cache")
            payload = self._get(TICKER_MAP_URL).json()
            _atomic_write(path, json.dumps(payload).encode("utf-8"))
        mapping: dict[str, int] = {}
        if not isinstance(payload, dict):
            raise MalformedResponse("ticker mapping is not a JSON object")
        for entry in payload.values():
            if not isinstance(entry, dict):
                continue
            symbol = str(entry.get("ticker", "")).upper()
            cik_raw = entry.get("cik_str")
            if symbol and cik_raw is not None:
                mapping[symbol] = int(cik_raw)
        if not mapping:
            raise MalformedResponse("ticker mapping contained no entries")
        return mapping

    def list_10k_filings(
        self, cik: Cik, include_amendments: bool = False
    ) -> list[FilingRef]:
        """All 10-K filings for a CIK, newest first.

        Amendments (10-K/A) are excluded unless ``include_amendments``;
        supplementary submission pages are followed when present.
        """
        submissions = self._load_submissions(cik)
        wanted = {"10-K", "10-K/A"} if include_amendments else {"10-K"}
        refs = self._refs_from_listing(cik, submissions, wanted)
        for name in self._supplementary_names(submissions):
            extra = self._load_submissions(cik, name=name)
            refs.extend(self._refs_from_listing(cik, extra, wanted, recent_key=False))
        seen: set[str] = set()
        unique: list[FilingRef] = []
        for ref in refs:
            if ref.accession.value in seen:
                continue
            seen.add(ref.accession.value)
            unique.append(ref)
        unique.sort(key=lambda ref: ref.filing_date, reverse=True)
        return unique

    def _load_submissions(self, cik: Cik, name: str = "submissions.json") -> dict:
        path = self._submissions_path(cik, name)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        if self.policy.offline_mode:
            raise NotFound(f"offline mode: submissions for CIK {cik} not in cache")
        if name == "submissions.json":
            url = SUBMISSIONS_URL.format(cik=cik.value)
        else:
            url = SUBMISSIONS_FILE_URL.format(name=name)
        try:
            payload = self._get(url).json()
        except NotFound:
            raise UnknownCik(f"EDGAR has no submissions for CIK {cik}") from None
        _atomic_write(path, json.dumps(payload).encode("utf-8"))
        return payload

    @staticmethod
    def _supplementary_names(submissions: dict) -> list[str]:
        files = submissions.get("filings", {}).get("files", [])
        names: list[str] = []
        if isinstance(files, list):
            for item in files:
                if isinstance(item, dict) and isinstance(item.get("name"), str):
                    names.append(item["name"])
        return names

    @staticmethod
    def _refs_from_listing(
        cik: Cik, submissions: dict, wanted: set[str], recent_key: bool = True
    ) -> list[FilingRef]:
        if recent_key:
            listing = submissions.get("filings", {}).get("recent")
        else:
            listing = submissions
        if not isinstance(listing, dict):
            raise MalformedResponse("submissions document missing filings listing")
        try:
            forms = listing["form"]
            accessions = listing["accessionNumber"]
            dates = listing["filingDate"]
            documents = listing["primaryDocument"]
        except (KeyError, TypeError) as exc:
            raise MalformedResponse(f"submissions listing missing array: {exc}") from None
        if not (len(forms) == len(accessions) == len(dates) == len(documents)):
            raise MalformedResponse("submissions listing arrays have unequal lengths")
        refs: list[FilingRef] = []
        for form, accession, filed, document in zip(forms, accessions, dates, documents):
            if form not in wanted or not document:
                continue
            refs.append(
                FilingRef(
                    cik=cik,
                    accession=AccessionNumber(accession),
                    form_type=form,
                    filing_date=datetime.strptime(filed, "%Y-%m-%d").date(),
                    primary_document=document,
                )
            )
        return refs

    def fetch_document(self, ref: FilingRef) -> tuple[bytes, str]:
        """Primary document body and media type, cached after first fetch."""
        doc_dir = self._document_dir(ref)
        body_path = doc_dir / ref.primary_document
        meta_path = doc_dir / "meta.json"
        if body_path.exists():
            media_type = "text/html"
            if meta_path.exists():
                meta = json.loads(meta_path.read_text(encoding="utf-8"))
                media_type = meta.get("media_type", media_type)
            return body_path.read_bytes(), media_type

        url = ARCHIVES_URL.format(
            cik_short=ref.cik.short,
            accession=ref.accession.dashless,
            document=ref.primary_document,
        )
        if self.policy.offline_mode:
            raise NotFound(f"offline mode: {url} not in cache")
        response = self._get(url)
        media_type = response.headers.get("Content-Type", "text/html").split(";")[0]
        _atomic_write(body_path, response.content)
        sidecar = {
            "cik": ref.cik.value,
            "accession": ref.accession.value,
            "form_type": ref.form_type,
            "filing_date": ref.filing_date.isoformat(),
            "primary_document": ref.primary_document,
            "media_type": media_type,
            "source_url": url,
        }
        _atomic_write(meta_path, json.dumps(sidecar, indent=2).encode("utf-8"))
        return response.content, media_type

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "EdgarClient":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def _atomic_write(path: Path, payload: bytes) -> None:
    """Write-temp-then-rename so concurrent readers never see partial files."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + f".tmp{os.getpid()}")
        tmp.write_bytes(payload)
        os.replace(tmp, path)
    except OSError as exc:
        raise CacheWriteError(f"cannot write cache file {path}: {exc}") from exc
