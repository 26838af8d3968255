"""End-to-end orchestration: fetch -> parse -> grade -> compare -> persist.

A request is fingerprinted over everything that affects grades (ticker,
exclusions, year range, provider, prompt template versions); completed
work for the same fingerprint is reused instead of re-querying the
provider.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from . import storage
from .comparison import (
    COMPARISON_PROMPT_VERSION,
    ComparisonResult,
    ComparisonTask,
    run_comparison,
)
from .edgar import EdgarClient, FilingRef, Ticker
from .errors import (
    NoSectionsFound,
    TenkScoreError,
    ValidationError,
    YearNotFound,
)
from .grading import (
    ABSOLUTE_PROMPT_VERSION,
    CompletionProvider,
    Dimension,
    GraderMode,
    GradeResult,
    grade_filing,
)
from .parsing import (
    SectionedFiling,
    assign_sections,
    extract_fiscal_year,
    fiscal_year_from_filing_date,
    locate_sections,
    partition_html,
)
from .sections import SECTIONS, SectionLabel, by_id

DEFAULT_COMPARISON_SECTIONS: tuple[SectionLabel, ...] = (
    by_id("ITEM_1_BUSINESS"),
    by_id("ITEM_1A_RISK_FACTORS"),
    by_id("ITEM_2_PROPERTIES"),
    by_id("ITEM_3_LEGAL_PROCEEDINGS"),
    by_id("ITEM_7_MDA"),
    by_id("ITEM_7A_MARKET_RISK"),
)

ProgressCallback = Callable[[str, float, str], None]


@dataclass
class AnalysisRequest:
    """What to analyze and how."""

    ticker: Ticker
    excluded_sections: frozenset[SectionLabel] = frozenset()
    year_range: tuple[int, int] | None = None
    run_relative: bool = False
    peer_tickers: tuple[Ticker, ...] = ()

    def __post_init__(self) -> None:
        self.excluded_sections = frozenset(self.excluded_sections)
        self.peer_tickers = tuple(self.peer_tickers)
        known = set(SECTIONS)
        if not self.excluded_sections <= known:
            raise ValidationError("excluded_sections contains unknown section ids")
        if self.excluded_sections >= known:
            raise ValidationError("cannot exclude every section")
        if self.year_range is not None and self.year_range[0] > self.year_range[1]:
            raise ValidationError("year_range start must not exceed end")
        if self.run_relative and len(self.peer_tickers) != 2:
            raise ValidationError("relative analysis needs exactly 2 peer tickers")

    def fingerprint(self, provider_id: str) -> str:
        payload = json.dumps(
            {
                "ticker": self.ticker.symbol,
                "excluded": sorted(label.canonical_id for label in self.excluded_sections),
                "year_range": list(self.year_range) if self.year_range else None,
                "provider": provider_id,
                "templates": [ABSOLUTE_PROMPT_VERSION, COMPARISON_PROMPT_VERSION],
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass
class ParsedFiling:
    filing: SectionedFiling
    ref: FilingRef
    sectioned: bool
    year_fallback: bool


@dataclass
class PipelineResult:
    ticker: Ticker
    fingerprint: str
    fiscal_years: list[int]
    grade_results: list[GradeResult]
    comparisons: list[ComparisonResult] = field(default_factory=list)
    reused_years: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    provider_calls: int = 0


def parse_filing(
    raw: bytes, ref: FilingRef, ticker: Ticker, warnings: list[str] | None = None
) -> ParsedFiling:
    """Partition one document and tag its sections.

    A filing whose headings cannot be located is still gradable: all its
    elements stay in the UNKNOWN section.
    """
    elements = partition_html(raw)
    year_fallback = False
    try:
        fiscal_year = extract_fiscal_year(elements)
    except YearNotFound:
        fiscal_year = fiscal_year_from_filing_date(ref.filing_date)
        year_fallback = True
        if warnings is not None:
            warnings.append(
                f"{ticker} {ref.accession}: no period statement; "
                f"assumed FY{fiscal_year} from filing date"
            )
    sectioned = True
    try:
        starts = locate_sections(elements)
    except NoSectionsFound:
        starts = []
        sectioned = False
        if warnings is not None:
            warnings.append(
                f"{ticker} {ref.accession}: sections not located; "
                "narrative kept as UNKNOWN"
            )
    filing = assign_sections(elements, starts, ticker, fiscal_year)
    return ParsedFiling(
        filing=filing, ref=ref, sectioned=sectioned, year_fallback=year_fallback
    )


def fetch_and_parse(
    client: EdgarClient,
    ticker: Ticker,
    year_range: tuple[int, int] | None = None,
    warnings: list[str] | None = None,
    progress: ProgressCallback | None = None,
    stage: str = "Parsing",
) -> dict[int, ParsedFiling]:
    """All parseable 10-K filings for a ticker keyed by fiscal year."""
    cik = client.resolve_cik(ticker)
    refs = client.list_10k_filings(cik)
    parsed: dict[int, ParsedFiling] = {}
    for index, ref in enumerate(refs):
        try:
            raw, _ = client.fetch_document(ref)
            result = parse_filing(raw, ref, ticker, warnings)
        except TenkScoreError as exc:
            if warnings is not None:
                warnings.append(f"{ticker} {ref.accession}: {exc}")
            continue
        year = result.filing.fiscal_year
        if year_range is not None and not year_range[0] <= year <= year_range[1]:
            continue
        # Keep the first (newest) filing per fiscal year.
        parsed.setdefault(year, result)
        if progress is not None:
            progress(stage, min(0.4, 0.25 + 0.15 * (index + 1) / len(refs)), str(ref.accession))
    return parsed


def _provider_calls(provider: CompletionProvider) -> int:
    return getattr(provider, "calls", 0)


def run_pipeline(
    request: AnalysisRequest,
    client: EdgarClient,
    provider: CompletionProvider,
    data_dir: Path,
    force: bool = False,
    concurrency: int = 4,
    rotations: int = 3,
    comparison_sections: Sequence[SectionLabel] = DEFAULT_COMPARISON_SECTIONS,
    progress: ProgressCallback | None = None,
) -> PipelineResult:
    """Execute the full analysis for one request.

    Idempotent per fingerprint: a rerun with already-persisted grades
    issues zero provider calls unless ``force`` is set.
    """

    def report(stage: str, fraction: float, detail: str = "") -> None:
        if progress is not None:
            progress(stage, fraction, detail)

    provider_id = getattr(provider, "provider_id", provider.__class__.__name__)
    fingerprint = request.fingerprint(provider_id)
    warnings: list[str] = []
    calls_before = _provider_calls(provider)

    report("Fetching", 0.05, f"resolving {request.ticker}")
    parsed = fetch_and_parse(
        client, request.ticker, request.year_range, warnings, progress
    )
    if not parsed:
        raise ValidationError(f"no parseable 10-K filings for {request.ticker}")
    report("Parsing", 0.4, f"{len(parsed)} filing year(s)")

    existing = {
        (stored.result.fiscal_year, stored.result.dimension, stored.result.mode): stored.result
        for stored in storage.load_grades(data_dir, request.ticker)
        if stored.fingerprint == fingerprint
    }
    pairs = [(dimension, mode) for dimension in Dimension for mode in GraderMode]

    grade_results: list[GradeResult] = []
    reused_years: list[int] = []
    new_results: list[GradeResult] = []
    transcripts: list[dict] = []
    years = sorted(parsed)
    for position, year in enumerate(years):
        cached = [existing.get((year, dimension, mode)) for dimension, mode in pairs]
        if not force and all(result is not None for result in cached):
            grade_results.extend(result for result in cached if result is not None)
            reused_years.append(year)
            continue
        report("Grading", 0.4 + 0.45 * position / len(years), f"FY{year}")
        filing_report = grade_filing(
            parsed[year].filing,
            provider,
            set(request.excluded_sections),
            concurrency=concurrency,
            transcript_sink=transcripts.append,
        )
        for pair, message in filing_report.failures.items():
            warnings.append(f"FY{year} {pair[0].value}/{pair[1].value}: {message}")
        new_results.extend(filing_report.results)
        grade_results.extend(filing_report.results)
    report("Grading", 0.85, "grading complete")

    if new_results:
        storage.store_grades(data_dir, new_results, fingerprint)
    if transcripts:
        storage.append_transcripts(
            storage.company_dir(data_dir, request.ticker)
            / storage.GRADE_TRANSCRIPTS_FILE,
            transcripts,
        )

    comparisons: list[ComparisonResult] = []
    if request.run_relative:
        report("Comparing", 0.86, "parsing peers")
        comparisons = compare_companies(
            [request.ticker, *request.peer_tickers],
            client,
            provider,
            data_dir,
            sections=comparison_sections,
            rotations=rotations,
            year_range=request.year_range,
            warnings=warnings,
            preparsed={request.ticker: parsed},
        )
        report("Comparing", 0.95, f"{len(comparisons)} comparisons")

    storage.store_analysis(
        data_dir,
        storage.AnalysisSnapshot(
            ticker=request.ticker,
            fingerprint=fingerprint,
            fiscal_years=tuple(years),
            excluded_sections=tuple(
                sorted(label.canonical_id for label in request.excluded_sections)
            ),
            provider_id=provider_id,
            generated_at=datetime.now(timezone.utc).isoformat(),
        ),
    )
    storage.write_meta(data_dir, request.ticker, provider_id)

    return PipelineResult(
        ticker=request.ticker,
        fingerprint=fingerprint,
        fiscal_years=years,
        grade_results=grade_results,
        comparisons=comparisons,
        reused_years=reused_years,
        warnings=warnings,
        provider_calls=_provider_calls(provider) - calls_before,
    )


def section_excerpt(filing: SectionedFiling, section: SectionLabel) -> str:
    """Concatenated narrative of one section, in document order."""
    return "\n\n".join(
        element.text
        for element in filing.narrative_elements()
        if element.section == section
    )


def compare_companies(
    tickers: Sequence[Ticker],
    client: EdgarClient,
    provider: CompletionProvider,
    data_dir: Path,
    sections: Sequence[SectionLabel] = DEFAULT_COMPARISON_SECTIONS,
    rotations: int = 3,
    year_range: tuple[int, int] | None = None,
    warnings: list[str] | None = None,
    preparsed: dict[Ticker, dict[int, ParsedFiling]] | None = None,
) -> list[ComparisonResult]:
    """Three-way section comparisons across common fiscal years.

    Results and transcripts are stored under the first ticker. A section
    missing for any entrant that year is skipped (the template has exactly
    three slots).
    """
    if len(tickers) != 3:
        raise ValidationError("comparisons need exactly 3 companies")
    warnings = warnings if warnings is not None else []
    companies: dict[Ticker, dict[int, ParsedFiling]] = {}
    for ticker in tickers:
        if preparsed and ticker in preparsed:
            companies[ticker] = preparsed[ticker]
        else:
            companies[ticker] = fetch_and_parse(client, ticker, year_range, warnings)
    common_years = sorted(
        set.intersection(*(set(parsed) for parsed in companies.values()))
    )
    if not common_years:
        warnings.append("no common fiscal years across entrants; skipping comparisons")
        return []

    transcripts: list[dict] = []
    results: list[ComparisonResult] = []
    for year in common_years:
        for section in sections:
            excerpts = [
                (ticker, section_excerpt(companies[ticker][year].filing, section))
                for ticker in tickers
            ]
            if any(not excerpt for _, excerpt in excerpts):
                missing = [t.symbol for t, e in excerpts if not e]
                warnings.append(
                    f"FY{year} {section.canonical_id}: missing excerpt for "
                    f"{', '.join(missing)}; comparison skipped"
                )
                continue
            task = ComparisonTask(
                section=section, fiscal_year=year, entrants=tuple(excerpts)
            )
            results.append(
                run_comparison(
                    task, provider, rotations=rotations, transcript_sink=transcripts.append
                )
            )
    owner = tickers[0]
    if results:
        storage.store_comparisons(data_dir, owner, results)
    if transcripts:
        storage.append_transcripts(
            storage.company_dir(data_dir, owner) / storage.COMPARISON_TRANSCRIPTS_FILE,
            transcripts,
        )
    return results


def latest_grades(data_dir: Path, ticker: Ticker) -> list[GradeResult]:
    """Grades from the most recent completed analysis of a ticker.

    Falls back to the newest record per (year, dimension, mode) when no
    analysis snapshot exists.
    """
    stored = storage.load_grades(data_dir, ticker)
    if not stored:
        return []
    snapshots = storage.load_analyses(data_dir, ticker)
    chosen: dict[tuple[int, Dimension, GraderMode], GradeResult] = {}
    if snapshots:
        fingerprint = snapshots[-1].fingerprint
        for item in stored:
            if item.fingerprint == fingerprint:
                key = (item.result.fiscal_year, item.result.dimension, item.result.mode)
                chosen[key] = item.result
    if not chosen:
        for item in stored:
            key = (item.result.fiscal_year, item.result.dimension, item.result.mode)
            chosen[key] = item.result
    return list(chosen.values())
