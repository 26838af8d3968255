"""Command-line surface: fetch, parse, grade, compare, report, serve."""

from __future__ import annotations

import json
import os
import socket
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import SCHEMA_VERSION, analytics, storage
from .api import AppConfig, create_app
from .edgar import EdgarClient, FetchPolicy, Ticker
from .errors import TenkScoreError, ValidationError
from .grading import CompletionProvider
from .parsing import export_csv, write_isd
from .pipeline import (
    AnalysisRequest,
    DEFAULT_COMPARISON_SECTIONS,
    compare_companies,
    fetch_and_parse,
    latest_grades,
    run_pipeline,
)
from .providers import (
    DeterministicStub,
    HttpProvider,
    ReplayProvider,
    max_concurrency_from_env,
)
from .sections import by_id


@dataclass
class Settings:
    cache_dir: Path
    data_dir: Path
    user_agent: str
    offline: bool

    def policy(self) -> FetchPolicy:
        return FetchPolicy(
            user_agent=self.user_agent,
            cache_dir=self.cache_dir,
            offline_mode=self.offline,
        )

    def client(self) -> EdgarClient:
        return EdgarClient(self.policy())


def _build_provider(kind: str, stub_script: str, replay_dir: str | None) -> CompletionProvider:
    if kind == "stub":
        answers = tuple(part.strip() for part in stub_script.split(",") if part.strip())
        return DeterministicStub(answers or ("1",))
    if kind == "replay":
        if not replay_dir:
            raise ValidationError("--replay-dir is required with --provider replay")
        return ReplayProvider(Path(replay_dir))
    if kind == "http":
        return HttpProvider.from_env()
    raise ValidationError(f"unknown provider kind: {kind}")


def _parse_sections(section_ids: tuple[str, ...]):
    try:
        return frozenset(by_id(section_id) for section_id in section_ids)
    except KeyError as exc:
        raise ValidationError(str(exc)) from None


def _emit(payload: dict, as_json: bool, lines: list[str]) -> None:
    if as_json:
        payload["schema_version"] = SCHEMA_VERSION
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in lines:
            click.echo(line)


@click.group()
@click.option(
    "--cache-dir",
    type=click.Path(path_type=Path),
    default=lambda: Path(os.environ.get("EDGAR_CACHE_DIR", "cache")),
    help="EDGAR document cache directory.",
)
@click.option(
    "--data-dir",
    type=click.Path(path_type=Path),
    default=lambda: Path(os.environ.get("DATA_DIR", "data")),
    help="Analysis data directory.",
)
@click.option(
    "--user-agent",
    default=lambda: os.environ.get("EDGAR_USER_AGENT", ""),
    help="Contact user agent for SEC requests (name email@example.com).",
)
@click.option("--offline", is_flag=True, default=None, help="Never touch the network.")
@click.pass_context
def cli(ctx, cache_dir: Path, data_dir: Path, user_agent: str, offline: bool | None):
    """Analyze SEC 10-K filings with rubric-driven LLM grading."""
    if offline is None:
        offline = os.environ.get("EDGAR_OFFLINE", "0") == "1"
    if not user_agent:
        # A throwaway agent is fine offline; live use must set a real contact.
        user_agent = "tenkscore dev@example.com" if offline else ""
    if not user_agent:
        raise ValidationError(
            "set EDGAR_USER_AGENT (or --user-agent) to a contact string"
        )
    ctx.obj = Settings(
        cache_dir=cache_dir, data_dir=data_dir, user_agent=user_agent, offline=offline
    )


@cli.command()
@click.argument("ticker")
@click.option("--limit", type=int, default=0, help="Fetch at most N newest filings.")
@click.option("--include-amendments", is_flag=True, default=False)
@click.option("--json", "as_json", is_flag=True, default=False)
@click.pass_obj
def fetch(settings: Settings, ticker: str, limit: int, include_amendments: bool, as_json: bool):
    """Download a company's 10-K documents into the local cache."""
    symbol = Ticker(ticker)
    with settings.client() as client:
        cik = client.resolve_cik(symbol)
        refs = client.list_10k_filings(cik, include_amendments=include_amendments)
        if limit > 0:
            refs = refs[:limit]
        fetched = []
        for ref in refs:
            body, _ = client.fetch_document(ref)
            fetched.append(
                {
                    "accession": ref.accession.value,
                    "filing_date": ref.filing_date.isoformat(),
                    "document": ref.primary_document,
                    "bytes": len(body),
                }
            )
    _emit(
        {"ticker": symbol.symbol, "cik": cik.value, "filings": fetched},
        as_json,
        [f"{symbol} (CIK {cik}): cached {len(fetched)} filing(s)"]
        + [f"  {item['filing_date']}  {item['accession']}  {item['document']}" for item in fetched],
    )


@cli.command()
@click.argument("ticker")
@click.option("--year", type=int, default=None, help="Fiscal year to parse.")
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None)
@click.option("--isd", "isd_path", type=click.Path(path_type=Path), default=None)
@click.option("--all-elements", is_flag=True, default=False, help="CSV keeps non-narrative rows.")
@click.option("--json", "as_json", is_flag=True, default=False)
@click.pass_obj
def parse(settings, ticker, year, csv_path, isd_path, all_elements, as_json):
    """Partition cached filings into section-tagged narrative text."""
    symbol = Ticker(ticker)
    warnings: list[str] = []
    with settings.client() as client:
        parsed = fetch_and_parse(client, symbol, warnings=warnings)
    if not parsed:
        raise ValidationError(f"no parseable 10-K filings for {symbol}")
    if year is None:
        year = max(parsed)
    if year not in parsed:
        raise ValidationError(
            f"no filing for fiscal year {year}; have {sorted(parsed)}"
        )
    filing = parsed[year].filing
    if csv_path is not None:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        csv_path.write_bytes(export_csv(filing, narrative_only=not all_elements))
    if isd_path is not None:
        write_isd(filing, isd_path)
    sections_found = sorted(
        {e.section.canonical_id for e in filing.elements if e.section.item_number}
    )
    summary = {
        "ticker": symbol.symbol,
        "fiscal_year": year,
        "elements": len(filing.elements),
        "narrative_elements": len(filing.narrative_elements()),
        "sections": sections_found,
        "unknown_narrative_ratio": round(filing.unknown_narrative_ratio(), 4),
        "warnings": warnings,
    }
    _emit(
        summary,
        as_json,
        [
            f"{symbol} FY{year}: {summary['elements']} elements, "
            f"{summary['narrative_elements']} narrative, "
            f"{len(sections_found)} sections, "
            f"unknown ratio {summary['unknown_narrative_ratio']:.2%}",
        ]
        + [f"  warning: {w}" for w in warnings],
    )


@cli.command()
@click.argument("ticker")
@click.option("--exclude", "excluded", multiple=True, help="Section id to exclude.")
@click.option("--provider", "provider_kind", type=click.Choice(["stub", "replay", "http"]), default="stub")
@click.option("--stub-script", default="1", help="Comma-separated scripted answers.")
@click.option("--replay-dir", default=None)
@click.option("--year-from", type=int, default=None)
@click.option("--year-to", type=int, default=None)
@click.option("--force", is_flag=True, default=False, help="Regrade even if cached.")
@click.option("--max-concurrency", type=int, default=None)
@click.option("--json", "as_json", is_flag=True, default=False)
@click.pass_obj
def grade(
    settings,
    ticker,
    excluded,
    provider_kind,
    stub_script,
    replay_dir,
    year_from,
    year_to,
    force,
    max_concurrency,
    as_json,
):
    """Grade a company's filings on all four dimensions, both modes."""
    year_range = None
    if (year_from is None) != (year_to is None):
        raise ValidationError("--year-from and --year-to must be given together")
    if year_from is not None:
        year_range = (year_from, year_to)
    request = AnalysisRequest(
        ticker=Ticker(ticker),
        excluded_sections=_parse_sections(excluded),
        year_range=year_range,
    )
    provider = _build_provider(provider_kind, stub_script, replay_dir)
    concurrency = max_concurrency or max_concurrency_from_env()
    with settings.client() as client:
        result = run_pipeline(
            request,
            client,
            provider,
            settings.data_dir,
            force=force,
            concurrency=concurrency,
        )
    averaged = analytics.averaged_scores(result.grade_results)
    ratings = {
        series.dimension.value: {str(y): s for y, s in series.points.items()}
        for series in analytics.rating_series(averaged)
    }
    payload = {
        "ticker": request.ticker.symbol,
        "fingerprint": result.fingerprint,
        "fiscal_years": result.fiscal_years,
        "grades": len(result.grade_results),
        "ratings": ratings,
        "reused_years": result.reused_years,
        "provider_calls": result.provider_calls,
        "warnings": result.warnings,
    }
    lines = [
        f"{request.ticker} graded: {len(result.grade_results)} results over "
        f"{len(result.fiscal_years)} year(s); provider calls: {result.provider_calls}"
    ]
    for dimension, points in sorted(ratings.items()):
        series = ", ".join(f"{y}={score:g}" for y, score in sorted(points.items()))
        lines.append(f"  {dimension}: {series}")
    lines.extend(f"  warning: {w}" for w in result.warnings)
    _emit(payload, as_json, lines)


@cli.command()
@click.argument("tickers", nargs=3)
@click.option("--sections", "section_ids", multiple=True, help="Section ids to compare.")
@click.option("--provider", "provider_kind", type=click.Choice(["stub", "replay", "http"]), default="stub")
@click.option("--stub-script", default="A", help="Comma-separated scripted answers.")
@click.option("--replay-dir", default=None)
@click.option("--rotations", type=int, default=3)
@click.option("--year-from", type=int, default=None)
@click.option("--year-to", type=int, default=None)
@click.option("--json", "as_json", is_flag=True, default=False)
@click.pass_obj
def compare(
    settings,
    tickers,
    section_ids,
    provider_kind,
    stub_script,
    replay_dir,
    rotations,
    year_from,
    year_to,
    as_json,
):
    """Run three-way section comparisons and tally wins."""
    entrants = [Ticker(symbol) for symbol in tickers]
    if len({t.symbol for t in entrants}) != 3:
        raise ValidationError("three distinct tickers are required")
    sections = (
        tuple(_parse_sections(section_ids)) if section_ids else DEFAULT_COMPARISON_SECTIONS
    )
    year_range = None
    if (year_from is None) != (year_to is None):
        raise ValidationError("--year-from and --year-to must be given together")
    if year_from is not None:
        year_range = (year_from, year_to)
    provider = _build_provider(provider_kind, stub_script, replay_dir)
    warnings: list[str] = []
    with settings.client() as client:
        results = compare_companies(
            entrants,
            client,
            provider,
            settings.data_dir,
            sections=sections,
            rotations=rotations,
            year_range=year_range,
            warnings=warnings,
        )
    table = analytics.tally_wins(results)
    payload = {
        "tickers": [t.symbol for t in entrants],
        "comparisons": len(results),
        "wins": [
            {"company": t.symbol, "section": s.canonical_id, "wins": count}
            for (t, s), count in sorted(
                table.wins.items(), key=lambda kv: (kv[0][0].symbol, kv[0][1].sort_key)
            )
        ],
        "totals": {t.symbol: c for t, c in table.totals.items()},
        "inconclusive": table.inconclusive,
        "warnings": warnings,
    }
    lines = [f"{len(results)} comparisons; inconclusive: {table.inconclusive}"]
    for symbol, total in sorted(payload["totals"].items()):
        lines.append(f"  {symbol}: {total} win(s)")
    lines.extend(f"  warning: {w}" for w in warnings)
    _emit(payload, as_json, lines)


@cli.command()
@click.argument("ticker")
@click.option("--format", "fmt", type=click.Choice(["csv"]), default="csv")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
@click.option("--peers", default="", help="Comma-separated peer tickers for win counts.")
@click.option("--json", "as_json", is_flag=True, default=False)
@click.pass_obj
def report(settings, ticker, fmt, out_dir, peers, as_json):
    """Export the analytic tables (ratings, proportions, correlations, wins)."""
    symbol = Ticker(ticker)
    grades = latest_grades(settings.data_dir, symbol)
    if not grades:
        raise ValidationError(f"no stored grades for {symbol}; run `grade` first")
    peer_tickers = [Ticker(part) for part in peers.split(",") if part]
    comparisons = storage.load_comparisons(settings.data_dir, [symbol, *peer_tickers])
    tables = analytics.report_tables(grades, comparisons)
    out_dir = out_dir or (settings.data_dir / symbol.symbol / "reports")
    written = storage.write_report_csvs(tables, out_dir)
    _emit(
        {"ticker": symbol.symbol, "files": [str(path) for path in written]},
        as_json,
        [f"wrote {path}" for path in written],
    )


@cli.command()
@click.option("--port", type=int, default=lambda: int(os.environ.get("PORT", "8000")))
@click.option("--host", default="127.0.0.1")
@click.option("--static-dir", type=click.Path(path_type=Path), default=None)
@click.option("--provider", "provider_kind", type=click.Choice(["stub", "replay", "http"]), default=None)
@click.option("--stub-script", default="1")
@click.option("--replay-dir", default=None)
@click.option("--workers", type=int, default=2, help="Concurrent analysis jobs.")
@click.pass_obj
def serve(settings, port, host, static_dir, provider_kind, stub_script, replay_dir, workers):
    """Serve the HTTP API and the companion UI."""
    import uvicorn

    if provider_kind is None:
        provider_kind = "http" if os.environ.get("LLM_BASE_URL") else "stub"
    if static_dir is None:
        env_static = os.environ.get("STATIC_DIR")
        if env_static:
            static_dir = Path(env_static)
        elif (Path("frontend") / "dist").is_dir():
            static_dir = Path("frontend") / "dist"
    config = AppConfig(
        data_dir=settings.data_dir,
        cache_dir=settings.cache_dir,
        user_agent=settings.user_agent,
        offline=settings.offline,
        provider_factory=lambda: _build_provider(provider_kind, stub_script, replay_dir),
        static_dir=static_dir,
        job_workers=workers,
        concurrency=max_concurrency_from_env(),
    )
    app = create_app(config)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    actual_port = sock.getsockname()[1]
    click.echo(f"listening on http://{host}:{actual_port}")
    server = uvicorn.Server(uvicorn.Config(app, log_level="info"))
    server.run(sockets=[sock])


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit codes (1 usage, 2 runtime)."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        return 1
    except TenkScoreError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
