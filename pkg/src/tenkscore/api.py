"""HTTP API serving analyses, analytics datasets, and the companion UI."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import SCHEMA_VERSION, analytics, storage
from .edgar import EdgarClient, FetchPolicy, Ticker
from .errors import StorageCorrupt, ValidationError
from .grading import CompletionProvider
from .jobs import AnalysisJob, DuplicateJob, JobManager, JobStatus
from .pipeline import AnalysisRequest, latest_grades, run_pipeline
from .sections import SECTIONS, by_id

_STAGE_TO_STATUS = {
    "Fetching": JobStatus.FETCHING,
    "Parsing": JobStatus.PARSING,
    "Grading": JobStatus.GRADING,
    "Comparing": JobStatus.COMPARING,
}


@dataclass
class AppConfig:
    data_dir: Path
    cache_dir: Path
    user_agent: str
    provider_factory: Callable[[], CompletionProvider]
    offline: bool = False
    static_dir: Path | None = None
    job_workers: int = 2
    concurrency: int = 4
    rotations: int = 3


class AnalysisBody(BaseModel):
    ticker: str
    excluded_sections: list[str] = Field(default_factory=list)
    year_from: int | None = None
    year_to: int | None = None
    run_relative: bool = False
    peer_tickers: list[str] = Field(default_factory=list)


def _payload(**body) -> dict:
    body["schema_version"] = SCHEMA_VERSION
    return body


def _request_from_body(body: AnalysisBody) -> AnalysisRequest:
    year_range = None
    if body.year_from is not None or body.year_to is not None:
        if body.year_from is None or body.year_to is None:
            raise ValidationError("year_from and year_to must be given together")
        year_range = (body.year_from, body.year_to)
    try:
        excluded = frozenset(by_id(section_id) for section_id in body.excluded_sections)
    except KeyError as exc:
        raise ValidationError(str(exc)) from None
    return AnalysisRequest(
        ticker=Ticker(body.ticker),
        excluded_sections=excluded,
        year_range=year_range,
        run_relative=body.run_relative,
        peer_tickers=tuple(Ticker(peer) for peer in body.peer_tickers),
    )


def create_app(config: AppConfig) -> FastAPI:
    app = FastAPI(title="tenkscore", version="0.1.0")
    manager = JobManager(workers=config.job_workers)
    app.state.config = config
    app.state.jobs = manager

    def edgar_client() -> EdgarClient:
        return EdgarClient(
            FetchPolicy(
                user_agent=config.user_agent,
                cache_dir=config.cache_dir,
                offline_mode=config.offline,
            )
        )

    @app.exception_handler(ValidationError)
    async def _validation_error(_, exc: ValidationError):
        return JSONResponse(status_code=400, content=_payload(error=str(exc)))

    @app.exception_handler(StorageCorrupt)
    async def _storage_error(_, exc: StorageCorrupt):
        return JSONResponse(status_code=500, content=_payload(error=str(exc)))

    @app.post("/api/analyses", status_code=202)
    def submit_analysis(body: AnalysisBody) -> dict:
        request = _request_from_body(body)
        provider = config.provider_factory()
        provider_id = getattr(provider, "provider_id", provider.__class__.__name__)
        fingerprint = request.fingerprint(provider_id)

        def runner(job: AnalysisJob) -> str:
            def progress(stage: str, fraction: float, detail: str) -> None:
                status = _STAGE_TO_STATUS.get(stage)
                if status is not None:
                    job.advance(status, fraction, detail)

            with edgar_client() as client:
                result = run_pipeline(
                    request,
                    client,
                    provider,
                    config.data_dir,
                    concurrency=config.concurrency,
                    rotations=config.rotations,
                    progress=progress,
                )
            return f"/api/companies/{result.ticker.symbol}/ratings"

        try:
            job = manager.submit(fingerprint, runner)
        except DuplicateJob as exc:
            return JSONResponse(
                status_code=409,
                content=_payload(error=str(exc), job_id=exc.job_id),
            )
        return _payload(job_id=job.id, fingerprint=fingerprint)

    @app.get("/api/analyses/{job_id}")
    def job_status(job_id: str) -> dict:
        job = manager.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job id {job_id}")
        return _payload(**job.snapshot())

    def _grades_or_404(ticker_symbol: str):
        ticker = Ticker(ticker_symbol)
        grades = latest_grades(config.data_dir, ticker)
        if not grades:
            raise HTTPException(
                status_code=404, detail=f"no stored analysis for {ticker.symbol}"
            )
        return ticker, grades

    @app.get("/api/companies/{ticker_symbol}/ratings")
    def company_ratings(ticker_symbol: str) -> dict:
        ticker, grades = _grades_or_404(ticker_symbol)
        averaged = analytics.averaged_scores(grades)
        series = analytics.rating_series(averaged)
        ranges = analytics.rating_ranges(grades)
        return _payload(
            ticker=ticker.symbol,
            series=[
                {
                    "dimension": s.dimension.value,
                    "points": {str(year): score for year, score in s.points.items()},
                }
                for s in series
            ],
            ranges={
                dimension.value: {
                    "overall": _range_dict(summary.overall),
                    "by_mode": {
                        mode.value: _range_dict(stats)
                        for mode, stats in summary.by_mode.items()
                    },
                }
                for dimension, summary in ranges.items()
            },
        )

    @app.get("/api/companies/{ticker_symbol}/proportions")
    def company_proportions(ticker_symbol: str) -> dict:
        ticker, grades = _grades_or_404(ticker_symbol)
        averaged = analytics.averaged_scores(grades)
        snapshots = analytics.priority_proportions(analytics.rating_series(averaged))
        return _payload(
            ticker=ticker.symbol,
            snapshots=[
                {
                    "fiscal_year": snapshot.fiscal_year,
                    "proportions": {
                        dimension.value: fraction
                        for dimension, fraction in snapshot.proportions.items()
                    },
                    "degenerate": snapshot.degenerate,
                }
                for snapshot in snapshots
            ],
        )

    @app.get("/api/companies/{ticker_symbol}/correlations")
    def company_correlations(ticker_symbol: str) -> dict:
        # One matrix pooled over every stored company: the rating
        # dimensions are meant to stay decorrelated globally.
        _grades_or_404(ticker_symbol)
        pooled = []
        for company_path in sorted(Path(config.data_dir).iterdir()):
            if not (company_path / storage.GRADES_FILE).exists():
                continue
            pooled.extend(latest_grades(config.data_dir, Ticker(company_path.name)))
        matrix = analytics.correlation_matrix(analytics.averaged_scores(pooled))
        return _payload(
            scope="all_companies",
            dimensions=[dimension.value for dimension in matrix.dimensions],
            matrix=matrix.as_rows(),
            observation_count=matrix.observation_count,
        )

    @app.get("/api/comparisons")
    def comparisons(tickers: str = Query(...)) -> dict:
        symbols = [part for part in tickers.split(",") if part]
        if not symbols:
            raise ValidationError("tickers query parameter is required")
        parsed = [Ticker(symbol) for symbol in symbols]
        results = storage.load_comparisons(config.data_dir, parsed)
        table = analytics.tally_wins(results)
        return _payload(
            tickers=[ticker.symbol for ticker in parsed],
            wins=[
                {"company": ticker.symbol, "section": section.canonical_id, "wins": count}
                for (ticker, section), count in sorted(
                    table.wins.items(),
                    key=lambda kv: (kv[0][0].symbol, kv[0][1].sort_key),
                )
            ],
            totals={ticker.symbol: count for ticker, count in table.totals.items()},
            inconclusive=table.inconclusive,
            comparisons=len(results),
        )

    @app.get("/api/sections")
    def sections() -> dict:
        return _payload(
            sections=[
                {
                    "id": label.canonical_id,
                    "display_name": label.display_name,
                    "item": label.item_name,
                }
                for label in SECTIONS
            ]
        )

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        app.mount(
            "/", StaticFiles(directory=str(config.static_dir), html=True), name="ui"
        )

    return app


def _range_dict(stats: analytics.RangeStats | None) -> dict | None:
    if stats is None:
        return None
    return {
        "count": stats.count,
        "min": stats.minimum,
        "q1": stats.q1,
        "median": stats.median,
        "q3": stats.q3,
        "max": stats.maximum,
    }
