"""Durable, append-only persistence for grades, comparisons, and analyses.

Layout: ``{data_dir}/{TICKER}/grades.ndjson``, ``comparisons.ndjson``,
``analyses.ndjson``, ``meta.json``, plus transcript files. Every record
line carries a checksum over its canonical payload so tampering or
truncation surfaces as :class:`StorageCorrupt` with the line number.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import SCHEMA_VERSION
from .comparison import ComparisonResult, RotationOutcome, Verdict
from .edgar import Ticker
from .errors import StorageCorrupt
from .grading import Dimension, GraderMode, GradeResult
from .sections import by_id

GRADES_FILE = "grades.ndjson"
COMPARISONS_FILE = "comparisons.ndjson"
ANALYSES_FILE = "analyses.ndjson"
META_FILE = "meta.json"
GRADE_TRANSCRIPTS_FILE = "grade_transcripts.ndjson"
COMPARISON_TRANSCRIPTS_FILE = "comparison_transcripts.ndjson"

_write_lock = threading.Lock()


def _canonical(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _checksum(data: dict) -> str:
    return hashlib.sha256(_canonical(data).encode("utf-8")).hexdigest()[:16]


def _wrap(kind: str, data: dict) -> str:
    return json.dumps(
        {
            "schema_version": SCHEMA_VERSION,
            "kind": kind,
            "data": data,
            "checksum": _checksum(data),
        },
        ensure_ascii=False,
    )


def _read_records(path: Path, kind: str) -> list[dict]:
    if not path.exists():
        return []
    records = []
    # Split on \n only: JSON strings may legally contain U+2028/U+2029,
    # which str.splitlines would treat as record boundaries.
    for number, line in enumerate(path.read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            wrapper = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StorageCorrupt(f"{path}:{number}: invalid JSON ({exc})") from None
        if wrapper.get("schema_version") != SCHEMA_VERSION:
            raise StorageCorrupt(
                f"{path}:{number}: schema version {wrapper.get('schema_version')!r} "
                f"(expected {SCHEMA_VERSION})"
            )
        if wrapper.get("kind") != kind:
            raise StorageCorrupt(f"{path}:{number}: unexpected record kind")
        data = wrapper.get("data")
        if not isinstance(data, dict) or wrapper.get("checksum") != _checksum(data):
            raise StorageCorrupt(f"{path}:{number}: checksum mismatch")
        records.append(data)
    return records


def _append_lines(path: Path, lines: Iterable[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with _write_lock:
        with path.open("a", encoding="utf-8") as handle:
            for line in lines:
                handle.write(line + "\n")


def company_dir(data_dir: Path, ticker: Ticker) -> Path:
    return Path(data_dir) / ticker.symbol


def write_meta(data_dir: Path, ticker: Ticker, provider_id: str) -> None:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "provider_id": provider_id,
        "ticker": ticker.symbol,
    }
    path = company_dir(data_dir, ticker) / META_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


# -- Grades ---------------------------------------------------------------------


@dataclass(frozen=True)
class StoredGrade:
    result: GradeResult
    fingerprint: str


def grade_to_record(result: GradeResult, fingerprint: str) -> dict:
    return {
        "company": result.company.symbol,
        "fiscal_year": result.fiscal_year,
        "dimension": result.dimension.value,
        "mode": result.mode.value,
        "score": result.score,
        "chunk_scores": list(result.chunk_scores),
        "prompt_hash": result.prompt_hash,
        "raw_completion": result.raw_completion,
        "failed_chunks": list(result.failed_chunks),
        "fingerprint": fingerprint,
    }


def grade_from_record(record: dict) -> StoredGrade:
    return StoredGrade(
        result=GradeResult(
            company=Ticker(record["company"]),
            fiscal_year=record["fiscal_year"],
            dimension=Dimension(record["dimension"]),
            mode=GraderMode(record["mode"]),
            score=record["score"],
            chunk_scores=tuple(record["chunk_scores"]),
            prompt_hash=record["prompt_hash"],
            raw_completion=record["raw_completion"],
            failed_chunks=tuple(record["failed_chunks"]),
        ),
        fingerprint=record["fingerprint"],
    )


def store_grades(
    data_dir: Path, results: Sequence[GradeResult], fingerprint: str
) -> None:
    by_ticker: dict[Ticker, list[GradeResult]] = {}
    for result in results:
        by_ticker.setdefault(result.company, []).append(result)
    for ticker, ticker_results in by_ticker.items():
        path = company_dir(data_dir, ticker) / GRADES_FILE
        _append_lines(
            path,
            (_wrap("grade", grade_to_record(r, fingerprint)) for r in ticker_results),
        )


def load_grades(data_dir: Path, ticker: Ticker) -> list[StoredGrade]:
    path = company_dir(data_dir, ticker) / GRADES_FILE
    return [grade_from_record(record) for record in _read_records(path, "grade")]


# -- Comparisons ------------------------------------------------------------------


def comparison_to_record(result: ComparisonResult) -> dict:
    return {
        "id": result.comparison_id,
        "section": result.section.canonical_id,
        "fiscal_year": result.fiscal_year,
        "tickers": [ticker.symbol for ticker in result.tickers],
        "rotations": [
            {
                "ordering": list(outcome.ordering),
                "verdict": outcome.verdict.value,
                "winner_index": outcome.winner_index,
                "raw_completion": outcome.raw_completion,
            }
            for outcome in result.rotations
        ],
        "winner": result.winner.symbol if result.winner else None,
    }


def comparison_from_record(record: dict) -> ComparisonResult:
    return ComparisonResult(
        section=by_id(record["section"]),
        fiscal_year=record["fiscal_year"],
        tickers=tuple(Ticker(symbol) for symbol in record["tickers"]),  # type: ignore[arg-type]
        rotations=tuple(
            RotationOutcome(
                ordering=tuple(outcome["ordering"]),  # type: ignore[arg-type]
                verdict=Verdict(outcome["verdict"]),
                winner_index=outcome["winner_index"],
                raw_completion=outcome["raw_completion"],
            )
            for outcome in record["rotations"]
        ),
        winner=Ticker(record["winner"]) if record["winner"] else None,
    )


def store_comparisons(
    data_dir: Path, owner: Ticker, results: Sequence[ComparisonResult]
) -> None:
    path = company_dir(data_dir, owner) / COMPARISONS_FILE
    _append_lines(path, (_wrap("comparison", comparison_to_record(r)) for r in results))


def load_comparisons(data_dir: Path, tickers: Iterable[Ticker]) -> list[ComparisonResult]:
    """Merge the comparison logs of several companies, deduplicated."""
    seen: set[str] = set()
    results: list[ComparisonResult] = []
    for ticker in tickers:
        path = company_dir(data_dir, ticker) / COMPARISONS_FILE
        for record in _read_records(path, "comparison"):
            if record["id"] in seen:
                continue
            seen.add(record["id"])
            results.append(comparison_from_record(record))
    return results


# -- Analysis snapshots -------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisSnapshot:
    """Marker that a pipeline run completed for a request fingerprint."""

    ticker: Ticker
    fingerprint: str
    fiscal_years: tuple[int, ...]
    excluded_sections: tuple[str, ...]
    provider_id: str
    generated_at: str


def snapshot_to_record(snapshot: AnalysisSnapshot) -> dict:
    return {
        "ticker": snapshot.ticker.symbol,
        "fingerprint": snapshot.fingerprint,
        "fiscal_years": list(snapshot.fiscal_years),
        "excluded_sections": list(snapshot.excluded_sections),
        "provider_id": snapshot.provider_id,
        "generated_at": snapshot.generated_at,
    }


def snapshot_from_record(record: dict) -> AnalysisSnapshot:
    return AnalysisSnapshot(
        ticker=Ticker(record["ticker"]),
        fingerprint=record["fingerprint"],
        fiscal_years=tuple(record["fiscal_years"]),
        excluded_sections=tuple(record["excluded_sections"]),
        provider_id=record["provider_id"],
        generated_at=record["generated_at"],
    )


def store_analysis(data_dir: Path, snapshot: AnalysisSnapshot) -> None:
    path = company_dir(data_dir, snapshot.ticker) / ANALYSES_FILE
    _append_lines(path, [_wrap("analysis", snapshot_to_record(snapshot))])


def load_analyses(data_dir: Path, ticker: Ticker) -> list[AnalysisSnapshot]:
    path = company_dir(data_dir, ticker) / ANALYSES_FILE
    return [snapshot_from_record(record) for record in _read_records(path, "analysis")]


# -- Transcripts ----------------------------------------------------------------------


def append_transcripts(path: Path, records: Sequence[dict]) -> None:
    _append_lines(path, (json.dumps(record, ensure_ascii=False) for record in records))


# -- Report CSVs ----------------------------------------------------------------------


def write_report_csvs(
    tables: dict[str, tuple[list[str], list[list]]], out_dir: Path
) -> list[Path]:
    """One CSV per analytic table; returns the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (header, rows) in tables.items():
        path = out_dir / f"{name}.csv"
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_format_csv_value(value) for value in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)
    return written


def _format_csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    text = str(value)
    if any(c in text for c in ',"\r\n'):
        return '"' + text.replace('"', '""') + '"'
    return text
