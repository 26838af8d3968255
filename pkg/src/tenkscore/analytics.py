"""Derived analytics over stored grades and comparisons.

Everything here is pure computation: strict/normal averaging, per-year
priority proportions, the dimension correlation matrix, rating ranges,
and the flat tables exported as report CSVs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .comparison import ComparisonResult, tally_wins
from .edgar import Ticker
from .errors import DimensionMismatch, ValidationError
from .grading import Dimension, GraderMode, GradeResult

PROPORTION_TOLERANCE = 1e-9
MIN_CORRELATION_OBSERVATIONS = 3


@dataclass(frozen=True)
class AveragedScore:
    """Strict/normal average for one (company, year, dimension)."""

    company: Ticker
    fiscal_year: int
    dimension: Dimension
    score: float
    single_mode: bool = False


def average_modes(
    normal: GradeResult | None, strict: GradeResult | None
) -> AveragedScore:
    """Mean of the two grader personas; one missing mode passes through
    flagged ``single_mode``."""
    if normal is None and strict is None:
        raise ValidationError("at least one grade is required")
    if normal is not None and strict is not None:
        if (normal.company, normal.fiscal_year, normal.dimension) != (
            strict.company,
            strict.fiscal_year,
            strict.dimension,
        ):
            raise DimensionMismatch(
                "normal and strict grades must share company, year, and dimension"
            )
        return AveragedScore(
            company=normal.company,
            fiscal_year=normal.fiscal_year,
            dimension=normal.dimension,
            score=(normal.score + strict.score) / 2,
        )
    present = normal if normal is not None else strict
    assert present is not None
    return AveragedScore(
        company=present.company,
        fiscal_year=present.fiscal_year,
        dimension=present.dimension,
        score=present.score,
        single_mode=True,
    )


def averaged_scores(results: Iterable[GradeResult]) -> list[AveragedScore]:
    """Pair up modes per (company, year, dimension) and average them."""
    by_key: dict[tuple[Ticker, int, Dimension], dict[GraderMode, GradeResult]] = {}
    for result in results:
        key = (result.company, result.fiscal_year, result.dimension)
        by_key.setdefault(key, {})[result.mode] = result
    averaged = [
        average_modes(modes.get(GraderMode.NORMAL), modes.get(GraderMode.STRICT))
        for modes in by_key.values()
    ]
    averaged.sort(key=lambda item: (item.company.symbol, item.dimension.value, item.fiscal_year))
    return averaged


@dataclass
class RatingSeries:
    """Per-company, per-dimension averaged scores keyed by fiscal year."""

    company: Ticker
    dimension: Dimension
    points: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for year, score in self.points.items():
            if not 0 <= score <= 2:
                raise ValidationError(f"score out of range for {year}: {score}")


def rating_series(scores: Iterable[AveragedScore]) -> list[RatingSeries]:
    by_key: dict[tuple[Ticker, Dimension], dict[int, float]] = {}
    for item in scores:
        by_key.setdefault((item.company, item.dimension), {})[item.fiscal_year] = item.score
    series = [
        RatingSeries(company=company, dimension=dimension, points=dict(sorted(points.items())))
        for (company, dimension), points in by_key.items()
    ]
    series.sort(key=lambda s: (s.company.symbol, s.dimension.value))
    return series


@dataclass(frozen=True)
class PrioritySnapshot:
    """Share of each dimension in one company-year's total rating."""

    company: Ticker
    fiscal_year: int
    proportions: dict[Dimension, float]
    degenerate: bool = False


def priority_proportions(series: Sequence[RatingSeries]) -> list[PrioritySnapshot]:
    """Normalize the four dimension scores of each year into shares.

    A year whose scores total zero renders as a uniform split flagged
    ``degenerate`` so chart year-axes stay aligned.
    """
    companies = {s.company for s in series}
    if len(companies) > 1:
        raise ValidationError("priority proportions mix companies")
    if not series:
        return []
    company = next(iter(companies))
    years = sorted({year for s in series for year in s.points})
    by_dimension = {s.dimension: s.points for s in series}
    snapshots = []
    for year in years:
        scores = {
            dimension: by_dimension.get(dimension, {}).get(year, 0.0)
            for dimension in Dimension
        }
        total = sum(scores.values())
        if total <= 0:
            snapshots.append(
                PrioritySnapshot(
                    company=company,
                    fiscal_year=year,
                    proportions={dimension: 0.25 for dimension in Dimension},
                    degenerate=True,
                )
            )
            continue
        snapshots.append(
            PrioritySnapshot(
                company=company,
                fiscal_year=year,
                proportions={d: score / total for d, score in scores.items()},
            )
        )
    return snapshots


@dataclass
class CorrelationMatrix:
    """Pearson coefficients between dimension rating series.

    ``None`` marks undefined entries (fewer than 3 paired observations or
    zero variance).
    """

    dimensions: tuple[Dimension, ...]
    values: dict[tuple[Dimension, Dimension], float | None]
    observation_count: int

    def value(self, a: Dimension, b: Dimension) -> float | None:
        return self.values[(a, b)]

    def as_rows(self) -> list[list[float | None]]:
        return [
            [self.values[(a, b)] for b in self.dimensions] for a in self.dimensions
        ]


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Computational-formula Pearson r; None when variance vanishes."""
    n = len(xs)
    if n != len(ys) or n == 0:
        raise ValidationError("paired samples required")
    sum_x = sum(xs)
    sum_y = sum(ys)
    sum_xy = sum(x * y for x, y in zip(xs, ys))
    sum_x2 = sum(x * x for x in xs)
    sum_y2 = sum(y * y for y in ys)
    var_x = n * sum_x2 - sum_x * sum_x
    var_y = n * sum_y2 - sum_y * sum_y
    if var_x <= 0 or var_y <= 0:
        return None
    r = (n * sum_xy - sum_x * sum_y) / math.sqrt(var_x * var_y)
    return min(1.0, max(-1.0, r))


def correlation_matrix(scores: Iterable[AveragedScore]) -> CorrelationMatrix:
    """Pairwise Pearson over all (company, year) observations."""
    observations: dict[tuple[Ticker, int], dict[Dimension, float]] = {}
    for item in scores:
        observations.setdefault((item.company, item.fiscal_year), {})[
            item.dimension
        ] = item.score
    dimensions = tuple(Dimension)
    values: dict[tuple[Dimension, Dimension], float | None] = {}
    for a in dimensions:
        for b in dimensions:
            paired = [
                (obs[a], obs[b])
                for obs in observations.values()
                if a in obs and b in obs
            ]
            if len(paired) < MIN_CORRELATION_OBSERVATIONS:
                values[(a, b)] = None
                continue
            values[(a, b)] = pearson([x for x, _ in paired], [y for _, y in paired])
    return CorrelationMatrix(
        dimensions=dimensions, values=values, observation_count=len(observations)
    )


@dataclass(frozen=True)
class RangeStats:
    """Five-number summary with linear-interpolation quartiles."""

    count: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def _percentile(ordered: Sequence[float], fraction: float) -> float:
    if not ordered:
        raise ValidationError("percentile of empty data")
    if len(ordered) == 1:
        return ordered[0]
    position = fraction * (len(ordered) - 1)
    low = math.floor(position)
    high = math.ceil(position)
    if low == high:
        return ordered[low]
    weight = position - low
    return ordered[low] * (1 - weight) + ordered[high] * weight


def range_stats(scores: Sequence[float]) -> RangeStats | None:
    """None is the empty-summary marker."""
    if not scores:
        return None
    ordered = sorted(scores)
    return RangeStats(
        count=len(ordered),
        minimum=ordered[0],
        q1=_percentile(ordered, 0.25),
        median=_percentile(ordered, 0.5),
        q3=_percentile(ordered, 0.75),
        maximum=ordered[-1],
    )


@dataclass
class DimensionRanges:
    overall: RangeStats | None
    by_mode: dict[GraderMode, RangeStats | None]


def rating_ranges(results: Iterable[GradeResult]) -> dict[Dimension, DimensionRanges]:
    """Order statistics per dimension, overall and per grader mode."""
    by_dimension: dict[Dimension, dict[GraderMode, list[float]]] = {
        dimension: {mode: [] for mode in GraderMode} for dimension in Dimension
    }
    for result in results:
        by_dimension[result.dimension][result.mode].append(result.score)
    summary: dict[Dimension, DimensionRanges] = {}
    for dimension, by_mode in by_dimension.items():
        pooled = [score for scores in by_mode.values() for score in scores]
        summary[dimension] = DimensionRanges(
            overall=range_stats(pooled),
            by_mode={mode: range_stats(scores) for mode, scores in by_mode.items()},
        )
    return summary


# -- Report tables -------------------------------------------------------------


def report_tables(
    grade_results: Sequence[GradeResult],
    comparison_results: Sequence[ComparisonResult] = (),
) -> dict[str, tuple[list[str], list[list]]]:
    """Flat (header, rows) tables backing the report CSVs and the UI."""
    ratings_rows = [
        [r.company.symbol, r.fiscal_year, r.dimension.value, r.mode.value, r.score]
        for r in sorted(
            grade_results,
            key=lambda r: (r.company.symbol, r.fiscal_year, r.dimension.value, r.mode.value),
        )
    ]

    averaged = averaged_scores(grade_results)
    proportions_rows = []
    for company in sorted({a.company for a in averaged}, key=lambda t: t.symbol):
        company_series = rating_series([a for a in averaged if a.company == company])
        for snapshot in priority_proportions(company_series):
            for dimension in Dimension:
                proportions_rows.append(
                    [
                        company.symbol,
                        snapshot.fiscal_year,
                        dimension.value,
                        snapshot.proportions[dimension],
                    ]
                )

    matrix = correlation_matrix(averaged)
    correlations_rows = [
        [a.value, b.value, matrix.value(a, b)]
        for a in matrix.dimensions
        for b in matrix.dimensions
    ]

    table = tally_wins(list(comparison_results))
    wins_rows = [
        [ticker.symbol, section.canonical_id, count]
        for (ticker, section), count in sorted(
            table.wins.items(), key=lambda kv: (kv[0][0].symbol, kv[0][1].sort_key)
        )
    ]

    return {
        "ratings": (["company", "year", "dimension", "mode", "score"], ratings_rows),
        "proportions": (["company", "year", "dimension", "fraction"], proportions_rows),
        "correlations": (["dim_a", "dim_b", "r"], correlations_rows),
        "wins": (["company", "section", "wins"], wins_rows),
    }
