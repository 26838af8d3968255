"""Analytics: mode averaging, proportions, correlation, ranges, reports."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tenkscore.analytics import (
    AveragedScore,
    RatingSeries,
    average_modes,
    averaged_scores,
    correlation_matrix,
    pearson,
    priority_proportions,
    range_stats,
    rating_ranges,
    rating_series,
    report_tables,
)
from tenkscore.edgar import Ticker
from tenkscore.errors import DimensionMismatch, ValidationError
from tenkscore.grading import Dimension, GraderMode, GradeResult

TICKER = Ticker("TEST")
OTHER = Ticker("PEER")


def grade(score, dimension=Dimension.CONFIDENCE, mode=GraderMode.NORMAL,
          year=2023, company=TICKER):
    return GradeResult(
        company=company,
        fiscal_year=year,
        dimension=dimension,
        mode=mode,
        score=score,
        chunk_scores=(score,),
        prompt_hash="abc123",
        raw_completion=str(score),
    )


def avg(company, year, dimension, score):
    return AveragedScore(company=company, fiscal_year=year, dimension=dimension, score=score)


# -- average_modes -----------------------------------------------------------------


def test_arithmetic_mean_of_modes():
    result = average_modes(grade(1.0), grade(2.0, mode=GraderMode.STRICT))
    assert result.score == 1.5
    assert not result.single_mode


def test_idempotent_on_equal_scores():
    result = average_modes(grade(1.3), grade(1.3, mode=GraderMode.STRICT))
    assert result.score == 1.3


def test_single_mode_passthrough_flagged():
    result = average_modes(grade(1.0), None)
    assert result.score == 1.0
    assert result.single_mode


def test_dimension_mismatch_rejected():
    with pytest.raises(DimensionMismatch):
        average_modes(
            grade(1.0, dimension=Dimension.PEOPLE),
            grade(1.0, dimension=Dimension.CONFIDENCE, mode=GraderMode.STRICT),
        )


@given(
    st.floats(min_value=0, max_value=2, allow_nan=False),
    st.floats(min_value=0, max_value=2, allow_nan=False),
)
def test_average_between_min_and_max(a, b):
    result = average_modes(grade(a), grade(b, mode=GraderMode.STRICT))
    assert min(a, b) <= result.score <= max(a, b)


# -- priority_proportions ----------------------------------------------------------


def series_for(scores_by_dim: dict, year=2023, company=TICKER):
    return [
        RatingSeries(company=company, dimension=dimension, points={year: score})
        for dimension, score in scores_by_dim.items()
    ]


def test_equal_scores_quarter_each():
    series = series_for({d: 2.0 for d in Dimension})
    snapshots = priority_proportions(series)
    assert all(p == 0.25 for p in snapshots[0].proportions.values())


def test_single_mass_case():
    scores = dict(zip(Dimension, [2.0, 0.0, 0.0, 0.0]))
    snapshot = priority_proportions(series_for(scores))[0]
    assert snapshot.proportions[Dimension.CONFIDENCE] == 1.0
    assert sum(snapshot.proportions.values()) == 1.0


def test_hand_computed_shares():
    scores = dict(zip(Dimension, [1.5, 0.5, 1.0, 1.0]))
    snapshot = priority_proportions(series_for(scores))[0]
    values = [snapshot.proportions[d] for d in Dimension]
    assert values == [0.375, 0.125, 0.25, 0.25]


def test_zero_total_year_uniform_degenerate():
    scores = dict(zip(Dimension, [0.0, 0.0, 0.0, 0.0]))
    snapshot = priority_proportions(series_for(scores))[0]
    assert snapshot.degenerate
    assert all(p == 0.25 for p in snapshot.proportions.values())


def test_missing_dimension_treated_as_zero():
    series = series_for({Dimension.CONFIDENCE: 1.0, Dimension.PEOPLE: 1.0})
    snapshot = priority_proportions(series)[0]
    assert snapshot.proportions[Dimension.ENVIRONMENT] == 0.0
    assert snapshot.proportions[Dimension.CONFIDENCE] == 0.5


def test_mixed_companies_rejected():
    series = series_for({Dimension.CONFIDENCE: 1.0}) + series_for(
        {Dimension.PEOPLE: 1.0}, company=OTHER
    )
    with pytest.raises(ValidationError):
        priority_proportions(series)


@settings(max_examples=200)
@given(st.lists(st.floats(min_value=0.01, max_value=2, allow_nan=False),
                min_size=4, max_size=4))
def test_proportions_sum_to_one(scores):
    snapshot = priority_proportions(series_for(dict(zip(Dimension, scores))))[0]
    assert math.isclose(sum(snapshot.proportions.values()), 1.0, abs_tol=1e-9)


# -- correlation -------------------------------------------------------------------


def scores_from_arrays(by_dim: dict[Dimension, list[float]]):
    scores = []
    years = range(2000, 2000 + len(next(iter(by_dim.values()))))
    for dimension, values in by_dim.items():
        for year, value in zip(years, values):
            scores.append(avg(TICKER, year, dimension, value))
    return scores


def test_self_correlation_is_one():
    scores = scores_from_arrays({
        Dimension.CONFIDENCE: [0.0, 1.0, 2.0],
        Dimension.PEOPLE: [2.0, 1.5, 0.5],
    })
    matrix = correlation_matrix(scores)
    assert matrix.value(Dimension.CONFIDENCE, Dimension.CONFIDENCE) == 1.0


def test_perfect_anticorrelation_exact():
    scores = scores_from_arrays({
        Dimension.CONFIDENCE: [0.0, 1.0, 2.0],
        Dimension.ENVIRONMENT: [2.0, 1.0, 0.0],
    })
    matrix = correlation_matrix(scores)
    assert matrix.value(Dimension.CONFIDENCE, Dimension.ENVIRONMENT) == -1.0


def test_constant_series_undefined():
    scores = scores_from_arrays({
        Dimension.CONFIDENCE: [1.0, 1.0, 1.0],
        Dimension.ENVIRONMENT: [0.0, 1.0, 2.0],
    })
    matrix = correlation_matrix(scores)
    assert matrix.value(Dimension.CONFIDENCE, Dimension.ENVIRONMENT) is None
    assert matrix.value(Dimension.CONFIDENCE, Dimension.CONFIDENCE) is None


def test_fewer_than_three_observations_undefined():
    scores = scores_from_arrays({
        Dimension.CONFIDENCE: [0.0, 2.0],
        Dimension.ENVIRONMENT: [2.0, 0.0],
    })
    matrix = correlation_matrix(scores)
    assert matrix.value(Dimension.CONFIDENCE, Dimension.ENVIRONMENT) is None


def test_matrix_symmetric_and_matches_numpy_oracle():
    rng = random.Random(17)
    for _ in range(25):
        data = {d: [rng.uniform(0, 2) for _ in range(20)] for d in Dimension}
        matrix = correlation_matrix(scores_from_arrays(data))
        for a in Dimension:
            for b in Dimension:
                left = matrix.value(a, b)
                right = matrix.value(b, a)
                assert left == right
                expected = float(np.corrcoef(data[a], data[b])[0, 1])
                assert left == pytest.approx(expected, abs=1e-12)


def test_pearson_rejects_unequal_lengths():
    with pytest.raises(ValidationError):
        pearson([1.0, 2.0], [1.0])


# -- rating ranges ------------------------------------------------------------------


def test_constant_scores_collapse_range():
    results = [grade(1.0, year=year) for year in (2020, 2021, 2022)]
    stats = rating_ranges(results)[Dimension.CONFIDENCE].overall
    assert stats.minimum == stats.median == stats.maximum == 1.0


def test_order_statistics_zero_one_two():
    results = [grade(score, year=2020 + i) for i, score in enumerate((0.0, 1.0, 2.0))]
    stats = rating_ranges(results)[Dimension.CONFIDENCE].overall
    assert (stats.minimum, stats.median, stats.maximum) == (0.0, 1.0, 2.0)
    assert stats.q1 == 0.5 and stats.q3 == 1.5  # linear interpolation


def test_empty_dimension_marked_empty():
    summary = rating_ranges([grade(1.0)])
    assert summary[Dimension.PEOPLE].overall is None


def test_per_mode_distributions_separate():
    results = [grade(0.0), grade(2.0, mode=GraderMode.STRICT)]
    by_mode = rating_ranges(results)[Dimension.CONFIDENCE].by_mode
    assert by_mode[GraderMode.NORMAL].maximum == 0.0
    assert by_mode[GraderMode.STRICT].minimum == 2.0


def test_range_stats_against_numpy_percentiles():
    rng = random.Random(3)
    values = [rng.uniform(0, 2) for _ in range(37)]
    stats = range_stats(values)
    assert stats.q1 == pytest.approx(float(np.percentile(values, 25)), abs=1e-12)
    assert stats.median == pytest.approx(float(np.percentile(values, 50)), abs=1e-12)
    assert stats.q3 == pytest.approx(float(np.percentile(values, 75)), abs=1e-12)


# -- aggregation helpers ---------------------------------------------------------------


def test_averaged_scores_pairs_modes():
    results = [
        grade(1.0),
        grade(2.0, mode=GraderMode.STRICT),
        grade(0.5, dimension=Dimension.PEOPLE),
    ]
    averaged = averaged_scores(results)
    by_dim = {a.dimension: a for a in averaged}
    assert by_dim[Dimension.CONFIDENCE].score == 1.5
    assert by_dim[Dimension.PEOPLE].single_mode


def test_rating_series_grouping():
    averaged = [
        avg(TICKER, 2020, Dimension.CONFIDENCE, 1.0),
        avg(TICKER, 2021, Dimension.CONFIDENCE, 2.0),
        avg(TICKER, 2020, Dimension.PEOPLE, 0.5),
    ]
    series = rating_series(averaged)
    confidence = next(s for s in series if s.dimension is Dimension.CONFIDENCE)
    assert confidence.points == {2020: 1.0, 2021: 2.0}


def test_report_tables_schema():
    results = [grade(1.0), grade(2.0, mode=GraderMode.STRICT)]
    tables = report_tables(results)
    assert set(tables) == {"ratings", "proportions", "correlations", "wins"}
    header, rows = tables["ratings"]
    assert header == ["company", "year", "dimension", "mode", "score"]
    assert len(rows) == 2
    header, rows = tables["proportions"]
    assert header == ["company", "year", "dimension", "fraction"]
    assert len(rows) == 4  # one row per dimension for the single year
