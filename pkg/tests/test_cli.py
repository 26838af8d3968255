"""CLI: subcommands, exit codes, machine-readable output."""

from __future__ import annotations

import csv
import io
import json
import os
import re
import signal
import subprocess
import sys
from pathlib import Path

import pytest

from tenkscore.cli import main

from conftest import TABLE2_ROWS, TEST_USER_AGENT, build_fixture_cache


@pytest.fixture()
def workdir(tmp_path) -> dict:
    cache = build_fixture_cache(tmp_path / "cache")
    return {
        "cache": cache,
        "data": tmp_path / "data",
        "out": tmp_path / "out",
    }


def run_cli(workdir, *args: str, capsys=None) -> tuple[int, str]:
    argv = [
        "--cache-dir", str(workdir["cache"]),
        "--data-dir", str(workdir["data"]),
        "--user-agent", TEST_USER_AGENT,
        "--offline",
        *args,
    ]
    code = main(argv)
    output = capsys.readouterr().out if capsys else ""
    return code, output


def last_json(output: str) -> dict:
    return json.loads(output)


# -- parse ------------------------------------------------------------------------


def test_parse_writes_table2_rows_to_csv(workdir, capsys, tmp_path):
    out_csv = tmp_path / "out.csv"
    code, output = run_cli(
        workdir, "parse", "RGLD", "--year", "2023", "--csv", str(out_csv), capsys=capsys
    )
    assert code == 0
    rows = [tuple(row) for row in csv.reader(io.StringIO(out_csv.read_text()))][1:]
    business = [row for row in rows if row[0] == "BUSINESS"]
    assert business[:3] == TABLE2_ROWS


def test_parse_unknown_year_fails_validation(workdir, capsys):
    code, _ = run_cli(workdir, "parse", "RGLD", "--year", "1999", capsys=capsys)
    assert code == 1


def test_parse_json_summary(workdir, capsys):
    code, output = run_cli(workdir, "parse", "IBM", "--json", capsys=capsys)
    assert code == 0
    summary = last_json(output)
    assert summary["fiscal_year"] == 2023
    assert summary["unknown_narrative_ratio"] <= 0.2
    assert len(summary["sections"]) >= 8


def test_parse_writes_isd(workdir, capsys, tmp_path):
    isd = tmp_path / "rgld.ndjson"
    code, _ = run_cli(workdir, "parse", "RGLD", "--isd", str(isd), capsys=capsys)
    assert code == 0
    first = json.loads(isd.read_text().split("\n")[0])
    assert first["company"] == "RGLD"


# -- grade -------------------------------------------------------------------------


def test_grade_stub_produces_eight_grades(workdir, capsys):
    code, output = run_cli(
        workdir, "grade", "RGLD", "--provider", "stub", "--json", capsys=capsys
    )
    assert code == 0
    payload = last_json(output)
    assert payload["grades"] == 8
    assert payload["provider_calls"] > 0
    assert set(payload["ratings"]) == {"confidence", "environment", "innovation", "people"}
    assert all(points == {"2023": 1.0} for points in payload["ratings"].values())


def test_grade_rerun_issues_zero_provider_calls(workdir, capsys):
    code, _ = run_cli(workdir, "grade", "RGLD", "--provider", "stub", capsys=capsys)
    assert code == 0
    code, output = run_cli(
        workdir, "grade", "RGLD", "--provider", "stub", "--json", capsys=capsys
    )
    assert code == 0
    payload = last_json(output)
    assert payload["provider_calls"] == 0
    assert payload["reused_years"] == [2023]


def test_grade_unknown_ticker_message(workdir, capsys):
    code = main([
        "--cache-dir", str(workdir["cache"]),
        "--data-dir", str(workdir["data"]),
        "--user-agent", TEST_USER_AGENT,
        "--offline",
        "grade", "ZZZZNOTRL",
    ])
    captured = capsys.readouterr()
    assert code == 1
    assert "ZZZZNOTRL" in captured.err


def test_grade_exclude_option(workdir, capsys):
    code, output = run_cli(
        workdir,
        "grade", "RGLD",
        "--exclude", "ITEM_8_FINANCIAL_STATEMENTS",
        "--provider", "stub",
        "--json",
        capsys=capsys,
    )
    assert code == 0
    assert last_json(output)["grades"] == 8


def test_grade_bad_flag_usage_error(workdir, capsys):
    code = main([
        "--user-agent", TEST_USER_AGENT,
        "--offline",
        "grade", "RGLD", "--no-such-flag",
    ])
    captured = capsys.readouterr()
    assert code == 1
    assert "--no-such-flag" in captured.err


def test_grade_scripted_means_with_sequential_concurrency(workdir, capsys):
    code, output = run_cli(
        workdir,
        "grade", "RGLD",
        "--provider", "stub",
        "--stub-script", "2,1",
        "--max-concurrency", "1",
        "--json",
        capsys=capsys,
    )
    assert code == 0
    payload = last_json(output)
    # One chunk per (dimension, mode): answers alternate 2,1 across the 8
    # sequential calls, so every dimension averages (2+1)/2.
    assert all(points == {"2023": 1.5} for points in payload["ratings"].values())


# -- compare -----------------------------------------------------------------------


def test_compare_single_shot_mode_records_wins(workdir, capsys):
    # One rotation (the paper's single-query mode): slot B always holds the
    # second entrant, so a constant "B" answer hands IBM every win.
    code, output = run_cli(
        workdir,
        "compare", "RGLD", "IBM", "AAPL",
        "--provider", "stub", "--stub-script", "B",
        "--rotations", "1",
        "--json",
        capsys=capsys,
    )
    assert code == 0
    payload = last_json(output)
    assert payload["comparisons"] == 6
    assert payload["totals"] == {"IBM": 6}


def test_compare_positional_stub_all_inconclusive(workdir, capsys):
    code, output = run_cli(
        workdir,
        "compare", "RGLD", "IBM", "AAPL",
        "--provider", "stub", "--stub-script", "A",
        "--json",
        capsys=capsys,
    )
    assert code == 0
    payload = last_json(output)
    assert payload["inconclusive"] == 6
    assert payload["totals"] == {}


def test_compare_requires_distinct_tickers(workdir, capsys):
    code, _ = run_cli(workdir, "compare", "RGLD", "RGLD", "AAPL", capsys=capsys)
    assert code == 1


# -- report ------------------------------------------------------------------------


def test_report_writes_four_csvs(workdir, capsys):
    run_cli(workdir, "grade", "RGLD", "--provider", "stub", capsys=capsys)
    code, output = run_cli(
        workdir, "report", "RGLD", "--out", str(workdir["out"]), "--json", capsys=capsys
    )
    assert code == 0
    names = {Path(p).name for p in last_json(output)["files"]}
    assert names == {"ratings.csv", "proportions.csv", "correlations.csv", "wins.csv"}
    ratings = (workdir["out"] / "ratings.csv").read_text().splitlines()
    assert ratings[0] == "company,year,dimension,mode,score"
    assert len(ratings) == 9  # header + 8 grade rows


def test_report_without_grades_fails_validation(workdir, capsys):
    code, _ = run_cli(workdir, "report", "RGLD", capsys=capsys)
    assert code == 1


# -- serve -------------------------------------------------------------------------


def test_serve_port_zero_prints_ephemeral_port(workdir):
    env = dict(os.environ)
    env["EDGAR_USER_AGENT"] = TEST_USER_AGENT
    process = subprocess.Popen(
        [
            sys.executable, "-m", "tenkscore.cli",
            "--cache-dir", str(workdir["cache"]),
            "--data-dir", str(workdir["data"]),
            "--offline",
            "serve", "--port", "0",
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        env=env,
        text=True,
    )
    try:
        line = process.stdout.readline()
        match = re.match(r"listening on http://127\.0\.0\.1:(\d+)", line)
        assert match, f"unexpected first line: {line!r}"
        assert int(match.group(1)) > 0
    finally:
        process.send_signal(signal.SIGINT)
        try:
            process.wait(timeout=10)
        except subprocess.TimeoutExpired:
            process.kill()
