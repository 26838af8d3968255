"""Relative analysis: three-way excerpt comparisons with rotation.

One comparison pits the same section from three companies against each
other. LLM judges favor earlier slots, so each task is submitted under
all cyclic rotations of the entrants and a winner needs a majority of
conclusive rotations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .edgar import Ticker
from .errors import ProviderFailure, ValidationError
from .grading import CompletionProvider, PROMPT_TOKEN_RESERVE, prompt_digest, truncate_to_tokens
from .sections import SectionLabel

COMPARISON_PROMPT_VERSION = "comparison.v1"

VERDICT_COMPLETION_TOKENS = 8
ROTATIONS = ((0, 1, 2), (1, 2, 0), (2, 0, 1))

_COMPARISON_PROMPT = (
    "You are an AI grader that, given an output and a criterion, grades the "
    "completion based on the prompt and criterion. Below \"Excerpt A\", "
    "\"Excerpt B\", and \"Excerpt C\", you must compare all excerpts and "
    "output which excerpt is better.\n\n"
    "## Excerpt A\n{excerpt_a}\n\n"
    "## Excerpt B\n{excerpt_b}\n\n"
    "## Excerpt C\n{excerpt_c}\n\n"
    "## Criterion\n"
    "Do not focus on the grammar; instead, focus on the overall future plan "
    "and robust explainability.\n\n"
    "[Answer with either \"A\", \"B\", or \"C\"]\n"
    "A. If Excerpt A is the best, detailed, transparent with robust financials.\n"
    "B. If Excerpt B is the best, detailed, transparent with robust financials.\n"
    "C. If Excerpt C is the best, detailed, transparent with robust financials."
)


class Verdict(Enum):
    A = "A"
    B = "B"
    C = "C"
    INCONCLUSIVE = "Inconclusive"


_SLOT_INDEX = {Verdict.A: 0, Verdict.B: 1, Verdict.C: 2}


@dataclass(frozen=True)
class ComparisonTask:
    """Three companies' excerpts from the same section and year."""

    section: SectionLabel
    fiscal_year: int
    entrants: tuple[tuple[Ticker, str], ...]

    def __post_init__(self) -> None:
        if len(self.entrants) != 3:
            raise ValidationError("a comparison needs exactly 3 entrants")
        if any(not excerpt for _, excerpt in self.entrants):
            raise ValidationError("all excerpts must be nonempty")

    @property
    def tickers(self) -> tuple[Ticker, Ticker, Ticker]:
        return tuple(ticker for ticker, _ in self.entrants)  # type: ignore[return-value]


@dataclass(frozen=True)
class RotationOutcome:
    """What one rotated submission returned."""

    ordering: tuple[int, int, int]
    verdict: Verdict
    winner_index: int | None
    raw_completion: str


@dataclass(frozen=True)
class ComparisonResult:
    section: SectionLabel
    fiscal_year: int
    tickers: tuple[Ticker, Ticker, Ticker]
    rotations: tuple[RotationOutcome, ...]
    winner: Ticker | None

    @property
    def comparison_id(self) -> str:
        names = ",".join(ticker.symbol for ticker in self.tickers)
        return f"{self.section.canonical_id}:{self.fiscal_year}:{names}"


def build_comparison_prompt(excerpts: tuple[str, str, str]) -> str:
    """Instantiate the three-slot comparison template."""
    if len(excerpts) != 3 or any(not excerpt for excerpt in excerpts):
        raise ValidationError("three nonempty excerpts required")
    return _COMPARISON_PROMPT.format(
        excerpt_a=excerpts[0], excerpt_b=excerpts[1], excerpt_c=excerpts[2]
    )


_VERDICT_RE = re.compile(r"(?i)\b([abc])\b")


def parse_verdict(completion: str) -> Verdict:
    """First standalone A/B/C token; anything else is Inconclusive."""
    match = _VERDICT_RE.search(completion)
    if not match:
        return Verdict.INCONCLUSIVE
    return Verdict(match.group(1).upper())


TranscriptSink = Callable[[dict], None]


def run_comparison(
    task: ComparisonTask,
    provider: CompletionProvider,
    rotations: int = 3,
    transcript_sink: TranscriptSink | None = None,
) -> ComparisonResult:
    """Submit a task under cyclic rotations and pick the majority winner.

    Excerpts are truncated to a third of the usable context each. With 3
    rotations an entrant needs at least 2 conclusive wins; a positionally
    biased judge therefore never produces a winner.
    """
    if not 1 <= rotations <= 3:
        raise ValidationError("rotations must be 1, 2, or 3")
    excerpt_budget = max(256, (provider.context_window_tokens - PROMPT_TOKEN_RESERVE) // 3)
    excerpts = tuple(
        truncate_to_tokens(excerpt, excerpt_budget) for _, excerpt in task.entrants
    )

    outcomes: list[RotationOutcome] = []
    errors: list[str] = []
    for ordering in ROTATIONS[:rotations]:
        rotated = tuple(excerpts[entrant] for entrant in ordering)
        prompt = build_comparison_prompt(rotated)  # type: ignore[arg-type]
        try:
            completion = provider.complete(
                prompt,
                max_output_tokens=VERDICT_COMPLETION_TOKENS,
                temperature=0.0,
            )
        except Exception as exc:
            errors.append(str(exc))
            outcomes.append(
                RotationOutcome(ordering, Verdict.INCONCLUSIVE, None, f"<error: {exc}>")
            )
            continue
        verdict = parse_verdict(completion)
        winner_index = (
            ordering[_SLOT_INDEX[verdict]] if verdict is not Verdict.INCONCLUSIVE else None
        )
        outcomes.append(RotationOutcome(ordering, verdict, winner_index, completion))
        if transcript_sink is not None:
            transcript_sink(
                {
                    "section": task.section.canonical_id,
                    "fiscal_year": task.fiscal_year,
                    "ordering": list(ordering),
                    "slots": {
                        slot: task.entrants[entrant][0].symbol
                        for slot, entrant in zip("ABC", ordering)
                    },
                    "prompt_hash": prompt_digest(prompt),
                    "raw_completion": completion,
                    "verdict": verdict.value,
                    "winner": (
                        task.entrants[winner_index][0].symbol
                        if winner_index is not None
                        else None
                    ),
                }
            )
    if len(errors) == len(outcomes):
        raise ProviderFailure(f"all rotations failed: {errors[-1]}")

    wins = [0, 0, 0]
    for outcome in outcomes:
        if outcome.winner_index is not None:
            wins[outcome.winner_index] += 1
    required = 2 if len(outcomes) > 1 else 1
    best = max(range(3), key=lambda entrant: wins[entrant])
    winner = task.entrants[best][0] if wins[best] >= required else None
    return ComparisonResult(
        section=task.section,
        fiscal_year=task.fiscal_year,
        tickers=task.tickers,
        rotations=tuple(outcomes),
        winner=winner,
    )


@dataclass
class WinTable:
    """Aggregated win counts per (company, section)."""

    wins: dict[tuple[Ticker, SectionLabel], int] = field(default_factory=dict)
    inconclusive: int = 0

    def record(self, result: ComparisonResult) -> None:
        if result.winner is None:
            self.inconclusive += 1
            return
        key = (result.winner, result.section)
        self.wins[key] = self.wins.get(key, 0) + 1

    @property
    def totals(self) -> dict[Ticker, int]:
        totals: dict[Ticker, int] = {}
        for (ticker, _), count in self.wins.items():
            totals[ticker] = totals.get(ticker, 0) + count
        return totals


def tally_wins(results: list[ComparisonResult]) -> WinTable:
    """Fold comparison results into a win table."""
    table = WinTable()
    for result in results:
        table.record(result)
    return table
