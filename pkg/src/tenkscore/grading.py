"""Absolute analysis: rubric-driven 0-2 grading of filing narrative.

Each filing year is graded on four dimensions by two grader personas
(normal and strict); long narratives are chunked to fit the provider's
context window and chunk scores are averaged.
"""

from __future__ import annotations

import hashlib
import math
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Protocol, runtime_checkable

from .edgar import Ticker
from .errors import (
    AllChunksFailed,
    NoNarrativeText,
    UnparseableScore,
    ValidationError,
)
from .parsing import SectionedFiling
from .sections import SectionLabel

ABSOLUTE_PROMPT_VERSION = "absolute.v1"

PROMPT_TOKEN_RESERVE = 2000
SCORE_COMPLETION_TOKENS = 16
DEFAULT_CONTEXT_WINDOW = 128_000
DEFAULT_CONCURRENCY = 4

_SCORE_RETRIES = 2

SCALE_ANCHOR = "You should give the text a decimal numeric grade between 0 and 2."
ANSWER_LINE = "Answer only with a decimal number in the 0-2 range."

STRICT_PHRASE = (
    "You are an especially strict grader. Award high grades only when the "
    "text fully and explicitly satisfies the criterion; when in doubt, "
    "grade lower."
)

_BASE_PROMPT = (
    "You are an AI grader that, given an output and a criterion, grades the "
    "completion based on the prompt and criterion. Below is a prompt, a "
    "completion, and a criterion with which to grade the completion. You "
    "need to respond according to the criterion instructions. For reference, "
    "these are documents from the year {year}.{strict_slot}\n\n"
    "Output: {narrative}\n\n"
    "Criterion: {criterion}"
)


class Dimension(Enum):
    CONFIDENCE = "confidence"
    ENVIRONMENT = "environment"
    INNOVATION = "innovation"
    PEOPLE = "people"


class GraderMode(Enum):
    NORMAL = "normal"
    STRICT = "strict"


@dataclass(frozen=True)
class Criterion:
    """A 0-2 rubric for one dimension."""

    dimension: Dimension
    rubric_text: str
    scale_min: int = 0
    scale_max: int = 2

    def __post_init__(self) -> None:
        if SCALE_ANCHOR not in self.rubric_text:
            raise ValidationError("rubric must state the 0-2 decimal grading scale")


CRITERIA: dict[Dimension, Criterion] = {
    Dimension.CONFIDENCE: Criterion(
        Dimension.CONFIDENCE,
        "## Criterion\n"
        "You should give the text a decimal numeric grade between 0 and 2.\n"
        "2. The text is confident about robust growth and of greater returns "
        "next financial year.\n"
        "1. Text in this category gives strong likelihood of company "
        "stability, but is either relatively unsure about future growth or "
        "not confident about it.\n"
        "0. Text in this category shows that the company is not very robust, "
        "uncertain about its future, and most importantly, shows "
        "inconsistent and bad finances.\n"
        "Answer only with a decimal number in the 0-2 range.",
    ),
    Dimension.ENVIRONMENT: Criterion(
        Dimension.ENVIRONMENT,
        "## Criterion\n"
        "You should give the text a decimal numeric grade between 0 and 2.\n"
        "2. The text offers actionable plans relating to environment and "
        "sustainability and includes sustainability as a central goal.\n"
        "1. Text in this category mentions commitments to sustainability and "
        "environment, but doesn't offer many actionable plans for the same.\n"
        "0. Text in this category doesn't mention the environment and "
        "sustainability at all.\n"
        "Answer only with a decimal number in the 0-2 range.",
    ),
    Dimension.INNOVATION: Criterion(
        Dimension.INNOVATION,
        "## Criterion\n"
        "You should give the text a decimal numeric grade between 0 and 2.\n"
        "2. The text shows future plans as well as actions that the company "
        "has taken towards greater innovation in its operations. It also "
        "mentions a working R&D unit.\n"
        "1. Text mentions commitment to improve its practices and "
        "operations, and mentions innovation. However, there is little to no "
        "work done for the same in this current document.\n"
        "0. Text emphasizes continuing its operations next year in the same "
        "manner, without any new innovations.\n"
        "Answer only with a decimal number in the 0-2 range.",
    ),
    Dimension.PEOPLE: Criterion(
        Dimension.PEOPLE,
        "## Criterion\n"
        "You should give the text a decimal numeric grade between 0 and 2.\n"
        "2. The text acknowledges the importance of people and talent in "
        "driving the company forward. It also mentions actionable plans to "
        "attract new talent and ensure employee welfare.\n"
        "1. Text mentions importance of people and talent to its operations "
        "but doesn't mention any employee welfare activities.\n"
        "0. Text makes no mention of employee welfare and importance of "
        "people talent.\n"
        "Answer only with a decimal number in the 0-2 range.",
    ),
}


@runtime_checkable
class CompletionProvider(Protocol):
    """Anything that can turn a prompt into completion text."""

    context_window_tokens: int

    def complete(
        self, prompt: str, max_output_tokens: int, temperature: float
    ) -> str: ...


@dataclass(frozen=True)
class GradeResult:
    """One grader verdict for (company, year, dimension, mode)."""

    company: Ticker
    fiscal_year: int
    dimension: Dimension
    mode: GraderMode
    score: float
    chunk_scores: tuple[float, ...]
    prompt_hash: str
    raw_completion: str
    failed_chunks: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.chunk_scores:
            raise ValidationError("chunk_scores must be nonempty")
        if not 0 <= self.score <= 2:
            raise ValidationError(f"score out of range: {self.score}")
        mean = sum(self.chunk_scores) / len(self.chunk_scores)
        if not math.isclose(self.score, mean, rel_tol=1e-9, abs_tol=1e-12):
            raise ValidationError(
                f"score {self.score} is not the mean of chunk_scores ({mean})"
            )


def build_absolute_prompt(
    narrative: str, criterion: Criterion, year: int, mode: GraderMode
) -> str:
    """Instantiate the absolute-analysis prompt template.

    Exact string interpolation: the strict phrase is the only difference
    between the two grader modes.
    """
    if not narrative:
        raise ValidationError("narrative must be nonempty")
    strict_slot = f" {STRICT_PHRASE}" if mode is GraderMode.STRICT else ""
    return _BASE_PROMPT.format(
        year=year,
        strict_slot=strict_slot,
        narrative=narrative,
        criterion=criterion.rubric_text,
    )


def estimate_tokens(text: str) -> int:
    """Provider-agnostic token estimate (4 characters per token)."""
    return max(1, math.ceil(len(text) / 4))


_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    return [part for part in _SENTENCE_SPLIT_RE.split(text) if part]


def truncate_to_tokens(text: str, token_budget: int) -> str:
    """Cut text at a sentence boundary so it fits the token budget."""
    if estimate_tokens(text) <= token_budget:
        return text
    char_budget = token_budget * 4
    kept: list[str] = []
    used = 0
    for sentence in split_sentences(text):
        cost = len(sentence) + (1 if kept else 0)
        if used + cost > char_budget:
            break
        kept.append(sentence)
        used += cost
    if not kept:
        return text[:char_budget]
    return " ".join(kept)


@dataclass(frozen=True)
class NarrativeChunk:
    """A context-window-sized slice of a filing's narrative."""

    index: int
    texts: tuple[str, ...]

    @property
    def text(self) -> str:
        return "\n\n".join(self.texts)


def chunk_narrative(
    filing: SectionedFiling,
    excluded_sections: set[SectionLabel] | None = None,
    token_budget: int = DEFAULT_CONTEXT_WINDOW,
) -> list[NarrativeChunk]:
    """Pack narrative elements into chunks that fit the context window.

    Whole elements are packed greedily in document order; only an element
    that alone exceeds the budget is split, at sentence boundaries.
    """
    if token_budget < 1024:
        raise ValidationError("token_budget must be at least 1024")
    payload_budget = token_budget - PROMPT_TOKEN_RESERVE
    if payload_budget <= 0:
        payload_budget = token_budget // 2

    narrative = filing.narrative_elements(excluded_sections)
    if not narrative:
        raise NoNarrativeText(
            f"no narrative text for {filing.company} FY{filing.fiscal_year}"
        )

    chunks: list[NarrativeChunk] = []
    current: list[str] = []
    current_tokens = 0

    def close_chunk() -> None:
        nonlocal current, current_tokens
        if current:
            chunks.append(NarrativeChunk(index=len(chunks), texts=tuple(current)))
            current = []
            current_tokens = 0

    for element in narrative:
        cost = estimate_tokens(element.text)
        if cost > payload_budget:
            close_chunk()
            for piece in _split_oversized(element.text, payload_budget):
                chunks.append(NarrativeChunk(index=len(chunks), texts=(piece,)))
            continue
        if current and current_tokens + cost > payload_budget:
            close_chunk()
        current.append(element.text)
        current_tokens += cost
    close_chunk()
    return chunks


def _split_oversized(text: str, token_budget: int) -> list[str]:
    char_budget = token_budget * 4
    pieces: list[str] = []
    current: list[str] = []
    used = 0
    for sentence in split_sentences(text):
        while len(sentence) > char_budget:
            if current:
                pieces.append(" ".join(current))
                current, used = [], 0
            pieces.append(sentence[:char_budget])
            sentence = sentence[char_budget:]
        if not sentence:
            continue
        cost = len(sentence) + (1 if current else 0)
        if current and used + cost > char_budget:
            pieces.append(" ".join(current))
            current, used = [], 0
            cost = len(sentence)
        current.append(sentence)
        used += cost
    if current:
        pieces.append(" ".join(current))
    return pieces


_DECIMAL_RE = re.compile(r"\d+(?:\.\d+)?")


def parse_score(completion: str) -> float:
    """First decimal literal in the completion, clamped to [0, 2]."""
    match = _DECIMAL_RE.search(completion)
    if not match:
        raise UnparseableScore(f"no decimal literal in completion: {completion!r}")
    return min(2.0, max(0.0, float(match.group(0))))


def prompt_digest(*prompts: str) -> str:
    digest = hashlib.sha256()
    for prompt in prompts:
        digest.update(prompt.encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


TranscriptSink = Callable[[dict], None]


def grade_dimension(
    filing: SectionedFiling,
    criterion: Criterion,
    mode: GraderMode,
    provider: CompletionProvider,
    excluded_sections: set[SectionLabel] | None = None,
    transcript_sink: TranscriptSink | None = None,
) -> GradeResult:
    """Grade every narrative chunk against one criterion and average.

    Unparseable completions are retried twice with an appended reminder;
    chunks that still fail are dropped and flagged on the result.
    """
    chunks = chunk_narrative(
        filing, excluded_sections, token_budget=provider.context_window_tokens
    )
    chunk_scores: list[float] = []
    completions: list[str] = []
    prompts: list[str] = []
    failed: list[int] = []
    for chunk in chunks:
        prompt = build_absolute_prompt(chunk.text, criterion, filing.fiscal_year, mode)
        prompts.append(prompt)
        score, completion = _score_chunk(prompt, provider)
        if transcript_sink is not None:
            transcript_sink(
                {
                    "company": filing.company.symbol,
                    "fiscal_year": filing.fiscal_year,
                    "dimension": criterion.dimension.value,
                    "mode": mode.value,
                    "chunk_index": chunk.index,
                    "prompt_hash": prompt_digest(prompt),
                    "raw_completion": completion,
                    "score": score,
                }
            )
        if score is None:
            failed.append(chunk.index)
            continue
        chunk_scores.append(score)
        completions.append(completion)
    if not chunk_scores:
        raise AllChunksFailed(
            f"no chunk produced a parseable score for {criterion.dimension.value}/{mode.value}"
        )
    return GradeResult(
        company=filing.company,
        fiscal_year=filing.fiscal_year,
        dimension=criterion.dimension,
        mode=mode,
        score=sum(chunk_scores) / len(chunk_scores),
        chunk_scores=tuple(chunk_scores),
        prompt_hash=prompt_digest(*prompts),
        raw_completion="\n".join(completions),
        failed_chunks=tuple(failed),
    )


def _score_chunk(
    prompt: str, provider: CompletionProvider
) -> tuple[float | None, str]:
    attempt_prompt = prompt
    completion = ""
    for _ in range(1 + _SCORE_RETRIES):
        completion = provider.complete(
            attempt_prompt, max_output_tokens=SCORE_COMPLETION_TOKENS, temperature=0.0
        )
        try:
            return parse_score(completion), completion
        except UnparseableScore:
            attempt_prompt = attempt_prompt + "\n" + ANSWER_LINE
    return None, completion


@dataclass
class FilingGradeReport:
    """All grades for one filing year, with per-pair failures isolated."""

    company: Ticker
    fiscal_year: int
    results: list[GradeResult] = field(default_factory=list)
    failures: dict[tuple[Dimension, GraderMode], str] = field(default_factory=dict)


def grade_filing(
    filing: SectionedFiling,
    provider: CompletionProvider,
    excluded_sections: set[SectionLabel] | None = None,
    criteria: dict[Dimension, Criterion] | None = None,
    concurrency: int = DEFAULT_CONCURRENCY,
    transcript_sink: TranscriptSink | None = None,
) -> FilingGradeReport:
    """Run all (dimension, mode) graders for one filing.

    A failing pair is recorded in the report without disturbing siblings.
    """
    criteria = criteria or CRITERIA
    report = FilingGradeReport(company=filing.company, fiscal_year=filing.fiscal_year)
    pairs = [
        (dimension, mode) for dimension in criteria for mode in GraderMode
    ]
    sink_lock = threading.Lock()

    def locked_sink(record: dict) -> None:
        if transcript_sink is not None:
            with sink_lock:
                transcript_sink(record)

    def run_pair(pair: tuple[Dimension, GraderMode]):
        dimension, mode = pair
        return grade_dimension(
            filing,
            criteria[dimension],
            mode,
            provider,
            excluded_sections,
            transcript_sink=locked_sink if transcript_sink else None,
        )

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        futures = {pair: pool.submit(run_pair, pair) for pair in pairs}
    for pair, future in futures.items():
        try:
            report.results.append(future.result())
        except Exception as exc:
            report.failures[pair] = str(exc)
    return report
