"""Convert raw 10-K HTML into an ordered, classified, section-tagged stream.

The output mirrors the intermediate representation used downstream: a list
of typed text elements in document order, each tagged with the 10-K item
it belongs to, exportable to the ``Section,Element Type,Text`` CSV schema.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from html.parser import HTMLParser
from pathlib import Path

from . import SCHEMA_VERSION
from .edgar import Ticker
from .errors import EmptyDocument, NoSectionsFound, NotHtml, ValidationError, YearNotFound
from .sections import UNKNOWN, SectionLabel, by_id, for_item


class ElementType(Enum):
    NARRATIVE_TEXT = "NarrativeText"
    TITLE = "Title"
    LIST_ITEM = "ListItem"
    TABLE = "Table"
    PAGE_BREAK = "PageBreak"
    UNCATEGORIZED = "Uncategorized"


@dataclass(frozen=True)
class FilingElement:
    """One classified block of text from a filing."""

    ordinal: int
    element_type: ElementType
    text: str
    section: SectionLabel = UNKNOWN


@dataclass
class SectionedFiling:
    """A filing's ordered elements with section tags (the structured doc)."""

    company: Ticker
    fiscal_year: int
    elements: list[FilingElement] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 1993 <= self.fiscal_year <= date.today().year + 1:
            raise ValidationError(f"implausible fiscal year: {self.fiscal_year}")

    def narrative_elements(
        self, excluded_sections: set[SectionLabel] | None = None
    ) -> list[FilingElement]:
        excluded = excluded_sections or set()
        return [
            element
            for element in self.elements
            if element.element_type is ElementType.NARRATIVE_TEXT
            and element.section not in excluded
        ]

    def unknown_narrative_ratio(self) -> float:
        """Share of narrative characters left untagged (quality metric)."""
        total = 0
        unknown = 0
        for element in self.narrative_elements():
            total += len(element.text)
            if element.section is UNKNOWN:
                unknown += len(element.text)
        return unknown / total if total else 0.0


# -- HTML partitioning -------------------------------------------------------

_SKIP_SUBTREES = {"script", "style", "head", "noscript", "ix:header"}
_HEADING_TAGS = {"h1", "h2", "h3", "h4", "h5", "h6"}
_FLUSH_TAGS = _HEADING_TAGS | {
    "p",
    "div",
    "li",
    "ul",
    "ol",
    "dl",
    "dt",
    "dd",
    "blockquote",
    "pre",
    "section",
    "article",
    "center",
    "table",
    "tr",
    "hr",
    "br",
    "body",
}


class _Partitioner(HTMLParser):
    """Emit (text, markup_hint) blocks in document order.

    Text accumulates until a block boundary; inside tables the boundary is
    the row, so a table-of-contents row like ``Item 1. | Business | 3``
    comes out as one element.
    """

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.blocks: list[tuple[str, str]] = []
        self.saw_markup = False
        self._buffer: list[str] = []
        self._skip_depth = 0
        self._table_depth = 0
        self._heading_depth = 0
        self._list_depth = 0

    def handle_starttag(self, tag, attrs):
        self.saw_markup = True
        if tag in _SKIP_SUBTREES:
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        if tag in _HEADING_TAGS:
            self._flush()
            self._heading_depth += 1
        elif tag == "li":
            self._flush()
            self._list_depth += 1
        elif tag == "table":
            self._flush()
            self._table_depth += 1
        elif tag in ("td", "th"):
            self._buffer.append(" ")
        elif tag in _FLUSH_TAGS:
            if self._table_depth:
                self._buffer.append(" ")
            else:
                self._flush()

    def handle_endtag(self, tag):
        if tag in _SKIP_SUBTREES:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth:
            return
        if tag in _HEADING_TAGS:
            self._flush()
            self._heading_depth = max(0, self._heading_depth - 1)
        elif tag == "li":
            self._flush()
            self._list_depth = max(0, self._list_depth - 1)
        elif tag == "table":
            self._flush()
            self._table_depth = max(0, self._table_depth - 1)
        elif tag == "tr":
            self._flush()
        elif tag in ("td", "th"):
            self._buffer.append(" ")
        elif tag in _FLUSH_TAGS:
            if self._table_depth:
                self._buffer.append(" ")
            else:
                self._flush()

    def handle_startendtag(self, tag, attrs):
        self.saw_markup = True
        if self._skip_depth:
            return
        if tag in ("br", "hr"):
            self._flush()

    def handle_data(self, data):
        if not self._skip_depth and data:
            self._buffer.append(data)

    def close(self):
        super().close()
        self._flush()

    def _hint(self) -> str:
        if self._heading_depth:
            return "heading"
        if self._table_depth:
            return "table"
        if self._list_depth:
            return "list"
        return "paragraph"

    def _flush(self) -> None:
        text = normalize_whitespace("".join(self._buffer))
        self._buffer.clear()
        if text:
            self.blocks.append((text, self._hint()))


def normalize_whitespace(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    text = text.replace("​", "").replace("﻿", "")
    return re.sub(r"\s+", " ", text).strip()


def decode_html(raw: bytes) -> str:
    """UTF-8 with a Latin-1 fallback for pre-2001 EDGAR documents."""
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def partition_html(raw: bytes) -> list[FilingElement]:
    """Split raw filing HTML into ordered, classified elements.

    Script/style/XBRL-header content is dropped; all sections start as
    UNKNOWN until :func:`assign_sections` runs.
    """
    html = decode_html(raw)
    parser = _Partitioner()
    parser.feed(html)
    parser.close()
    if not parser.saw_markup:
        raise NotHtml("input contains no parseable markup")
    elements = [
        FilingElement(ordinal, classify_element(text, hint), text)
        for ordinal, (text, hint) in enumerate(parser.blocks)
    ]
    if not elements:
        raise EmptyDocument("no text content after partitioning")
    return elements


# -- Element classification --------------------------------------------------

# Closed lexicon of common verbs (auxiliaries, modals, irregulars, and the
# base forms that dominate filing prose). Inflected forms are covered by the
# -ed/-ing/-s suffix rule in classify_element.
VERB_LEXICON = frozenset(
    """
    accept achieve acquire add address adjust adopt advance affect agree aim
    allow am analyze announce anticipate appear apply approve are arise assess
    assume assure attract avoid be bear became become been began begin believe
    benefit bought bring brought build built buy came can carry cause change
    choose chose collect come commit compare compete complete comply conduct
    consider consist contain continue contribute control convert cost could
    create decide decline decrease deliver demand depend derive design
    determine develop did differ direct disclose discuss distribute do does
    drive drove earn employ enable encounter end engage enhance ensure enter
    establish estimate evaluate evolve exceed execute exercise exist expand
    expect experience expire explore export expose express extend face fail
    fall feel fell felt file finance find focus follow forecast form found
    fund gain gave generate get give go gone got grew grow had has have hear
    heard held help hold identify impact implement import improve include
    increase incur indicate influence initiate innovate integrate intend
    introduce invest involve is issue keep kept knew know launch lead learn
    lease leave led left lend let leverage license lie limit locate lose lost
    made maintain make manage manufacture may mean meant measure meet met
    might mitigate modify monitor must need note obtain occur offer operate
    own paid participate pay perform plan position possess present preserve
    prevent price produce promote propose protect prove provide pursue put
    raise ran range reach read realize receive recognize record recover
    reduce refer reflect regard relate release rely remain renew report
    represent require reserve resolve respond restructure result retain
    return review rise rose run said sat satisfy saw say see seek seem sell
    send sent serve set settle shall shift should show shown sold sought
    speak spend spent spoke stand start state stood strengthen strive
    sublease submit succeed suffer supply support sustain take taken tend
    terminate test think thought took trade transfer transform translate
    undertake underwrite update upgrade use utilize value vary view want was
    were will win won work would write wrote yield
    """.split()
)

_ITEM_HEADING_RE = re.compile(r"(?i)^item\s+(\d{1,2})([abc])?\b")
_PAGE_NUMBER_RE = re.compile(r"(?i)^(\d{1,4}|[ivxlcdm]{1,7})$")
_WORD_RE = re.compile(r"[A-Za-z]")


def classify_element(text: str, markup_hint: str = "paragraph") -> ElementType:
    """Deterministic element typing from markup role plus a POS-lite check.

    Narrative text needs verb evidence (lexicon hit, or an -ed/-ing/-s
    suffix on a lowercase token), a proper-noun ratio at most 0.5, a
    mostly-alphabetic character mix, and either 5 tokens or a sentence
    terminator.
    """
    if markup_hint == "heading":
        return ElementType.TITLE
    if markup_hint == "list":
        return ElementType.LIST_ITEM
    if markup_hint == "table":
        return ElementType.TABLE

    tokens = text.split()
    if _ITEM_HEADING_RE.match(text) and len(tokens) <= 24:
        return ElementType.TITLE
    if _is_narrative(text, tokens):
        return ElementType.NARRATIVE_TEXT
    if _PAGE_NUMBER_RE.match(text):
        return ElementType.PAGE_BREAK
    if _looks_like_title(text, tokens):
        return ElementType.TITLE
    return ElementType.UNCATEGORIZED


def _is_narrative(text: str, tokens: list[str]) -> bool:
    if len(tokens) < 5 and not any(c in ".!?" for c in text):
        return False
    non_space = text.replace(" ", "")
    alpha_ratio = sum(c.isalpha() for c in non_space) / max(1, len(non_space))
    if alpha_ratio < 0.5:
        return False
    verb_evidence = 0
    proper_count = 0
    sentence_start = True
    for token in tokens:
        word = token.strip(".,;:!?()[]\"'“”’")
        if not word:
            sentence_start = token.endswith((".", "!", "?"))
            continue
        if word[0].isupper():
            if not sentence_start:
                proper_count += 1
        else:
            lowered = word.lower()
            if lowered in VERB_LEXICON or lowered.endswith(("ed", "ing")) or (
                lowered.endswith("s") and len(lowered) > 3
            ):
                verb_evidence += 1
        sentence_start = token.endswith((".", "!", "?"))
    proper_ratio = proper_count / len(tokens)
    return verb_evidence >= 1 and proper_ratio <= 0.5


def _looks_like_title(text: str, tokens: list[str]) -> bool:
    if not tokens or len(tokens) > 16:
        return False
    if not _WORD_RE.search(text):
        return False
    if text.isupper():
        return True
    alpha_tokens = [token for token in tokens if token[0].isalpha()]
    if not alpha_tokens:
        return False
    capitalized = sum(token[0].isupper() for token in alpha_tokens)
    return capitalized / len(alpha_tokens) >= 0.5


# -- Fiscal year extraction ---------------------------------------------------

_FISCAL_YEAR_RES = (
    re.compile(
        r"(?i)for\s+the\s+(?:fiscal\s+|annual\s+)?year\s+end(?:ed|ing)\s+"
        r"(?:[A-Za-z]+\s+\d{1,2}\s*,?\s+)?(\d{4})"
    ),
    re.compile(r"(?i)fiscal\s+year\s+end(?:ed|ing)\s+(?:[A-Za-z]+\s+\d{1,2}\s*,?\s+)?(\d{4})"),
    re.compile(r"(?i)annual\s+report.{0,120}?\b((?:19|20)\d{2})\b"),
)

_YEAR_SCAN_LIMIT = 200


def extract_fiscal_year(elements: list[FilingElement]) -> int:
    """Reporting year from the cover-page period statement."""
    for element in elements[:_YEAR_SCAN_LIMIT]:
        for pattern in _FISCAL_YEAR_RES:
            match = pattern.search(element.text)
            if match:
                year = int(match.group(1))
                if 1993 <= year <= date.today().year + 1:
                    return year
    raise YearNotFound("no reporting-period statement matched")


def fiscal_year_from_filing_date(filing_date: date) -> int:
    """Fallback when the document states no period: 10-Ks filed in the
    first half of a year report on the prior year."""
    return filing_date.year - 1 if filing_date.month <= 6 else filing_date.year


# -- Section location ----------------------------------------------------------

_MAX_CANDIDATE_CHARS = 200


def locate_sections(
    elements: list[FilingElement],
) -> list[tuple[SectionLabel, int]]:
    """Find the start ordinal of each 10-K item present in the document.

    Candidate headings come from table-of-contents rows and from
    title-like elements matching the item pattern; because items echo in
    the TOC before the body, the selection keeps the latest occurrence
    set that is ordinal-monotone and covers the most items.
    """
    candidates: list[tuple[SectionLabel, int]] = []
    for element in elements:
        if (
            element.element_type is not ElementType.TITLE
            and len(element.text) > _MAX_CANDIDATE_CHARS
        ):
            continue
        match = _ITEM_HEADING_RE.match(element.text)
        if not match:
            continue
        label = for_item(int(match.group(1)), match.group(2) or "")
        if label is not None:
            candidates.append((label, element.ordinal))

    starts = _best_monotone_cover(candidates)
    if len(starts) < 2:
        raise NoSectionsFound(f"only {len(starts)} item heading(s) detected")
    return starts


def _best_monotone_cover(
    candidates: list[tuple[SectionLabel, int]]
) -> list[tuple[SectionLabel, int]]:
    """Pick one ordinal per item so item order and ordinals both increase,
    maximizing items covered and then total ordinal (prefers body headings
    over their earlier TOC echoes)."""
    pairs = sorted(candidates, key=lambda pair: (pair[0].sort_key, pair[1]))
    n = len(pairs)
    best_count = [1] * n
    best_sum = [pairs[i][1] for i in range(n)]
    parent = [-1] * n
    for j in range(n):
        for i in range(j):
            if pairs[i][0] == pairs[j][0]:
                continue
            if pairs[i][0].sort_key >= pairs[j][0].sort_key:
                continue
            if pairs[i][1] >= pairs[j][1]:
                continue
            count = best_count[i] + 1
            total = best_sum[i] + pairs[j][1]
            if count > best_count[j] or (count == best_count[j] and total > best_sum[j]):
                best_count[j] = count
                best_sum[j] = total
                parent[j] = i
    if n == 0:
        return []
    end = max(range(n), key=lambda j: (best_count[j], best_sum[j]))
    chain: list[tuple[SectionLabel, int]] = []
    while end != -1:
        chain.append(pairs[end])
        end = parent[end]
    chain.reverse()
    return chain


def assign_sections(
    elements: list[FilingElement],
    section_starts: list[tuple[SectionLabel, int]],
    company: Ticker,
    fiscal_year: int,
) -> SectionedFiling:
    """Tag each element with the last section starting at or before it."""
    starts = sorted(section_starts, key=lambda pair: pair[1])
    tagged: list[FilingElement] = []
    position = 0
    current = UNKNOWN
    for element in elements:
        while position < len(starts) and starts[position][1] <= element.ordinal:
            current = starts[position][0]
            position += 1
        tagged.append(replace(element, section=current))
    return SectionedFiling(company=company, fiscal_year=fiscal_year, elements=tagged)


# -- Export --------------------------------------------------------------------

CSV_HEADER = "Section,Element Type,Text"


def _csv_field(value: str, always_quote: bool = False) -> str:
    if always_quote or any(c in value for c in ',"\r\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def export_csv(filing: SectionedFiling, narrative_only: bool = False) -> bytes:
    """Render the Section,Element Type,Text table (RFC 4180, UTF-8).

    The text column is always quoted; the other columns only when needed.
    """
    lines = [CSV_HEADER]
    for element in filing.elements:
        if narrative_only and element.element_type is not ElementType.NARRATIVE_TEXT:
            continue
        lines.append(
            ",".join(
                (
                    _csv_field(element.section.display_name),
                    _csv_field(element.element_type.value),
                    _csv_field(element.text, always_quote=True),
                )
            )
        )
    return ("\r\n".join(lines) + "\r\n").encode("utf-8")


# -- Structured-document persistence --------------------------------------------


def write_isd(filing: SectionedFiling, path: Path) -> None:
    """One line-delimited record per element, with a leading header record."""
    records = [
        json.dumps(
            {
                "kind": "header",
                "schema_version": SCHEMA_VERSION,
                "company": filing.company.symbol,
                "fiscal_year": filing.fiscal_year,
            }
        )
    ]
    for element in filing.elements:
        records.append(
            json.dumps(
                {
                    "ordinal": element.ordinal,
                    "element_type": element.element_type.value,
                    "section": element.section.canonical_id,
                    "text": element.text,
                },
                ensure_ascii=False,
            )
        )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(records) + "\n", encoding="utf-8")


def read_isd(path: Path) -> SectionedFiling:
    lines = [
        line for line in path.read_text(encoding="utf-8").split("\n") if line.strip()
    ]
    if not lines:
        raise EmptyDocument(f"empty structured-document file: {path}")
    header = json.loads(lines[0])
    elements = []
    for line in lines[1:]:
        record = json.loads(line)
        elements.append(
            FilingElement(
                ordinal=record["ordinal"],
                element_type=ElementType(record["element_type"]),
                text=record["text"],
                section=by_id(record["section"]),
            )
        )
    return SectionedFiling(
        company=Ticker(header["company"]),
        fiscal_year=header["fiscal_year"],
        elements=elements,
    )
