"""Canonical 10-K section labels (Items 1-16 plus UNKNOWN)."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SectionLabel:
    """One canonical 10-K item, identified by a stable id."""

    canonical_id: str
    display_name: str
    item_number: int
    item_letter: str = ""

    @property
    def sort_key(self) -> tuple[int, str]:
        return (self.item_number, self.item_letter)

    @property
    def item_name(self) -> str:
        return f"Item {self.item_number}{self.item_letter}"

    def __str__(self) -> str:
        return self.canonical_id


UNKNOWN = SectionLabel("UNKNOWN", "UNKNOWN", 0)

SECTIONS: tuple[SectionLabel, ...] = (
    SectionLabel("ITEM_1_BUSINESS", "BUSINESS", 1),
    SectionLabel("ITEM_1A_RISK_FACTORS", "RISK FACTORS", 1, "A"),
    SectionLabel("ITEM_1B_UNRESOLVED_STAFF_COMMENTS", "UNRESOLVED STAFF COMMENTS", 1, "B"),
    SectionLabel("ITEM_1C_CYBERSECURITY", "CYBERSECURITY", 1, "C"),
    SectionLabel("ITEM_2_PROPERTIES", "PROPERTIES", 2),
    SectionLabel("ITEM_3_LEGAL_PROCEEDINGS", "LEGAL PROCEEDINGS", 3),
    SectionLabel("ITEM_4_MINE_SAFETY", "MINE SAFETY DISCLOSURES", 4),
    SectionLabel("ITEM_5_MARKET", "MARKET FOR REGISTRANT'S COMMON EQUITY", 5),
    SectionLabel("ITEM_6_SELECTED_FINANCIAL_DATA", "SELECTED FINANCIAL DATA", 6),
    SectionLabel("ITEM_7_MDA", "MANAGEMENT'S DISCUSSION AND ANALYSIS", 7),
    SectionLabel(
        "ITEM_7A_MARKET_RISK",
        "QUANTITATIVE AND QUALITATIVE DISCLOSURES ABOUT MARKET RISK",
        7,
        "A",
    ),
    SectionLabel("ITEM_8_FINANCIAL_STATEMENTS", "FINANCIAL STATEMENTS", 8),
    SectionLabel(
        "ITEM_9_ACCOUNTANT_CHANGES", "CHANGES IN AND DISAGREEMENTS WITH ACCOUNTANTS", 9
    ),
    SectionLabel("ITEM_9A_CONTROLS", "CONTROLS AND PROCEDURES", 9, "A"),
    SectionLabel("ITEM_9B_OTHER_INFORMATION", "OTHER INFORMATION", 9, "B"),
    SectionLabel(
        "ITEM_9C_FOREIGN_JURISDICTIONS",
        "DISCLOSURE REGARDING FOREIGN JURISDICTIONS THAT PREVENT INSPECTIONS",
        9,
        "C",
    ),
    SectionLabel("ITEM_10_DIRECTORS", "DIRECTORS AND EXECUTIVE OFFICERS", 10),
    SectionLabel("ITEM_11_EXECUTIVE_COMPENSATION", "EXECUTIVE COMPENSATION", 11),
    SectionLabel("ITEM_12_SECURITY_OWNERSHIP", "SECURITY OWNERSHIP", 12),
    SectionLabel(
        "ITEM_13_RELATED_TRANSACTIONS", "CERTAIN RELATIONSHIPS AND RELATED TRANSACTIONS", 13
    ),
    SectionLabel("ITEM_14_ACCOUNTANT_FEES", "PRINCIPAL ACCOUNTANT FEES AND SERVICES", 14),
    SectionLabel("ITEM_15_EXHIBITS", "EXHIBITS AND FINANCIAL STATEMENT SCHEDULES", 15),
    SectionLabel("ITEM_16_SUMMARY", "FORM 10-K SUMMARY", 16),
)

ALL_SECTIONS: tuple[SectionLabel, ...] = SECTIONS + (UNKNOWN,)

_BY_ID = {label.canonical_id: label for label in ALL_SECTIONS}
_BY_ITEM = {(label.item_number, label.item_letter): label for label in SECTIONS}


def by_id(canonical_id: str) -> SectionLabel:
    try:
        return _BY_ID[canonical_id]
    except KeyError:
        raise KeyError(f"unknown section id: {canonical_id!r}") from None


def for_item(number: int, letter: str = "") -> SectionLabel | None:
    """Section for an item number/letter pair, or None if not a 10-K item."""
    return _BY_ITEM.get((number, letter.upper()))
