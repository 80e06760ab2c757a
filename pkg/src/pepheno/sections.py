"""Partition radiology report free text into named sections.

A header is a run of 1-4 words (letters, spaces, slashes) immediately
followed by a colon, sitting either at a line start (leading indentation
allowed) or mid-line right after sentence-ending punctuation. Recognized
header names map onto the canonical section kinds through a case-insensitive
synonym table; anything else becomes an Other section with its raw header
preserved. Segmentation is lossless: preamble + headers + bodies concatenate
back to the input byte-for-byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping


class SectionKind(str, Enum):
    HISTORY = "History"
    INDICATION = "Indication"
    PROCEDURE = "Procedure"
    EXAMINATION = "Examination"
    STUDY = "Study"
    TECHNIQUE = "Technique"
    FINDINGS = "Findings"
    IMPRESSION = "Impression"
    OTHER = "Other"


DEFAULT_SECTION_SYNONYMS: dict[str, SectionKind] = {
    "HISTORY": SectionKind.HISTORY,
    "CLINICAL HISTORY": SectionKind.HISTORY,
    "INDICATION": SectionKind.INDICATION,
    "INDICATIONS": SectionKind.INDICATION,
    "CLINICAL INDICATION": SectionKind.INDICATION,
    "REASON FOR EXAM": SectionKind.INDICATION,
    "PROCEDURE": SectionKind.PROCEDURE,
    "EXAM": SectionKind.EXAMINATION,
    "EXAMINATION": SectionKind.EXAMINATION,
    "STUDY": SectionKind.STUDY,
    "TECHNIQUE": SectionKind.TECHNIQUE,
    "FINDINGS": SectionKind.FINDINGS,
    "FINDING": SectionKind.FINDINGS,
    "IMPRESSION": SectionKind.IMPRESSION,
    "IMPRESSIONS": SectionKind.IMPRESSION,
}

# Header start is anchored to a valid context so greedy word runs cannot
# swallow text from mid-sentence ("ratio: 1.2" never splits).
_HEADER_RE = re.compile(
    r"(?:\A|\n[ \t]*|[.!?;][ \t]+)"
    r"(?P<h>[A-Za-z]+(?:[ /]+[A-Za-z]+){0,3}:)"
)

_NAME_WS_RE = re.compile(r"\s+")


def normalize_header_name(header_text: str) -> str:
    """'Clinical  Indication:' -> 'CLINICAL INDICATION' (lookup key)."""
    return _NAME_WS_RE.sub(" ", header_text.rstrip(":").strip()).upper()


@dataclass(frozen=True)
class Section:
    kind: SectionKind
    header_text: str  # raw slice including the colon; "" for the preamble
    header_start: int
    body_start: int
    body_end: int
    body: str

    @property
    def is_preamble(self) -> bool:
        return self.header_text == ""

    @property
    def span(self) -> tuple[int, int]:
        """Full section span (header + body)."""
        return (self.header_start, self.body_end)


@dataclass(frozen=True)
class SectionMap:
    text: str
    sections: tuple[Section, ...]

    def __iter__(self) -> Iterator[Section]:
        return iter(self.sections)

    def __len__(self) -> int:
        return len(self.sections)

    def of_kind(self, *kinds: SectionKind) -> tuple[Section, ...]:
        wanted = set(kinds)
        return tuple(s for s in self.sections if s.kind in wanted)

    def reconstruct(self) -> str:
        return "".join(s.header_text + s.body for s in self.sections)

    def debug_lines(self) -> list[str]:
        out = []
        for s in self.sections:
            header = s.header_text or "<preamble>"
            out.append(
                f"{s.kind.value:12s} {header!r} header@{s.header_start} "
                f"body[{s.body_start},{s.body_end})"
            )
        return out


def segment(text: str, synonyms: Mapping[str, SectionKind] | None = None) -> SectionMap:
    """Split report text into sections. Every byte lands in exactly one section;
    text before the first header (or all text when no header is found) becomes
    an Other section with an empty header.
    """
    table = DEFAULT_SECTION_SYNONYMS if synonyms is None else dict(synonyms)

    headers: list[tuple[int, int, str]] = []  # (header_start, body_start, raw header)
    for match in _HEADER_RE.finditer(text):
        headers.append((match.start("h"), match.end("h"), match.group("h")))

    sections: list[Section] = []
    first = headers[0][0] if headers else len(text)
    if first > 0 or not headers:
        sections.append(
            Section(
                kind=SectionKind.OTHER,
                header_text="",
                header_start=0,
                body_start=0,
                body_end=first,
                body=text[:first],
            )
        )
    for i, (h_start, b_start, raw) in enumerate(headers):
        b_end = headers[i + 1][0] if i + 1 < len(headers) else len(text)
        kind = table.get(normalize_header_name(raw), SectionKind.OTHER)
        sections.append(
            Section(
                kind=kind,
                header_text=raw,
                header_start=h_start,
                body_start=b_start,
                body_end=b_end,
                body=text[b_start:b_end],
            )
        )
    return SectionMap(text=text, sections=tuple(sections))
