"""Evidence-sentence extraction: sentence splitting, exclusion-phrase
masking, keyword selection, and merging into the note handed to the
classifier.

Masking replaces each exclusion-phrase occurrence with an equal-length run
of '#' so offsets survive; phrases are applied longest-first (ties in term
list order), scanning left to right, so overlapping look-alikes resolve
deterministically ("CT PE protocol" masks "PE protocol", leaving "CT ").
Extraction is polarity-blind: "No evidence of pulmonary embolism." is still
evidence — negation is the classifier's job.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import RadiologyReport
from .matching import contains_term, term_pattern
from .sections import SectionKind, SectionMap

# Tokens that end with '.' without ending a sentence.
ABBREVIATIONS = frozenset(
    {"dr", "mr", "mrs", "ms", "prof", "jr", "sr", "vs", "etc",
     "cf", "approx", "fig", "st", "e.g", "i.e"}
)

DEFAULT_SCAN_SCOPE = frozenset(
    {SectionKind.FINDINGS, SectionKind.IMPRESSION, SectionKind.OTHER}
)

_PUNCT_BOUNDARY = re.compile(r"[.!?;](?=\s)")
_LIST_NEWLINE = re.compile(r"\n(?=[ \t]*(?:\d+\.|-))")
_TOKEN_CHARS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ.")


@dataclass(frozen=True)
class SentenceSpan:
    start: int
    end: int
    text: str


def _token_before(text: str, pos: int) -> str:
    """Letters-and-dots run ending just before ``pos`` ("e.g", "Dr", "cm")."""
    j = pos
    while j > 0 and text[j - 1] in _TOKEN_CHARS:
        j -= 1
    return text[j:pos]


def _is_list_marker(text: str, pos: int) -> bool:
    """True when the '.' at ``pos`` terminates an item number: a digit run
    opening a line or directly following a sentence boundary or colon.
    """
    j = pos
    while j > 0 and text[j - 1].isdigit():
        j -= 1
    if j == pos:  # no digits
        return False
    k = j
    while k > 0 and text[k - 1] in " \t":
        k -= 1
    return k == 0 or text[k - 1] in ".!?;:\n"


def split_sentences(text: str) -> list[SentenceSpan]:
    """Sentence spans over ``text``; offsets are relative to ``text``.

    Boundaries sit after '.', '!', '?', ';' followed by whitespace and at
    newlines that open a numbered or dashed list item. Decimals ("1.2 cm"),
    list-item numbers, and known abbreviations do not split. Every
    non-whitespace character lands in exactly one span.
    """
    boundaries: set[int] = set()
    for match in _PUNCT_BOUNDARY.finditer(text):
        pos = match.start()
        if text[pos] == ".":
            token = _token_before(text, pos).lstrip(".").lower()
            if token in ABBREVIATIONS:
                continue
            if _is_list_marker(text, pos):
                continue
        boundaries.add(pos + 1)
    for match in _LIST_NEWLINE.finditer(text):
        boundaries.add(match.start())

    spans: list[SentenceSpan] = []
    prev = 0
    for bound in sorted(boundaries) + [len(text)]:
        start, end = prev, bound
        prev = bound
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            spans.append(SentenceSpan(start=start, end=end, text=text[start:end]))
    return spans


def mask_exclusions(text: str, phrases: Sequence[str]) -> str:
    """Replace each exclusion-phrase occurrence with '#' of equal length.

    Phrases apply longest-first (ties broken by list order); each pass scans
    the partially masked text, so a shorter phrase never re-matches inside an
    already masked span. |result| == |text| always.
    """
    order = sorted(range(len(phrases)), key=lambda i: (-len(phrases[i]), i))
    chars = list(text)
    for idx in order:
        pattern = term_pattern(phrases[idx])
        current = "".join(chars)
        for match in pattern.finditer(current):
            chars[match.start():match.end()] = "#" * (match.end() - match.start())
    return "".join(chars)


@dataclass(frozen=True)
class EvidenceSentence:
    text: str
    section_kind: SectionKind
    start: int  # absolute offsets into the report text
    end: int


@dataclass(frozen=True)
class ExtractedEvidence:
    report_id: str
    sentences: tuple[EvidenceSentence, ...]
    merged_note: str
    keywords_hit: frozenset[str]

    @property
    def evidence_present(self) -> bool:
        return bool(self.sentences)

    def to_record(self) -> dict:
        return {
            "report_id": self.report_id,
            "evidence_present": self.evidence_present,
            "merged_note": self.merged_note,
            "keywords_hit": sorted(self.keywords_hit),
            "sentences": [
                {
                    "text": s.text,
                    "section": s.section_kind.value,
                    "start": s.start,
                    "end": s.end,
                }
                for s in self.sentences
            ],
        }


def extract(
    report: RadiologyReport,
    sections: SectionMap,
    exclusion_phrases: Sequence[str],
    inclusion_keywords: Sequence[str],
    scan_scope: Iterable[SectionKind] = DEFAULT_SCAN_SCOPE,
) -> ExtractedEvidence:
    """Isolate keyword-bearing sentences from the scanned sections and merge
    them (document order, single-space separator, exact duplicates dropped).
    """
    scope = frozenset(scan_scope)
    sentences: list[EvidenceSentence] = []
    seen: set[str] = set()
    keywords: set[str] = set()
    for section in sections:
        if section.kind not in scope or not section.body:
            continue
        masked = mask_exclusions(section.body, exclusion_phrases)
        for span in split_sentences(section.body):
            masked_slice = masked[span.start:span.end]
            hits = [kw for kw in inclusion_keywords if contains_term(masked_slice, kw)]
            if not hits:
                continue
            keywords.update(hits)
            if span.text in seen:
                continue
            seen.add(span.text)
            sentences.append(
                EvidenceSentence(
                    text=span.text,
                    section_kind=section.kind,
                    start=section.body_start + span.start,
                    end=section.body_start + span.end,
                )
            )
    merged = " ".join(s.text for s in sentences)
    return ExtractedEvidence(
        report_id=report.report_id,
        sentences=tuple(sentences),
        merged_note=merged,
        keywords_hit=frozenset(keywords),
    )
