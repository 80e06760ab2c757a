"""Decide whether a segmented report describes a CTPA study.

Three independent routes:
  - ProcedureTerms: a study-description term in a Procedure, Examination,
    Study, or Technique body;
  - HistoryPeTerms: a PE-suspicion phrase in a History or Indication body;
  - CtpaSectionTerms: a CTPA descriptor in a section header, or opening a
    line of body text (a standalone study-descriptor line).

Union mode includes a report when any route fires; Conjunction mode requires
(HistoryPeTerms AND ProcedureTerms) OR CtpaSectionTerms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .matching import match_term
from .sections import Section, SectionKind, SectionMap
from .terms import TermTable


class IdentifierMode(str, Enum):
    UNION = "Union"
    CONJUNCTION = "Conjunction"


class Route(str, Enum):
    PROCEDURE_TERMS = "ProcedureTerms"
    HISTORY_PE_TERMS = "HistoryPeTerms"
    CTPA_SECTION_TERMS = "CtpaSectionTerms"


PROCEDURE_SECTION_KINDS = (
    SectionKind.PROCEDURE,
    SectionKind.EXAMINATION,
    SectionKind.STUDY,
    SectionKind.TECHNIQUE,
)
HISTORY_SECTION_KINDS = (SectionKind.HISTORY, SectionKind.INDICATION)


@dataclass(frozen=True)
class TermMatch:
    term: str
    section_kind: SectionKind
    offset: int  # absolute offset into the report text


@dataclass(frozen=True)
class IdentificationDecision:
    included: bool
    routes_hit: frozenset[Route]
    matched_terms: tuple[TermMatch, ...]

    def route_hit(self, route: Route) -> bool:
        return route in self.routes_hit


_LINE_RE = re.compile(r"[^\n]+")


def _body_matches(section: Section, terms: tuple[str, ...]) -> list[TermMatch]:
    hits = []
    for term in terms:
        for start, _ in match_term(section.body, term):
            hits.append(TermMatch(term, section.kind, section.body_start + start))
    return hits


def _descriptor_matches(section: Section, terms: tuple[str, ...]) -> list[TermMatch]:
    """Column-3 hits: term in any section header, or opening a line of an
    un-named (Other) section, e.g. a title line. A term inside a named
    section's body is that section's business, not a separate descriptor.
    """
    hits = []
    for term in terms:
        for start, _ in match_term(section.header_text, term):
            hits.append(TermMatch(term, section.kind, section.header_start + start))
    if section.kind != SectionKind.OTHER:
        return hits
    for line in _LINE_RE.finditer(section.body):
        stripped = line.group(0).strip()
        if not stripped:
            continue
        lead = len(line.group(0)) - len(line.group(0).lstrip())
        for term in terms:
            spans = match_term(stripped, term)
            if spans and spans[0][0] == 0:
                hits.append(
                    TermMatch(term, section.kind, section.body_start + line.start() + lead)
                )
    return hits


def identify(
    sections: SectionMap,
    terms: TermTable,
    mode: IdentifierMode = IdentifierMode.UNION,
) -> IdentificationDecision:
    matches: dict[Route, list[TermMatch]] = {route: [] for route in Route}

    for section in sections:
        if section.kind in PROCEDURE_SECTION_KINDS:
            matches[Route.PROCEDURE_TERMS] += _body_matches(section, terms.procedure_terms)
        if section.kind in HISTORY_SECTION_KINDS:
            matches[Route.HISTORY_PE_TERMS] += _body_matches(section, terms.history_pe_terms)
        matches[Route.CTPA_SECTION_TERMS] += _descriptor_matches(
            section, terms.ctpa_section_terms
        )

    routes_hit = frozenset(route for route, hit in matches.items() if hit)
    if mode == IdentifierMode.UNION:
        included = bool(routes_hit)
    else:
        included = (
            Route.PROCEDURE_TERMS in routes_hit and Route.HISTORY_PE_TERMS in routes_hit
        ) or Route.CTPA_SECTION_TERMS in routes_hit

    matched = sorted(
        (m for route in routes_hit for m in matches[route]),
        key=lambda m: (m.offset, m.term),
    )
    return IdentificationDecision(
        included=included,
        routes_hit=routes_hit,
        matched_terms=tuple(matched),
    )
