"""Shared phrase matcher for term tables and keyword lists.

Matching rules:
  - whitespace inside a phrase matches any whitespace run,
  - matches are word-boundary anchored on both ends,
  - a single-word, all-uppercase term (PE, VTE, CTPA, ...) is an acronym and
    matches case-sensitively; every other term matches case-insensitively.
"""

from __future__ import annotations

import re
from functools import lru_cache


def is_acronym_term(term: str) -> bool:
    return " " not in term.strip() and term.isupper()


@lru_cache(maxsize=1024)
def term_pattern(term: str) -> re.Pattern:
    term = term.strip()
    if not term:
        raise ValueError("empty term")
    body = r"\s+".join(re.escape(part) for part in term.split())
    if term[0].isalnum():
        body = r"\b" + body
    if term[-1].isalnum():
        body = body + r"\b"
    flags = 0 if is_acronym_term(term) else re.IGNORECASE
    return re.compile(body, flags)


def match_term(text: str, term: str) -> list[tuple[int, int]]:
    """All (start, end) occurrences of the phrase in the text."""
    return [m.span() for m in term_pattern(term).finditer(text)]


def contains_term(text: str, term: str) -> bool:
    return term_pattern(term).search(text) is not None


def match_any(text: str, terms) -> list[tuple[str, int, int]]:
    """All (term, start, end) occurrences for a term list, in text order."""
    hits: list[tuple[str, int, int]] = []
    for term in terms:
        for start, end in match_term(text, term):
            hits.append((term, start, end))
    hits.sort(key=lambda hit: (hit[1], hit[2], hit[0]))
    return hits
