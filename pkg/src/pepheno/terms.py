"""Loading and validation of the versioned term-table config file."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .sections import DEFAULT_SECTION_SYNONYMS, SectionKind

_LIST_FIELDS = (
    "procedure_terms",
    "history_pe_terms",
    "ctpa_section_terms",
    "exclusion_phrases",
    "inclusion_keywords",
)


class TermConfigError(Exception):
    pass


@dataclass(frozen=True)
class TermTable:
    version: int
    procedure_terms: tuple[str, ...]
    history_pe_terms: tuple[str, ...]
    ctpa_section_terms: tuple[str, ...]
    exclusion_phrases: tuple[str, ...]
    inclusion_keywords: tuple[str, ...]
    section_synonyms: dict[str, SectionKind] = field(default_factory=dict)

    def merged_synonyms(self) -> dict[str, SectionKind]:
        table = dict(DEFAULT_SECTION_SYNONYMS)
        table.update(self.section_synonyms)
        return table


def _parse(data: dict, source: str) -> TermTable:
    if not isinstance(data, dict):
        raise TermConfigError(f"{source}: term config must be a mapping")
    lists: dict[str, tuple[str, ...]] = {}
    for name in _LIST_FIELDS:
        values = data.get(name)
        if not isinstance(values, list) or not values:
            raise TermConfigError(f"{source}: {name} must be a non-empty list")
        if any(not isinstance(v, str) or not v.strip() for v in values):
            raise TermConfigError(f"{source}: {name} entries must be non-empty strings")
        lists[name] = tuple(v.strip() for v in values)
    synonyms: dict[str, SectionKind] = {}
    for header, kind in (data.get("section_synonyms") or {}).items():
        try:
            synonyms[str(header).upper()] = SectionKind(kind)
        except ValueError:
            raise TermConfigError(
                f"{source}: unknown section kind {kind!r} for header {header!r}"
            ) from None
    return TermTable(version=int(data.get("version", 1)), section_synonyms=synonyms, **lists)


def load_terms(path: str | Path | None = None) -> TermTable:
    """Load a term table; ``None`` loads the packaged default."""
    if path is None:
        text = resources.files("pepheno.data").joinpath("terms.yaml").read_text("utf-8")
        source = "<packaged terms.yaml>"
    else:
        text = Path(path).read_text("utf-8")
        source = str(path)
    return _parse(yaml.safe_load(text), source)
