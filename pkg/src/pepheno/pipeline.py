"""Stage orchestration: per-report parallel execution with canonical output.

Stages communicate through files so any stage can be replayed and audited.
Outputs are sorted by report_id whatever the worker scheduling, which is
what makes reruns byte-identical at any worker count.
"""

from __future__ import annotations

import json
import multiprocessing
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .classifier import (
    BaselineClassifier,
    HttpAdapter,
    PipeAdapter,
    classify_evidence_batch,
)
from .config import ClassifierConfig
from .corpus import RadiologyReport, ReportCorpus
from .extractor import ExtractedEvidence, EvidenceSentence, extract
from .identifier import IdentifierMode, identify
from .sections import SectionKind, segment
from .terms import TermTable

_WORKER: dict = {}


def _init_worker(terms: TermTable, mode: IdentifierMode, scope: frozenset[SectionKind]) -> None:
    _WORKER["terms"] = terms
    _WORKER["mode"] = mode
    _WORKER["scope"] = scope
    _WORKER["synonyms"] = terms.merged_synonyms()


def _identify_one(report: RadiologyReport) -> dict:
    sections = segment(report.text, _WORKER["synonyms"])
    decision = identify(sections, _WORKER["terms"], _WORKER["mode"])
    return {
        "report_id": report.report_id,
        "included": decision.included,
        "routes": sorted(r.value for r in decision.routes_hit),
        "matched_terms": [
            {"term": m.term, "section": m.section_kind.value, "offset": m.offset}
            for m in decision.matched_terms
        ],
    }


def _extract_one(report: RadiologyReport) -> dict:
    terms = _WORKER["terms"]
    sections = segment(report.text, _WORKER["synonyms"])
    evidence = extract(
        report,
        sections,
        terms.exclusion_phrases,
        terms.inclusion_keywords,
        _WORKER["scope"],
    )
    return evidence.to_record()


def _classify_one(record: dict) -> dict:
    evidence = evidence_from_record(record)
    prediction = classify_evidence_batch(
        [evidence], classifier=BaselineClassifier(_WORKER["terms"])
    )[0]
    return {
        "report_id": prediction.report_id,
        "label": prediction.binary.value,
        "source": prediction.source.value,
        "confidence": prediction.confidence,
        "evidence_present": prediction.evidence_present,
    }


def _parallel_map(
    func: Callable,
    items: Sequence,
    workers: int,
    initargs: tuple,
) -> list:
    if workers <= 1 or len(items) < 2:
        _init_worker(*initargs)
        return [func(item) for item in items]
    chunksize = max(1, len(items) // (workers * 4))
    with multiprocessing.Pool(workers, initializer=_init_worker, initargs=initargs) as pool:
        return pool.map(func, items, chunksize=chunksize)


def _sorted_by_id(records: Iterable[dict]) -> list[dict]:
    return sorted(records, key=lambda r: r["report_id"])


def run_identify(
    corpus: ReportCorpus,
    terms: TermTable,
    mode: IdentifierMode = IdentifierMode.UNION,
    workers: int = 1,
) -> list[dict]:
    initargs = (terms, mode, frozenset())
    return _sorted_by_id(_parallel_map(_identify_one, corpus.reports, workers, initargs))


def run_extract(
    corpus: ReportCorpus,
    terms: TermTable,
    scope: frozenset[SectionKind],
    included_ids: set[str] | None = None,
    workers: int = 1,
) -> list[dict]:
    reports = [
        r for r in corpus.reports if included_ids is None or r.report_id in included_ids
    ]
    initargs = (terms, IdentifierMode.UNION, scope)
    return _sorted_by_id(_parallel_map(_extract_one, reports, workers, initargs))


def evidence_from_record(record: dict) -> ExtractedEvidence:
    return ExtractedEvidence(
        report_id=record["report_id"],
        sentences=tuple(
            EvidenceSentence(
                text=s["text"],
                section_kind=SectionKind(s["section"]),
                start=s["start"],
                end=s["end"],
            )
            for s in record["sentences"]
        ),
        merged_note=record["merged_note"],
        keywords_hit=frozenset(record["keywords_hit"]),
    )


def run_classify(
    evidence_records: Sequence[dict],
    terms: TermTable,
    classifier_config: ClassifierConfig | None = None,
    workers: int = 1,
) -> list[dict]:
    cfg = classifier_config or ClassifierConfig()
    if cfg.kind == "baseline":
        initargs = (terms, IdentifierMode.UNION, frozenset())
        return _sorted_by_id(
            _parallel_map(_classify_one, list(evidence_records), workers, initargs)
        )
    if cfg.transport == "pipe":
        adapter: PipeAdapter | HttpAdapter = PipeAdapter(
            command=list(cfg.command or ()),
            window=cfg.window,
            timeout=cfg.timeout,
            retries=cfg.retries,
        )
    else:
        adapter = HttpAdapter(
            endpoint=cfg.endpoint or "",
            batch_size=cfg.batch_size,
            timeout=cfg.timeout,
            retries=cfg.retries,
        )
    evidences = [evidence_from_record(r) for r in evidence_records]
    predictions = classify_evidence_batch(evidences, adapter=adapter)
    return _sorted_by_id(
        {
            "report_id": p.report_id,
            "label": p.binary.value,
            "source": p.source.value,
            "confidence": p.confidence,
            "evidence_present": p.evidence_present,
        }
        for p in predictions
    )


def run_sections_dump(corpus: ReportCorpus, terms: TermTable) -> list[str]:
    lines = []
    synonyms = terms.merged_synonyms()
    for report in sorted(corpus.reports, key=lambda r: r.report_id):
        lines.append(f"REPORT {report.report_id}")
        for line in segment(report.text, synonyms).debug_lines():
            lines.append(f"  {line}")
    return lines


def write_jsonl(records: Iterable[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records
