"""Core data types and corpus ingestion for radiology reports, ICD codes,
phenotype labels, and classifier predictions.

Reports arrive as line-delimited JSON (one object per line with fields
report_id, subject_id, hadm_id, chart_time, text); ICD codes as CSV with
header hadm_id,icd_version,icd_code. Loading skips malformed records and
reports them, except duplicate report ids which abort the load (duplicates
corrupt downstream joins).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence


class CorpusError(Exception):
    """Corpus-level invariant violation that aborts a load."""


class DuplicateReportIdError(CorpusError):
    def __init__(self, report_id: str, line: int | None = None):
        at = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate report_id {report_id!r}{at}")
        self.report_id = report_id


class FineLabel(str, Enum):
    """Five-class gold label taxonomy."""

    ACUTE = "Acute"
    SUBSEGMENTAL = "Subsegmental"
    CHRONIC = "Chronic"
    EQUIVOCAL = "Equivocal"
    NEGATIVE = "Negative"


class BinaryLabel(str, Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"


_POSITIVE_FINE = frozenset({FineLabel.ACUTE, FineLabel.SUBSEGMENTAL})


def collapse_label(fine: FineLabel) -> BinaryLabel:
    """Collapse the five-class label to binary: Acute|Subsegmental are Positive."""
    fine = FineLabel(fine)
    return BinaryLabel.POSITIVE if fine in _POSITIVE_FINE else BinaryLabel.NEGATIVE


@dataclass(frozen=True)
class PhenotypeLabel:
    fine: FineLabel
    binary: BinaryLabel

    def __post_init__(self) -> None:
        if self.binary != collapse_label(self.fine):
            raise ValueError(
                f"inconsistent label: fine={self.fine.value} binary={self.binary.value}"
            )

    @classmethod
    def from_fine(cls, fine: FineLabel | str) -> "PhenotypeLabel":
        fine = FineLabel(fine)
        return cls(fine=fine, binary=collapse_label(fine))


class IcdVersion(str, Enum):
    ICD9 = "ICD9"
    ICD10 = "ICD10"


_CODE_RE = re.compile(r"[A-Z0-9]+\Z")


def normalize_code(raw: str) -> str:
    """Uppercase and strip dots. Idempotent; result must match [A-Z0-9]+."""
    code = raw.strip().upper().replace(".", "")
    if not _CODE_RE.match(code):
        raise ValueError(f"invalid ICD code {raw!r}")
    return code


@dataclass(frozen=True)
class IcdCodeRecord:
    hadm_id: str
    icd_version: IcdVersion
    code: str  # normalized

    @classmethod
    def make(cls, hadm_id: str, icd_version: IcdVersion | str, code: str) -> "IcdCodeRecord":
        return cls(hadm_id=str(hadm_id), icd_version=IcdVersion(icd_version),
                   code=normalize_code(code))


class PredictionSource(str, Enum):
    BASELINE = "Baseline"
    EXTERNAL = "External"
    DEFAULT_NEGATIVE = "DefaultNegative"


@dataclass(frozen=True)
class Prediction:
    report_id: str
    binary: BinaryLabel
    source: PredictionSource
    evidence_present: bool
    confidence: float | None = None

    def __post_init__(self) -> None:
        if self.source == PredictionSource.DEFAULT_NEGATIVE:
            if self.binary != BinaryLabel.NEGATIVE or self.evidence_present:
                raise ValueError(
                    "DefaultNegative predictions must be Negative with no evidence"
                )


@dataclass(frozen=True)
class RadiologyReport:
    report_id: str
    subject_id: str
    hadm_id: str | None  # absent => emergency-room-only visit
    chart_time: datetime
    text: str

    @property
    def er_only(self) -> bool:
        return self.hadm_id is None

    def to_record(self) -> dict:
        return {
            "report_id": self.report_id,
            "subject_id": self.subject_id,
            "hadm_id": self.hadm_id,
            "chart_time": self.chart_time.isoformat(timespec="seconds"),
            "text": self.text,
        }


@dataclass(frozen=True)
class LoadIssue:
    """One skipped malformed record."""

    line: int
    message: str


_REPORT_FIELDS = ("report_id", "subject_id", "chart_time", "text")


@dataclass(frozen=True)
class ReportCorpus:
    reports: tuple[RadiologyReport, ...]
    issues: tuple[LoadIssue, ...] = ()
    _by_id: Mapping[str, RadiologyReport] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {r.report_id: r for r in self.reports})

    def __len__(self) -> int:
        return len(self.reports)

    def __iter__(self) -> Iterator[RadiologyReport]:
        return iter(self.reports)

    def get(self, report_id: str) -> RadiologyReport | None:
        return self._by_id.get(report_id)

    def __getitem__(self, report_id: str) -> RadiologyReport:
        return self._by_id[report_id]

    @property
    def er_only_count(self) -> int:
        return sum(1 for r in self.reports if r.er_only)


def _parse_report(record: dict, line: int) -> RadiologyReport:
    for name in _REPORT_FIELDS:
        if record.get(name) in (None, ""):
            raise ValueError(f"missing required field {name!r}")
    try:
        chart_time = datetime.fromisoformat(str(record["chart_time"]))
    except ValueError as exc:
        raise ValueError(f"bad chart_time: {exc}") from None
    hadm = record.get("hadm_id")
    return RadiologyReport(
        report_id=str(record["report_id"]),
        subject_id=str(record["subject_id"]),
        hadm_id=None if hadm in (None, "") else str(hadm),
        chart_time=chart_time,
        text=str(record["text"]),
    )


def load_reports(records: Iterable[tuple[int, dict] | dict]) -> ReportCorpus:
    """Build a corpus from parsed report records.

    Accepts dicts or (line_number, dict) pairs. Malformed records are skipped
    and reported via ``ReportCorpus.issues``; a duplicate report_id raises
    :class:`DuplicateReportIdError`.
    """
    reports: list[RadiologyReport] = []
    issues: list[LoadIssue] = []
    seen: set[str] = set()
    for i, item in enumerate(records, start=1):
        line, record = item if isinstance(item, tuple) else (i, item)
        if not isinstance(record, dict):
            issues.append(LoadIssue(line, "record is not an object"))
            continue
        try:
            report = _parse_report(record, line)
        except ValueError as exc:
            issues.append(LoadIssue(line, str(exc)))
            continue
        if report.report_id in seen:
            raise DuplicateReportIdError(report.report_id, line)
        seen.add(report.report_id)
        reports.append(report)
    return ReportCorpus(reports=tuple(reports), issues=tuple(issues))


def load_reports_file(path: str | Path) -> ReportCorpus:
    """Load the line-delimited report file (one JSON object per line, UTF-8)."""

    def records() -> Iterator[tuple[int, dict]]:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield line_no, json.loads(line)
                except json.JSONDecodeError as exc:
                    yield line_no, {"__parse_error__": str(exc)}

    reports: list[RadiologyReport] = []
    issues: list[LoadIssue] = []
    seen: set[str] = set()
    for line_no, record in records():
        if "__parse_error__" in record:
            issues.append(LoadIssue(line_no, f"bad JSON: {record['__parse_error__']}"))
            continue
        try:
            report = _parse_report(record, line_no)
        except ValueError as exc:
            issues.append(LoadIssue(line_no, str(exc)))
            continue
        if report.report_id in seen:
            raise DuplicateReportIdError(report.report_id, line_no)
        seen.add(report.report_id)
        reports.append(report)
    return ReportCorpus(reports=tuple(reports), issues=tuple(issues))


def write_reports_file(reports: Sequence[RadiologyReport], path: str | Path) -> None:
    """Serialize reports to the canonical line-delimited form."""
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report.to_record(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


@dataclass(frozen=True)
class IcdCorpus:
    records: tuple[IcdCodeRecord, ...]
    issues: tuple[LoadIssue, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[IcdCodeRecord]:
        return iter(self.records)

    def for_stay(self, hadm_id: str) -> tuple[IcdCodeRecord, ...]:
        return tuple(r for r in self.records if r.hadm_id == hadm_id)

    def by_stay(self) -> dict[str, list[IcdCodeRecord]]:
        stays: dict[str, list[IcdCodeRecord]] = {}
        for record in self.records:
            stays.setdefault(record.hadm_id, []).append(record)
        return stays


_ICD_VERSION_ALIASES = {
    "9": IcdVersion.ICD9,
    "ICD9": IcdVersion.ICD9,
    "ICD-9": IcdVersion.ICD9,
    "10": IcdVersion.ICD10,
    "ICD10": IcdVersion.ICD10,
    "ICD-10": IcdVersion.ICD10,
}


def parse_icd_version(raw: str) -> IcdVersion:
    version = _ICD_VERSION_ALIASES.get(str(raw).strip().upper())
    if version is None:
        raise ValueError(f"unknown icd_version {raw!r}")
    return version


def load_icd(rows: Iterable[tuple[int, Mapping[str, str]] | Mapping[str, str]]) -> IcdCorpus:
    """Build an ICD corpus from row mappings; order preserved, codes normalized."""
    records: list[IcdCodeRecord] = []
    issues: list[LoadIssue] = []
    for i, item in enumerate(rows, start=1):
        line, row = item if isinstance(item, tuple) else (i, item)
        try:
            hadm = row["hadm_id"]
            if hadm in (None, ""):
                raise ValueError("missing required field 'hadm_id'")
            version = parse_icd_version(row["icd_version"])
            code = normalize_code(row["icd_code"])
        except KeyError as exc:
            issues.append(LoadIssue(line, f"missing required field {exc}"))
            continue
        except ValueError as exc:
            issues.append(LoadIssue(line, str(exc)))
            continue
        records.append(IcdCodeRecord(hadm_id=str(hadm), icd_version=version, code=code))
    return IcdCorpus(records=tuple(records), issues=tuple(issues))


def load_icd_file(path: str | Path) -> IcdCorpus:
    """Load the comma-separated ICD file (header: hadm_id,icd_version,icd_code)."""
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"hadm_id", "icd_version", "icd_code"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise CorpusError(
                f"ICD file must have header hadm_id,icd_version,icd_code, got {reader.fieldnames}"
            )
        return load_icd((reader.line_num, row) for row in reader)


def write_icd_file(records: Sequence[IcdCodeRecord], path: str | Path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hadm_id", "icd_version", "icd_code"])
        for record in records:
            writer.writerow([record.hadm_id, record.icd_version.value, record.code])
