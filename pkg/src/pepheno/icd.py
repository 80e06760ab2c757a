"""Discharge-code PE phenotyping and the one-report-per-stay comparison.

A code is PE-related when it starts with I26 (ICD-10) or 415 (ICD-9), except
the septic-PE codes I26.01, I26.90, and 415.12. A stay is ICD-positive when
any of its codes qualifies. When a stay has several CTPA reports, the
gold-positive one is preferred (earliest such, then report_id) so one row
per stay enters the comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import (
    BinaryLabel,
    IcdCodeRecord,
    IcdCorpus,
    IcdVersion,
    PhenotypeLabel,
    RadiologyReport,
)

PE_CODE_EXCLUSIONS = frozenset({"I2601", "I2690", "41512"})

_PREFIX = {IcdVersion.ICD10: "I26", IcdVersion.ICD9: "415"}


def is_pe_code(record: IcdCodeRecord) -> bool:
    return (
        record.code.startswith(_PREFIX[record.icd_version])
        and record.code not in PE_CODE_EXCLUSIONS
    )


def stay_icd_label(records: Iterable[IcdCodeRecord]) -> BinaryLabel:
    """Positive iff any code for the stay is PE-related; vacuously Negative."""
    return (
        BinaryLabel.POSITIVE
        if any(is_pe_code(r) for r in records)
        else BinaryLabel.NEGATIVE
    )


def matched_pe_codes(records: Iterable[IcdCodeRecord]) -> list[str]:
    return [r.code for r in records if is_pe_code(r)]


class MissingGoldLabel(Exception):
    def __init__(self, report_id: str):
        super().__init__(f"no gold label for report {report_id!r}")
        self.report_id = report_id


def select_report_per_stay(
    reports: Sequence[RadiologyReport],
    gold: Mapping[str, PhenotypeLabel],
) -> str:
    """One report per stay: earliest gold-positive if any, else earliest
    overall; chart_time ties break on ascending report_id.
    """
    if not reports:
        raise ValueError("stay has no reports")
    for report in reports:
        if report.report_id not in gold:
            raise MissingGoldLabel(report.report_id)
    positives = [
        r for r in reports if gold[r.report_id].binary == BinaryLabel.POSITIVE
    ]
    pool = positives if positives else list(reports)
    chosen = min(pool, key=lambda r: (r.chart_time, r.report_id))
    return chosen.report_id


@dataclass(frozen=True)
class StayComparisonRow:
    hadm_id: str
    selected_report_id: str
    gold_fine: str
    gold: BinaryLabel
    icd_label: BinaryLabel
    icd_codes_matched: tuple[str, ...]


@dataclass(frozen=True)
class ComparisonResult:
    rows: tuple[StayComparisonRow, ...]
    er_only_count: int

    def pairs(self) -> list[tuple[BinaryLabel, BinaryLabel]]:
        """(gold, icd) label pairs for the confusion table."""
        return [(row.gold, row.icd_label) for row in self.rows]


def build_comparison(
    reports: Iterable[RadiologyReport],
    gold: Mapping[str, PhenotypeLabel],
    icd: IcdCorpus,
) -> ComparisonResult:
    """One StayComparisonRow per hospital stay holding at least one report.

    Reports without a hadm_id are emergency-room-only and counted, not
    compared. Stays absent from the ICD file simply have zero codes.
    """
    stays: dict[str, list[RadiologyReport]] = {}
    er_only = 0
    for report in reports:
        if report.hadm_id is None:
            er_only += 1
        else:
            stays.setdefault(report.hadm_id, []).append(report)

    codes_by_stay = icd.by_stay()
    rows = []
    for hadm_id in sorted(stays):
        selected_id = select_report_per_stay(stays[hadm_id], gold)
        stay_codes = codes_by_stay.get(hadm_id, [])
        label = gold[selected_id]
        rows.append(
            StayComparisonRow(
                hadm_id=hadm_id,
                selected_report_id=selected_id,
                gold_fine=label.fine.value,
                gold=label.binary,
                icd_label=stay_icd_label(stay_codes),
                icd_codes_matched=tuple(matched_pe_codes(stay_codes)),
            )
        )
    return ComparisonResult(rows=tuple(rows), er_only_count=er_only)


def write_comparison_csv(result: ComparisonResult, path) -> None:
    """Audit export: one row per stay, matched codes joined by ';'."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["hadm_id", "selected_report_id", "gold_fine", "gold_binary",
             "icd_label", "matched_codes"]
        )
        for row in result.rows:
            writer.writerow(
                [row.hadm_id, row.selected_report_id, row.gold_fine,
                 row.gold.value, row.icd_label.value, ";".join(row.icd_codes_matched)]
            )
