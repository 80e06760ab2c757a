"""Deterministic synthetic radiology corpora with planted ground truth.

Each generated report belongs to a planted class that fixes which
identification route fires, which sentences carry PE keywords (and at what
offsets), and which discharge codes attach to the stay. The recorded truth
is what was deliberately planted, so pipeline outputs can be compared
against it exactly. Same seed + spec yields byte-identical output; this is
test scaffolding, not clinically realistic text.

Templates deliberately cover the hard cases: acute-and-chronic wording,
negated findings, subsegmental-only clots, protocol-phrase traps, and
motion-artifact equivocation.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Mapping

from .corpus import (
    BinaryLabel,
    FineLabel,
    IcdCodeRecord,
    IcdVersion,
    PhenotypeLabel,
    RadiologyReport,
    collapse_label,
    write_icd_file,
    write_reports_file,
)


class PlantedClass(str, Enum):
    CTPA_ACUTE = "ctpa-acute"
    CTPA_CHRONIC = "ctpa-chronic"
    CTPA_NEGATIVE = "ctpa-negative"
    CTPA_EQUIVOCAL = "ctpa-equivocal"
    NON_CTPA = "non-ctpa"


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int
    n_reports: int
    mix: Mapping[PlantedClass, float]
    trap_rate: float = 0.0
    inpatient_rate: float = 0.62

    def __post_init__(self) -> None:
        mix = {PlantedClass(k): float(v) for k, v in self.mix.items()}
        object.__setattr__(self, "mix", mix)
        if self.n_reports < 0:
            raise ValueError("n_reports must be non-negative")
        if any(v < 0 for v in mix.values()):
            raise ValueError("mix proportions must be non-negative")
        if abs(sum(mix.values()) - 1.0) > 1e-9:
            raise ValueError(f"mix proportions must sum to 1, got {sum(mix.values())}")
        if not 0.0 <= self.trap_rate <= 1.0:
            raise ValueError("trap_rate must be within [0, 1]")


@dataclass(frozen=True)
class ReportTruth:
    report_id: str
    planted_class: PlantedClass
    included: bool
    routes: tuple[str, ...]
    gold_fine: FineLabel | None
    evidence_present: bool
    evidence_spans: tuple[tuple[int, int], ...]
    evidence_sentences: tuple[str, ...]
    has_trap: bool


@dataclass(frozen=True)
class StayTruth:
    hadm_id: str
    icd_label: BinaryLabel
    pe_codes: tuple[str, ...]


@dataclass(frozen=True)
class SyntheticCorpus:
    spec: GeneratorSpec
    reports: tuple[RadiologyReport, ...]
    icd: tuple[IcdCodeRecord, ...]
    report_truth: dict[str, ReportTruth]
    stay_truth: dict[str, StayTruth]

    def gold_labels(self) -> dict[str, PhenotypeLabel]:
        """Gold labels for the planted CTPA reports."""
        return {
            rid: PhenotypeLabel.from_fine(truth.gold_fine)
            for rid, truth in self.report_truth.items()
            if truth.gold_fine is not None
        }

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "reports": out / "reports.jsonl",
            "icd": out / "icd.csv",
            "gold": out / "gold.jsonl",
            "ground_truth": out / "ground_truth.json",
        }
        write_reports_file(self.reports, paths["reports"])
        write_icd_file(self.icd, paths["icd"])
        with open(paths["gold"], "w", encoding="utf-8") as fh:
            for rid, label in sorted(self.gold_labels().items()):
                fh.write(
                    json.dumps(
                        {"report_id": rid, "fine": label.fine.value,
                         "binary": label.binary.value},
                        sort_keys=True,
                    )
                    + "\n"
                )
        truth = {
            "spec": {
                "seed": self.spec.seed,
                "n_reports": self.spec.n_reports,
                "mix": {k.value: v for k, v in self.spec.mix.items()},
                "trap_rate": self.spec.trap_rate,
            },
            "reports": {
                rid: {
                    "planted_class": t.planted_class.value,
                    "included": t.included,
                    "routes": list(t.routes),
                    "gold_fine": t.gold_fine.value if t.gold_fine else None,
                    "evidence_present": t.evidence_present,
                    "evidence_spans": [list(s) for s in t.evidence_spans],
                    "evidence_sentences": list(t.evidence_sentences),
                    "has_trap": t.has_trap,
                }
                for rid, t in sorted(self.report_truth.items())
            },
            "stays": {
                hadm: {"icd_label": t.icd_label.value, "pe_codes": list(t.pe_codes)}
                for hadm, t in sorted(self.stay_truth.items())
            },
        }
        with open(paths["ground_truth"], "w", encoding="utf-8") as fh:
            json.dump(truth, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return paths


# -- templates ---------------------------------------------------------------
# Filler sentences contain no inclusion keyword and no identifier term; the
# recovery tests would fail loudly if one slipped in.

_FILLER_FINDINGS = (
    "The lungs are clear.",
    "No focal consolidation is seen.",
    "Mild dependent atelectasis at the lung bases.",
    "The heart size is normal.",
    "No pleural effusion.",
    "Degenerative changes of the thoracic spine.",
    "Small hiatal hernia is noted.",
    "The thoracic aorta is normal in caliber.",
    "Trace pericardial fluid.",
    "Scattered calcified granulomas.",
)

_FILLER_IMPRESSION = (
    "No acute cardiopulmonary abnormality.",
    "Stable examination.",
    "Findings as above.",
)

_NON_CTPA_EXAMS = (
    ("CT abdomen and pelvis with contrast.", "Abdominal pain."),
    ("Portable chest radiograph.", "Fever and cough."),
    ("MRI brain without contrast.", "Headache."),
    ("Ultrasound of the right upper quadrant.", "Elevated liver enzymes."),
)

_NON_CTPA_FINDINGS = (
    "The liver is unremarkable.",
    "No free fluid in the abdomen.",
    "The kidneys enhance symmetrically.",
    "Unremarkable osseous structures.",
)

_CTPA_INDICATIONS_PLAIN = (
    "Chest pain.",
    "Shortness of breath.",
    "Hypoxia and tachycardia.",
    "Pleuritic chest pain.",
)

# Column-2 phrases embedded in indication lines (HistoryPeTerms route).
_CTPA_INDICATIONS_PE = (
    "Evaluate for pulmonary embolism.",
    "Rule out pulmonary embolus.",
    "Concern for pulmonary thromboembolism.",
    "Assess for pulmonary artery embolism.",
)

# Column-1 phrases embedded mid-line in technique bodies (ProcedureTerms route).
_TECHNIQUES_PROCEDURE = (
    "Multidetector CTA chest with intravenous contrast.",
    "Imaging performed as CTA pulmonary angiogram following contrast bolus.",
    "Standard CTPA acquisition in the arterial phase.",
    "Contrast enhanced chest CTA acquired helically.",
)

_TECHNIQUE_PLAIN = "Helical acquisition of the thorax with intravenous contrast."

# Column-3 descriptors: standalone title line or dedicated section header.
_CTPA_TITLES = (
    "CTA chest with and without intravenous contrast",
    "CTA of the chest for suspected vascular disease",
    "CTA thorax arterial phase imaging",
)
_CTPA_SECTION_HEADER = "CTA CHEST:"
_CTPA_SECTION_BODY = "Acquired in the arterial phase after contrast."

_EVIDENCE_ACUTE = (
    "There is an acute pulmonary embolism within the right lower lobe artery.",
    "Acute and chronic pulmonary emboli are identified.",
    "Acute PE involving the left main pulmonary artery.",
    "Large filling defect in the right interlobar artery consistent with acute embolism.",
)

_EVIDENCE_SUBSEGMENTAL = (
    "Acute pulmonary embolism confined to a single subsegmental branch of the left lower lobe.",
    "Subsegmental acute PE in the right lower lobe without central involvement.",
)

_EVIDENCE_CHRONIC = (
    "Chronic pulmonary embolism is again seen, unchanged from the prior examination.",
    "Chronic PE within the right lower lobe, similar to the last examination.",
    "Findings consistent with chronic organized thromboembolism, stable over time.",
)

_EVIDENCE_NEGATIVE = (
    "No evidence of pulmonary embolism.",
    "No filling defect is identified in the central arteries.",
    "The study is negative for pulmonary embolism.",
)

_EVIDENCE_EQUIVOCAL = (
    "Possible tiny filling defect versus respiratory motion artifact.",
    "Equivocal for pulmonary embolism given severe motion artifact.",
)

_TRAPS = (
    "Comparison is made to the prior CT PE protocol study.",
    "The patient remains on DVT prophylaxis during admission.",
    "Technique follows the departmental PE protocol.",
    "Recent DVT US of the lower extremities was unremarkable.",
)

_PE_CODES = (
    ("I2699", IcdVersion.ICD10),
    ("I269", IcdVersion.ICD10),
    ("I2602", IcdVersion.ICD10),
    ("41519", IcdVersion.ICD9),
    ("4151", IcdVersion.ICD9),
)
_SEPTIC_CODES = (
    ("I2601", IcdVersion.ICD10),
    ("I2690", IcdVersion.ICD10),
    ("41512", IcdVersion.ICD9),
)
_NOISE_CODES = (
    ("E119", IcdVersion.ICD10),
    ("I10", IcdVersion.ICD10),
    ("J189", IcdVersion.ICD10),
    ("N179", IcdVersion.ICD10),
    ("4280", IcdVersion.ICD9),
    ("25000", IcdVersion.ICD9),
    ("486", IcdVersion.ICD9),
)


class _Builder:
    """Accumulates report text while tracking absolute offsets."""

    def __init__(self) -> None:
        self.parts: list[str] = []
        self.length = 0
        self.evidence: list[tuple[int, int, str]] = []

    def add(self, text: str) -> int:
        start = self.length
        self.parts.append(text)
        self.length += len(text)
        return start

    def add_evidence(self, sentence: str) -> None:
        start = self.add(sentence)
        self.evidence.append((start, start + len(sentence), sentence))

    def text(self) -> str:
        return "".join(self.parts)


def _choice_weighted(rng: random.Random, mix: Mapping[PlantedClass, float]) -> PlantedClass:
    classes = sorted(mix, key=lambda c: c.value)
    weights = [mix[c] for c in classes]
    return rng.choices(classes, weights=weights, k=1)[0]


def _add_body(builder: _Builder, sentences: list[tuple[str, bool]]) -> None:
    """Body = ' ' + sentences joined by single spaces + newline."""
    for sentence, is_evidence in sentences:
        builder.add(" ")
        if is_evidence:
            builder.add_evidence(sentence)
        else:
            builder.add(sentence)
    builder.add("\n")


def _pick_route_plan(rng: random.Random) -> tuple[str, ...]:
    roll = rng.random()
    if roll < 0.45:
        return ("ProcedureTerms",)
    if roll < 0.65:
        return ("HistoryPeTerms",)
    if roll < 0.80:
        return ("CtpaSectionTerms",)
    return ("ProcedureTerms", "HistoryPeTerms")


def generate(spec: GeneratorSpec) -> SyntheticCorpus:
    rng = random.Random(spec.seed)
    base_time = datetime(2019, 1, 1, 8, 0, 0)

    reports: list[RadiologyReport] = []
    report_truth: dict[str, ReportTruth] = {}
    stay_members: dict[str, list[str]] = {}  # hadm -> included report ids
    current_stay: tuple[str, str] | None = None  # (hadm_id, subject_id)
    last_time = base_time

    for i in range(spec.n_reports):
        report_id = f"R{i:05d}"
        planted = _choice_weighted(rng, spec.mix)
        is_ctpa = planted != PlantedClass.NON_CTPA
        has_trap = rng.random() < spec.trap_rate

        inpatient = rng.random() < spec.inpatient_rate
        if inpatient and current_stay is not None and rng.random() < 0.12:
            hadm_id, subject_id = current_stay
            # occasional identical chart_time exercises the id tie-break
            chart_time = last_time if rng.random() < 0.10 else last_time + timedelta(
                minutes=rng.randrange(5, 180)
            )
        else:
            subject_id = f"P{i:05d}"
            hadm_id = f"H{i:05d}" if inpatient else None
            chart_time = last_time + timedelta(minutes=rng.randrange(10, 300))
        last_time = chart_time
        if inpatient:
            current_stay = (hadm_id, subject_id)

        builder = _Builder()
        routes: tuple[str, ...] = ()
        gold_fine: FineLabel | None = None

        if is_ctpa:
            routes = _pick_route_plan(rng)
            if "CtpaSectionTerms" in routes and rng.random() < 0.5:
                builder.add(rng.choice(_CTPA_TITLES))
                builder.add("\n")
                section_header = False
            else:
                section_header = "CtpaSectionTerms" in routes

            builder.add("EXAMINATION:")
            _add_body(builder, [("Cross sectional imaging of the thorax.", False)])

            builder.add("INDICATION:")
            if "HistoryPeTerms" in routes:
                indication = rng.choice(_CTPA_INDICATIONS_PE)
            else:
                indication = rng.choice(_CTPA_INDICATIONS_PLAIN)
            _add_body(builder, [(indication, False)])

            builder.add("TECHNIQUE:")
            if "ProcedureTerms" in routes:
                technique = rng.choice(_TECHNIQUES_PROCEDURE)
            else:
                technique = _TECHNIQUE_PLAIN
            _add_body(builder, [(technique, False)])

            if section_header:
                builder.add(_CTPA_SECTION_HEADER)
                _add_body(builder, [(_CTPA_SECTION_BODY, False)])

            if planted == PlantedClass.CTPA_ACUTE:
                if rng.random() < 0.18:
                    gold_fine = FineLabel.SUBSEGMENTAL
                    evidence = [rng.choice(_EVIDENCE_SUBSEGMENTAL)]
                else:
                    gold_fine = FineLabel.ACUTE
                    evidence = [rng.choice(_EVIDENCE_ACUTE)]
            elif planted == PlantedClass.CTPA_CHRONIC:
                gold_fine = FineLabel.CHRONIC
                evidence = [rng.choice(_EVIDENCE_CHRONIC)]
            elif planted == PlantedClass.CTPA_EQUIVOCAL:
                gold_fine = FineLabel.EQUIVOCAL
                evidence = [rng.choice(_EVIDENCE_EQUIVOCAL)]
            else:
                gold_fine = FineLabel.NEGATIVE
                # half get a negated evidence sentence, half no keywords at
                # all so the default-negative branch fires
                evidence = [rng.choice(_EVIDENCE_NEGATIVE)] if rng.random() < 0.5 else []

            findings: list[tuple[str, bool]] = [
                (s, False) for s in rng.sample(_FILLER_FINDINGS, k=rng.randrange(2, 4))
            ]
            if has_trap:
                findings.insert(rng.randrange(len(findings) + 1), (rng.choice(_TRAPS), False))
            if evidence:
                findings.insert(rng.randrange(len(findings) + 1), (evidence[0], True))
            builder.add("FINDINGS:")
            _add_body(builder, findings)

            builder.add("IMPRESSION:")
            _add_body(builder, [(rng.choice(_FILLER_IMPRESSION), False)])
        else:
            exam, indication = rng.choice(_NON_CTPA_EXAMS)
            builder.add("EXAMINATION:")
            _add_body(builder, [(exam, False)])
            builder.add("INDICATION:")
            _add_body(builder, [(indication, False)])
            findings = [
                (s, False)
                for s in rng.sample(_NON_CTPA_FINDINGS, k=rng.randrange(2, 4))
            ]
            if has_trap:
                findings.insert(rng.randrange(len(findings) + 1), (rng.choice(_TRAPS), False))
            builder.add("FINDINGS:")
            _add_body(builder, findings)
            builder.add("IMPRESSION:")
            _add_body(builder, [("No acute abnormality.", False)])

        report = RadiologyReport(
            report_id=report_id,
            subject_id=subject_id,
            hadm_id=hadm_id,
            chart_time=chart_time,
            text=builder.text(),
        )
        reports.append(report)
        report_truth[report_id] = ReportTruth(
            report_id=report_id,
            planted_class=planted,
            included=is_ctpa,
            routes=routes,
            gold_fine=gold_fine,
            evidence_present=bool(builder.evidence),
            evidence_spans=tuple((s, e) for s, e, _ in builder.evidence),
            evidence_sentences=tuple(t for _, _, t in builder.evidence),
            has_trap=has_trap,
        )
        if is_ctpa and hadm_id is not None:
            stay_members.setdefault(hadm_id, []).append(report_id)

    # Discharge codes per stay with at least one planted CTPA report.
    icd_records: list[IcdCodeRecord] = []
    stay_truth: dict[str, StayTruth] = {}
    for hadm_id in sorted(stay_members):
        members = stay_members[hadm_id]
        stay_positive = any(
            collapse_label(report_truth[rid].gold_fine) == BinaryLabel.POSITIVE
            for rid in members
        )
        planted_pe: list[tuple[str, IcdVersion]] = []
        septic: list[tuple[str, IcdVersion]] = []
        if stay_positive:
            if rng.random() < 0.85:
                planted_pe.append(rng.choice(_PE_CODES))
        else:
            roll = rng.random()
            if roll < 0.08:
                planted_pe.append(rng.choice(_PE_CODES))
            elif roll < 0.28:
                septic.append(rng.choice(_SEPTIC_CODES))
        noise = rng.sample(_NOISE_CODES, k=rng.randrange(0, 4))
        for code, version in noise + septic + planted_pe:
            icd_records.append(
                IcdCodeRecord(hadm_id=hadm_id, icd_version=version, code=code)
            )
        stay_truth[hadm_id] = StayTruth(
            hadm_id=hadm_id,
            icd_label=BinaryLabel.POSITIVE if planted_pe else BinaryLabel.NEGATIVE,
            pe_codes=tuple(code for code, _ in planted_pe),
        )

    return SyntheticCorpus(
        spec=spec,
        reports=tuple(reports),
        icd=tuple(icd_records),
        report_truth=report_truth,
        stay_truth=stay_truth,
    )
