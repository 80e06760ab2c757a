"""Confusion tables, diagnostic metrics with 95% CIs, and corpus summaries.

Wilson score intervals are the default (z = 1.959964); the normal
approximation (Wald) sits behind a flag for comparison. Zero denominators
yield Undefined estimates rather than faults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .corpus import (
    BinaryLabel,
    FineLabel,
    PhenotypeLabel,
    ReportCorpus,
    collapse_label,
)

Z95 = 1.959964


class CiMethod(str, Enum):
    WILSON = "wilson"
    WALD = "wald"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(pairs: Iterable[tuple[BinaryLabel, BinaryLabel]]) -> ConfusionCounts:
    """Count (gold, predicted) pairs into the 2x2 table."""
    tp = fp = fn = tn = 0
    for gold, predicted in pairs:
        gold_pos = BinaryLabel(gold) == BinaryLabel.POSITIVE
        pred_pos = BinaryLabel(predicted) == BinaryLabel.POSITIVE
        if gold_pos and pred_pos:
            tp += 1
        elif gold_pos:
            fn += 1
        elif pred_pos:
            fp += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def proportion_ci(
    successes: int, trials: int, method: CiMethod = CiMethod.WILSON, z: float = Z95
) -> tuple[float, float]:
    """95% interval for a binomial proportion; trials must be positive."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    if method == CiMethod.WILSON:
        z2 = z * z
        denom = 1.0 + z2 / trials
        center = (p + z2 / (2.0 * trials)) / denom
        half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
        low, high = center - half, center + half
        # exact at the boundaries (p=0 -> low=0, p=1 -> high=1); the float
        # evaluation can land one ulp off
        if successes == 0:
            low = 0.0
        if successes == trials:
            high = 1.0
    else:
        half = z * math.sqrt(p * (1.0 - p) / trials)
        low, high = p - half, p + half
    return max(0.0, low), min(1.0, high)


@dataclass(frozen=True)
class MetricEstimate:
    """Point estimate with CI; value None means Undefined (zero denominator)."""

    value: float | None
    ci_low: float | None
    ci_high: float | None
    numerator: int
    denominator: int

    @property
    def defined(self) -> bool:
        return self.value is not None

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "numerator": self.numerator,
            "denominator": self.denominator,
        }


def _estimate(successes: int, trials: int, method: CiMethod, z: float) -> MetricEstimate:
    if trials == 0:
        return MetricEstimate(None, None, None, successes, trials)
    low, high = proportion_ci(successes, trials, method, z)
    return MetricEstimate(successes / trials, low, high, successes, trials)


@dataclass(frozen=True)
class MetricsReport:
    counts: ConfusionCounts
    sensitivity: MetricEstimate
    specificity: MetricEstimate
    ppv: MetricEstimate
    npv: MetricEstimate
    ci_method: CiMethod

    def as_dict(self) -> dict:
        return {
            "counts": {
                "tp": self.counts.tp,
                "fp": self.counts.fp,
                "fn": self.counts.fn,
                "tn": self.counts.tn,
            },
            "n": self.counts.total,
            "ci_method": self.ci_method.value,
            "sensitivity": self.sensitivity.as_dict(),
            "specificity": self.specificity.as_dict(),
            "ppv": self.ppv.as_dict(),
            "npv": self.npv.as_dict(),
        }


def metrics(
    counts: ConfusionCounts, ci_method: CiMethod = CiMethod.WILSON, z: float = Z95
) -> MetricsReport:
    c = counts
    return MetricsReport(
        counts=c,
        sensitivity=_estimate(c.tp, c.tp + c.fn, ci_method, z),
        specificity=_estimate(c.tn, c.tn + c.fp, ci_method, z),
        ppv=_estimate(c.tp, c.tp + c.fp, ci_method, z),
        npv=_estimate(c.tn, c.tn + c.fn, ci_method, z),
        ci_method=ci_method,
    )


def _pct(estimate: MetricEstimate, digits: int = 1) -> str:
    if not estimate.defined:
        return "undefined"
    text = f"{estimate.value * 100:.{digits}f}%"
    if estimate.ci_low is not None:
        text += f" (95% CI {estimate.ci_low * 100:.{digits}f}-{estimate.ci_high * 100:.{digits}f})"
    return text


def format_two_by_two(name: str, report: MetricsReport) -> str:
    """Human-readable 2x2 table in the shape of the published performance tables."""
    c = report.counts
    lines = [
        f"== {name} (n={c.total:,})",
        f"{'':31s}{'True positive':>15s}{'True negative':>15s}",
        f"{'Predicts PE positive':31s}{c.tp:>15,}{c.fp:>15,}   PPV = {_pct(report.ppv)}",
        f"{'Predicts PE negative':31s}{c.fn:>15,}{c.tn:>15,}   NPV = {_pct(report.npv)}",
        f"{'':31s}Sensitivity = {_pct(report.sensitivity)}   "
        f"Specificity = {_pct(report.specificity)}",
    ]
    return "\n".join(lines)


@dataclass(frozen=True)
class SummaryReport:
    total: int
    fine_counts: dict[FineLabel, int]
    positive_count: int
    inpatient_count: int | None
    er_only_count: int | None

    @property
    def positivity_rate(self) -> float:
        """Positive fraction of all labeled reports (0 when empty)."""
        return self.positive_count / self.total if self.total else 0.0

    def percent(self, count: int) -> float:
        return 100.0 * count / self.total if self.total else 0.0

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "fine_counts": {k.value: v for k, v in self.fine_counts.items()},
            "positive_count": self.positive_count,
            "positivity_rate_pct": round(100.0 * self.positivity_rate, 2),
            "inpatient_count": self.inpatient_count,
            "er_only_count": self.er_only_count,
        }

    def table_lines(self) -> list[str]:
        def row(label: str, count: int) -> str:
            return f"{label:45s}{count:>10,} ({self.percent(count):.1f}%)"

        lines = [f"{'Radiology reports':45s}{self.total:>10,}"]
        if self.inpatient_count is not None:
            lines.append(row("Associated with inpatient hospitalization", self.inpatient_count))
            lines.append(row("Associated with emergency room visit only", self.er_only_count))
        lines.append(row("Acute PE", self.positive_count))
        lines.append(row("Subsegmental arteries only", self.fine_counts[FineLabel.SUBSEGMENTAL]))
        lines.append(row("Chronic PE", self.fine_counts[FineLabel.CHRONIC]))
        lines.append(row("Equivocal findings", self.fine_counts[FineLabel.EQUIVOCAL]))
        lines.append(f"{'CTPA positivity rate':45s}{100 * self.positivity_rate:>9.2f}%")
        return lines


def summarize(
    labels: Mapping[str, PhenotypeLabel] | Iterable[FineLabel],
    corpus: ReportCorpus | None = None,
) -> SummaryReport:
    """Corpus summary over gold fine labels.

    The "Acute PE" row counts all binary positives (acute including
    subsegmental-only), with subsegmental broken out, matching the published
    table convention. The inpatient/ER split needs the corpus and is omitted
    without it.
    """
    if isinstance(labels, Mapping):
        fine_labels = [label.fine for label in labels.values()]
        ids = set(labels)
    else:
        fine_labels = [FineLabel(label) for label in labels]
        ids = None

    fine_counts = {label: 0 for label in FineLabel}
    for fine in fine_labels:
        fine_counts[fine] += 1
    positive = sum(
        1 for fine in fine_labels if collapse_label(fine) == BinaryLabel.POSITIVE
    )

    inpatient = er_only = None
    if corpus is not None:
        relevant = [r for r in corpus if ids is None or r.report_id in ids]
        inpatient = sum(1 for r in relevant if not r.er_only)
        er_only = sum(1 for r in relevant if r.er_only)
    return SummaryReport(
        total=len(fine_labels),
        fine_counts=fine_counts,
        positive_count=positive,
        inpatient_count=inpatient,
        er_only_count=er_only,
    )
