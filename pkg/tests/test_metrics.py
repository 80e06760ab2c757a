"""Evaluation metric tests.

Frozen expected values were computed up front by an independent oracle
script (textbook Wilson formula at 30-digit precision); the property tests
re-derive intervals through the quadratic-root form in oracles.py.
"""

import pytest
from hypothesis import given, settings, strategies as st

from pepheno.corpus import BinaryLabel, FineLabel
from pepheno.metrics import (
    CiMethod,
    ConfusionCounts,
    confusion,
    format_two_by_two,
    metrics,
    proportion_ci,
    summarize,
)

from oracles import wilson_by_roots

P = BinaryLabel.POSITIVE
N = BinaryLabel.NEGATIVE

# Published 2x2 arms: language-model arm over all reports, ICD arm over stays.
LM_ARM = ConfusionCounts(tp=1470, fp=204, fn=121, tn=18147)
ICD_ARM = ConfusionCounts(tp=1276, fp=247, fn=61, tn=10406)

# Frozen from the standalone high-precision oracle run (10 d.p.).
WILSON_FROZEN = {
    (1470, 1591): (0.9098762401, 0.9359758617),
    (18147, 18351): (0.9872608670, 0.9903013767),
    (1470, 1674): (0.8615937645, 0.8929471329),
    (18147, 18268): (0.9920919582, 0.9944533794),
    (1276, 1337): (0.9418289929, 0.9643184058),
    (10406, 10653): (0.9737797248, 0.9795046080),
    (1276, 1523): (0.8184611337, 0.8554791723),
    (10406, 10467): (0.9925216855, 0.9954600388),
}


class TestConfusion:
    def test_empty(self):
        assert confusion([]) == ConfusionCounts(0, 0, 0, 0)

    def test_one_in_each_cell(self):
        counts = confusion([(P, P), (N, P), (P, N), (N, N)])
        assert counts == ConfusionCounts(tp=1, fp=1, fn=1, tn=1)
        assert counts.total == 4

    def test_reconstructed_lm_arm(self):
        pairs = ([(P, P)] * 1470 + [(N, P)] * 204 + [(P, N)] * 121 + [(N, N)] * 18147)
        assert confusion(pairs) == LM_ARM

    def test_permutation_invariance(self):
        pairs = [(P, P), (N, P), (P, N), (N, N), (P, P), (N, N)]
        assert confusion(pairs) == confusion(list(reversed(pairs)))

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ConfusionCounts(tp=-1, fp=0, fn=0, tn=0)


class TestMetricsPoints:
    def test_lm_arm_points(self):
        report = metrics(LM_ARM)
        assert report.sensitivity.value == pytest.approx(0.9239, abs=1e-4)
        assert report.specificity.value == pytest.approx(0.9889, abs=1e-4)
        assert report.ppv.value == pytest.approx(0.8781, abs=1e-4)
        assert report.npv.value == pytest.approx(0.9934, abs=1e-4)

    def test_icd_arm_points(self):
        report = metrics(ICD_ARM)
        assert report.sensitivity.value == pytest.approx(0.9544, abs=1e-4)
        assert report.specificity.value == pytest.approx(0.9768, abs=1e-4)
        assert report.ppv.value == pytest.approx(0.8378, abs=1e-4)
        assert report.npv.value == pytest.approx(0.9942, abs=1e-4)

    def test_zero_denominator_undefined(self):
        report = metrics(ConfusionCounts(tp=0, fp=0, fn=0, tn=10))
        assert report.sensitivity.value is None
        assert report.sensitivity.ci_low is None
        assert report.specificity.value == 1.0
        assert report.ppv.value is None
        assert report.npv.value == 1.0

    def test_all_zero_no_faults(self):
        report = metrics(ConfusionCounts(0, 0, 0, 0))
        assert all(
            estimate.value is None
            for estimate in (report.sensitivity, report.specificity, report.ppv, report.npv)
        )


class TestWilson:
    @pytest.mark.parametrize("k,n", sorted(WILSON_FROZEN))
    def test_frozen_oracle_values(self, k, n):
        low, high = proportion_ci(k, n, CiMethod.WILSON)
        expected_low, expected_high = WILSON_FROZEN[(k, n)]
        assert low == pytest.approx(expected_low, abs=5e-10)
        assert high == pytest.approx(expected_high, abs=5e-10)

    def test_published_rounding(self):
        report = metrics(LM_ARM)
        assert (round(report.sensitivity.ci_low, 2),
                round(report.sensitivity.ci_high, 2)) == (0.91, 0.94)
        assert (round(report.ppv.ci_low, 2), round(report.ppv.ci_high, 2)) == (0.86, 0.89)
        icd = metrics(ICD_ARM)
        assert (round(icd.sensitivity.ci_low, 2),
                round(icd.sensitivity.ci_high, 2)) == (0.94, 0.96)
        assert (round(icd.ppv.ci_low, 2), round(icd.ppv.ci_high, 2)) == (0.82, 0.86)

    def test_extreme_proportions_clamped(self):
        low, high = proportion_ci(10, 10)
        assert high == 1.0 and 0 < low < 1
        low, high = proportion_ci(0, 7)
        assert low == 0.0 and 0 < high < 1

    @settings(max_examples=300, deadline=None)
    @given(k=st.integers(0, 500), extra=st.integers(0, 500))
    def test_matches_quadratic_root_oracle(self, k, extra):
        n = k + extra
        if n == 0:
            return
        low, high = proportion_ci(k, n, CiMethod.WILSON)
        oracle_low, oracle_high = wilson_by_roots(k, n)
        assert low == pytest.approx(max(0.0, oracle_low), abs=1e-12)
        assert high == pytest.approx(min(1.0, oracle_high), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(k=st.integers(1, 400), extra=st.integers(1, 400), scale=st.integers(2, 5))
    def test_ci_brackets_point_and_shrinks_with_n(self, k, extra, scale):
        n = k + extra
        p = k / n
        low, high = proportion_ci(k, n)
        assert low < p < high
        low2, high2 = proportion_ci(k * scale, n * scale)
        assert (high2 - low2) < (high - low)

    def test_wald_method_available(self):
        wald_low, wald_high = proportion_ci(1470, 1591, CiMethod.WALD)
        assert wald_low == pytest.approx(0.910922, abs=1e-6)
        assert wald_high == pytest.approx(0.936973, abs=1e-6)
        wilson = proportion_ci(1470, 1591, CiMethod.WILSON)
        assert (wald_low, wald_high) != wilson


@settings(max_examples=200, deadline=None)
@given(tp=st.integers(0, 300), fp=st.integers(0, 300),
       fn=st.integers(0, 300), tn=st.integers(0, 300))
def test_label_swap_duality(tp, fp, fn, tn):
    report = metrics(ConfusionCounts(tp, fp, fn, tn))
    swapped = metrics(ConfusionCounts(tp=tn, fp=fn, fn=fp, tn=tp))
    assert swapped.sensitivity == report.specificity
    assert swapped.specificity == report.sensitivity
    assert swapped.ppv == report.npv
    assert swapped.npv == report.ppv


class TestFormatting:
    def test_two_by_two_shape(self):
        text = format_two_by_two("language model arm", metrics(LM_ARM))
        assert "Sensitivity = 92.4%" in text
        assert "PPV = 87.8%" in text
        assert "1,470" in text and "18,147" in text

    def test_undefined_rendered(self):
        text = format_two_by_two("empty", metrics(ConfusionCounts(0, 0, 0, 10)))
        assert "undefined" in text


def paper_fine_labels():
    """Fine-label multiset matching the published Table 1 counts."""
    return (
        [FineLabel.ACUTE] * (1591 - 233)
        + [FineLabel.SUBSEGMENTAL] * 233
        + [FineLabel.CHRONIC] * 345
        + [FineLabel.EQUIVOCAL] * 104
        + [FineLabel.NEGATIVE] * (18351 - 345 - 104)
    )


class TestSummarize:
    def test_paper_counts(self):
        report = summarize(paper_fine_labels())
        assert report.total == 19942
        assert report.positive_count == 1591
        assert round(100 * report.positivity_rate, 2) == 7.98
        assert round(report.percent(report.positive_count), 1) == 8.0
        assert round(report.percent(report.fine_counts[FineLabel.SUBSEGMENTAL]), 1) == 1.2
        assert round(report.percent(report.fine_counts[FineLabel.CHRONIC]), 1) == 1.7
        assert round(report.percent(report.fine_counts[FineLabel.EQUIVOCAL]), 1) == 0.5

    def test_chronic_percent_line(self):
        report = summarize(paper_fine_labels())
        lines = "\n".join(report.table_lines())
        assert "Chronic PE" in lines and "(1.7%)" in lines
        assert "7.98%" in lines

    def test_all_negative(self):
        report = summarize([FineLabel.NEGATIVE] * 50)
        assert report.positive_count == 0
        assert report.positivity_rate == 0.0
        assert f"{100 * report.positivity_rate:.2f}" == "0.00"

    def test_empty_corpus(self):
        report = summarize([])
        assert report.total == 0 and report.positivity_rate == 0.0

    def test_stay_split_with_corpus(self):
        from datetime import datetime
        from pepheno.corpus import PhenotypeLabel, RadiologyReport, ReportCorpus

        reports = (
            RadiologyReport("R1", "P1", "H1", datetime(2019, 1, 1), "x"),
            RadiologyReport("R2", "P2", None, datetime(2019, 1, 2), "x"),
        )
        corpus = ReportCorpus(reports=reports)
        labels = {
            "R1": PhenotypeLabel.from_fine(FineLabel.ACUTE),
            "R2": PhenotypeLabel.from_fine(FineLabel.NEGATIVE),
        }
        report = summarize(labels, corpus)
        assert report.inpatient_count == 1
        assert report.er_only_count == 1
        assert report.total == 2
