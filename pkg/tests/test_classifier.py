"""Baseline rule classifier and external-adapter tests.

The 100-sentence oracle set below was labeled by hand from the rule
definitions (negation cue within the 6 tokens preceding a keyword; "chronic"
in that window with no "acute" anywhere in the sentence; otherwise positive;
sentences without keywords do not vote). Every entry is traceable to one
rule.
"""

import json
import sys
import textwrap

import httpx
import pytest
from hypothesis import given, settings, strategies as st

from pepheno.classifier import (
    AdapterError,
    AdapterProtocolError,
    AdapterRequest,
    BaselineClassifier,
    HttpAdapter,
    PipeAdapter,
    baseline_classify,
    baseline_votes,
    classify_report,
    external_classify,
)
from pepheno.corpus import BinaryLabel, PredictionSource
from pepheno.extractor import ExtractedEvidence

POS = True
NEG = False
SKIP = None  # no keyword -> not a voting sentence

ORACLE_SENTENCES = [
    # -- plain positives ------------------------------------------------------
    ("Acute pulmonary embolism is present.", POS),
    ("Large central embolus.", POS),
    ("Occlusive thromboembolism in the right lower lobe.", POS),
    ("There is a filling defect.", POS),
    ("Acute PE.", POS),
    ("Segmental emboli bilaterally.", POS),
    ("New embolic disease.", POS),
    ("Saddle embolism identified.", POS),
    ("VTE burden is high.", POS),
    ("Multiple filling defects.", POS),
    # -- negation cue within window -------------------------------------------
    ("No PE.", NEG),
    ("No evidence of pulmonary embolism.", NEG),
    ("Without filling defect.", NEG),
    ("No acute PE.", NEG),
    ("No central or segmental emboli.", NEG),
    ("Negative for pulmonary embolism.", NEG),
    ("Examination without evidence of thromboembolism.", NEG),
    ("No definite filling defect.", NEG),
    ("Study negative for emboli.", NEG),
    ("No new filling defects.", NEG),
    # -- negation outside the 6-token window ----------------------------------
    ("No prior history of cancer, now acute pulmonary embolism present.", POS),
    ("No history of cancer now acute pulmonary embolism present.", NEG),
    ("No change in the large acute central embolus.", POS),
    ("No fever, cough, or chest pain previously reported today, acute embolus present.", POS),
    ("Without any prior deep vein issues on record anywhere, embolism is seen.", POS),
    # -- chronic modifier -------------------------------------------------------
    ("Chronic pulmonary embolism.", NEG),
    ("Chronic PE unchanged.", NEG),
    ("Stable chronic emboli.", NEG),
    ("Chronic organized thromboembolism.", NEG),
    ("Chronic filling defect.", NEG),
    ("Known chronic PE followed over years.", NEG),
    ("Chronic PE with acute component.", POS),
    ("Acute on chronic pulmonary embolism.", POS),
    ("Acute and chronic pulmonary emboli.", POS),
    ("Chronic appearing embolus.", NEG),
    # -- multiple keywords, mixed outcomes --------------------------------------
    ("No prior emboli were seen on that study, now acute pulmonary embolism.", POS),
    ("No thromboembolism previously, now acute embolus present.", NEG),
    ("Chronic PE stable, acute filling defect new.", POS),
    ("No PE and no VTE.", NEG),
    ("Chronic emboli and chronic filling defects.", NEG),
    # -- cue after the keyword does not negate ----------------------------------
    ("PE is unlikely.", POS),
    ("Pulmonary embolism rather than artifact.", POS),
    ("Emboli are absent.", POS),
    ("Filling defect without extension.", POS),
    ("PE not seen.", POS),
    # -- no keyword: not a voting sentence ---------------------------------------
    ("The lungs are clear.", SKIP),
    ("No effusion.", SKIP),
    ("CT PE protocol study.", SKIP),
    ("On VTE ppx.", SKIP),
    ("Chronic changes of emphysema.", SKIP),
    ("Patient had DVT ultrasound yesterday.", SKIP),
    ("Normal heart.", SKIP),
    ("the pe valve is open.", SKIP),
    ("Pect artifact.", SKIP),
    ("The peri hilar regions are clear.", SKIP),
    # -- exclusion masking interacting with keywords ------------------------------
    ("Prior CT PE study was reviewed.", SKIP),
    ("VTE prophylaxis continued, no new VTE events.", NEG),
    ("PE CT images reviewed, acute PE present.", POS),
    ("DVT protocol scan shows embolus.", POS),
    ("PE scan was negative for PE.", NEG),
    # -- chronic and negation interplay -------------------------------------------
    ("No chronic PE.", NEG),
    ("Chronic PE is non occlusive.", NEG),
    ("Without acute PE.", NEG),
    ("No evidence of acute or chronic pulmonary embolism.", NEG),
    ("Unlikely to represent acute pulmonary embolism.", NEG),
]

# Window-boundary sweep: "No" + k fillers + keyword; the cue leaves the
# 6-token window at k == 6.
_FILLERS = ["further", "additional", "imaging", "review", "of", "records",
            "from", "outside", "hospitals"]
for k in range(10):
    sentence = "No " + " ".join(_FILLERS[:k] + ["PE."]) if k else "No PE."
    ORACLE_SENTENCES.append((sentence, NEG if k <= 5 else POS))

ORACLE_SENTENCES += [
    # -- multi-token cues ----------------------------------------------------
    ("Negative for emboli.", NEG),
    ("No evidence of filling defect.", NEG),
    ("Rather than pulmonary embolism.", NEG),
    ("Evaluation negative for acute PE.", NEG),
    ("Deemed unlikely acute pulmonary embolism.", NEG),
    # -- keyword-variant sweep -------------------------------------------------
    ("Unchanged pulmonary embolus is identified.", POS),
    ("Unchanged pulmonary emboli are identified.", POS),
    ("Unchanged pulmonary embolic disease is identified.", POS),
    ("Unchanged pulmonary thromboembolism is identified.", POS),
    ("Unchanged pulmonary artery embolus is identified.", POS),
    ("Unchanged pulmonary artery emboli are identified.", POS),
    ("Unchanged pulmonary artery embolism is identified.", POS),
    ("Unchanged pulmonary arterial embolus is identified.", POS),
    ("Unchanged pulmonary arterial emboli are identified.", POS),
    ("Unchanged pulmonary arterial embolism is identified.", POS),
    ("Scattered thromboemboli are identified.", POS),
    ("Several small embolisms are identified.", POS),
    ("An embolus is identified.", POS),
    ("Bilateral emboli are identified.", POS),
    ("Embolic material is identified.", POS),
    # -- case and punctuation robustness ----------------------------------------
    ("ACUTE PULMONARY EMBOLISM.", POS),
    ("acute pe present.", SKIP),
    ("Acute pulmonary embolism, chronic elsewhere.", POS),
    ("Filling defect favoring embolism.", POS),
    ("No PE, no DVT.", NEG),
]

assert len(ORACLE_SENTENCES) == 100


@pytest.mark.parametrize(
    "sentence,expected", ORACLE_SENTENCES,
    ids=[f"s{i:03d}" for i in range(len(ORACLE_SENTENCES))],
)
def test_baseline_oracle_sentence(sentence, expected, terms):
    votes = baseline_votes(sentence, terms)
    if expected is SKIP:
        assert votes == []
    else:
        assert len(votes) == 1
        assert votes[0].positive is expected


class TestBaselineClassify:
    def test_negated_note(self, terms):
        assert baseline_classify("No evidence of pulmonary embolism.", terms) == (
            BinaryLabel.NEGATIVE, 0.0)

    def test_acute_and_chronic_is_positive(self, terms):
        assert baseline_classify("Acute and chronic pulmonary emboli.", terms) == (
            BinaryLabel.POSITIVE, 1.0)

    def test_chronic_plus_negated_acute(self, terms):
        note = "Chronic PE in segmental branches. No acute filling defect."
        assert baseline_classify(note, terms) == (BinaryLabel.NEGATIVE, 0.0)

    def test_mixed_votes_confidence(self, terms):
        note = "Acute PE in the RLL. No filling defect elsewhere."
        label, confidence = baseline_classify(note, terms)
        assert label == BinaryLabel.POSITIVE
        assert confidence == pytest.approx(0.5)

    def test_no_voting_sentences_is_negative(self, terms):
        assert baseline_classify("Lungs are clear.", terms) == (BinaryLabel.NEGATIVE, 0.0)

    def test_list_items_vote_separately(self, terms):
        note = "1. No PE\n2. Acute embolus"
        label, confidence = baseline_classify(note, terms)
        assert label == BinaryLabel.POSITIVE
        assert confidence == pytest.approx(0.5)

    @settings(max_examples=150, deadline=None)
    @given(note=st.text(alphabet="PE actueohrnicl .\n", max_size=120))
    def test_confidence_in_unit_interval_and_label_iff_positive(self, terms, note):
        label, confidence = baseline_classify(note, terms)
        assert 0.0 <= confidence <= 1.0
        assert (label == BinaryLabel.POSITIVE) == (confidence > 0)

    def test_deterministic(self, terms):
        note = "Acute PE. Chronic emboli. No filling defect."
        assert baseline_classify(note, terms) == baseline_classify(note, terms)


def _evidence(report_id="R1", note="Acute PE.", present=True):
    sentences = ()
    if present:
        from pepheno.extractor import EvidenceSentence
        from pepheno.sections import SectionKind

        sentences = (EvidenceSentence(note, SectionKind.FINDINGS, 0, len(note)),)
    return ExtractedEvidence(
        report_id=report_id,
        sentences=sentences,
        merged_note=note if present else "",
        keywords_hit=frozenset({"PE"}) if present else frozenset(),
    )


class _AlwaysPositive:
    name = "adversary"
    source = PredictionSource.EXTERNAL

    def classify(self, note):
        return BinaryLabel.POSITIVE, 1.0


class TestClassifyReport:
    def test_default_negative_without_invoking_classifier(self, terms):
        calls = []

        class Recording:
            name = "recording"
            source = PredictionSource.EXTERNAL

            def classify(self, note):
                calls.append(note)
                return BinaryLabel.POSITIVE, 1.0

        prediction = classify_report(_evidence(present=False), Recording())
        assert prediction.binary == BinaryLabel.NEGATIVE
        assert prediction.source == PredictionSource.DEFAULT_NEGATIVE
        assert not prediction.evidence_present
        assert calls == []

    def test_default_negative_beats_always_positive(self):
        prediction = classify_report(_evidence(present=False), _AlwaysPositive())
        assert prediction.binary == BinaryLabel.NEGATIVE

    def test_baseline_source_attribution(self, terms):
        prediction = classify_report(_evidence(), BaselineClassifier(terms))
        assert prediction.source == PredictionSource.BASELINE
        assert prediction.binary == BinaryLabel.POSITIVE
        assert prediction.evidence_present

    @settings(max_examples=100, deadline=None)
    @given(report_id=st.text(min_size=1, max_size=8))
    def test_default_negative_is_unconditional(self, report_id):
        prediction = classify_report(
            _evidence(report_id=report_id, present=False), _AlwaysPositive()
        )
        assert prediction.binary == BinaryLabel.NEGATIVE
        assert prediction.source == PredictionSource.DEFAULT_NEGATIVE


# -- pipe adapter ---------------------------------------------------------------

_SIDECAR_OK = textwrap.dedent(
    """
    import sys, json
    for line in sys.stdin:
        req = json.loads(line)
        label = "positive" if "acute" in req["text"].lower() else "negative"
        print(json.dumps({"id": req["id"], "label": label, "confidence": 0.9}), flush=True)
    """
)

_SIDECAR_SHUFFLED = textwrap.dedent(
    """
    import sys, json
    buf = []
    def emit():
        for req in reversed(buf):
            print(json.dumps({"id": req["id"], "label": "negative",
                              "confidence": 0.5}), flush=True)
        buf.clear()
    for line in sys.stdin:
        buf.append(json.loads(line))
        if len(buf) == 2:
            emit()
    emit()
    """
)

_SIDECAR_BAD_LABEL = textwrap.dedent(
    """
    import sys, json
    for line in sys.stdin:
        req = json.loads(line)
        print(json.dumps({"id": req["id"], "label": "maybe", "confidence": 0.5}), flush=True)
    """
)

_SIDECAR_DUPLICATE = textwrap.dedent(
    """
    import sys, json
    for line in sys.stdin:
        req = json.loads(line)
        rec = json.dumps({"id": req["id"], "label": "negative", "confidence": 0.5})
        print(rec, flush=True)
        print(rec, flush=True)
    """
)

# Crashes after one answer on the first run (state file marks the retry).
_SIDECAR_FLAKY = textwrap.dedent(
    """
    import sys, json, os
    marker = sys.argv[1]
    first_run = not os.path.exists(marker)
    if first_run:
        open(marker, "w").close()
    n = 0
    for line in sys.stdin:
        req = json.loads(line)
        print(json.dumps({"id": req["id"], "label": "negative", "confidence": 0.5}),
              flush=True)
        n += 1
        if first_run and n == 1:
            sys.exit(1)
    """
)


def _pipe(tmp_path, script, *extra, **kwargs):
    path = tmp_path / "sidecar.py"
    path.write_text(script)
    return PipeAdapter(command=[sys.executable, str(path), *extra], **kwargs)


def _requests(n=3):
    return [AdapterRequest(id=f"r{i}", text=f"note {i} acute" if i % 2 else f"note {i}")
            for i in range(n)]


class TestPipeAdapter:
    def test_round_trip_joined_by_id(self, tmp_path):
        adapter = _pipe(tmp_path, _SIDECAR_OK)
        requests = _requests(5)
        responses = external_classify(requests, adapter)
        assert [r.id for r in responses] == [q.id for q in requests]
        assert responses[1].label == "positive"
        assert responses[0].label == "negative"

    def test_out_of_order_responses_join(self, tmp_path):
        adapter = _pipe(tmp_path, _SIDECAR_SHUFFLED, window=4)
        requests = _requests(6)
        responses = adapter.classify_batch(requests)
        assert [r.id for r in responses] == [q.id for q in requests]

    def test_bad_label_is_protocol_error(self, tmp_path):
        adapter = _pipe(tmp_path, _SIDECAR_BAD_LABEL, retries=2)
        with pytest.raises(AdapterProtocolError, match="maybe"):
            adapter.classify_batch(_requests(2))

    def test_duplicate_id_is_protocol_error(self, tmp_path):
        adapter = _pipe(tmp_path, _SIDECAR_DUPLICATE, window=1)
        with pytest.raises(AdapterProtocolError, match="duplicate"):
            adapter.classify_batch(_requests(2))

    def test_retry_resumes_unanswered(self, tmp_path):
        marker = tmp_path / "ran-once"
        adapter = _pipe(tmp_path, _SIDECAR_FLAKY, str(marker), retries=1, window=1)
        responses = adapter.classify_batch(_requests(3))
        assert len(responses) == 3

    def test_hard_error_after_retries_exhausted(self, tmp_path):
        path = tmp_path / "sidecar.py"
        path.write_text("import sys; sys.exit(3)\n")
        adapter = PipeAdapter(command=[sys.executable, str(path)], retries=1, timeout=5)
        with pytest.raises(AdapterError):
            adapter.classify_batch(_requests(2))

    def test_timeout(self, tmp_path):
        path = tmp_path / "sidecar.py"
        path.write_text("import time\ntime.sleep(60)\n")
        adapter = PipeAdapter(command=[sys.executable, str(path)], timeout=0.5, retries=0)
        with pytest.raises(AdapterError, match="timed out"):
            adapter.classify_batch(_requests(1))


# -- http adapter ----------------------------------------------------------------

def _http(handler, **kwargs):
    transport = httpx.MockTransport(handler)
    return HttpAdapter(
        endpoint="http://sidecar.test",
        client_factory=lambda: httpx.Client(transport=transport),
        **kwargs,
    )


class TestHttpAdapter:
    def test_round_trip(self):
        def handler(request: httpx.Request) -> httpx.Response:
            assert request.url.path == "/classify"
            batch = json.loads(request.content)
            return httpx.Response(200, json=[
                {"id": r["id"], "label": "positive", "confidence": 1.0} for r in batch
            ])

        responses = _http(handler).classify_batch(_requests(4))
        assert [r.binary for r in responses] == [BinaryLabel.POSITIVE] * 4

    def test_batching_respects_batch_size(self):
        sizes = []

        def handler(request):
            batch = json.loads(request.content)
            sizes.append(len(batch))
            return httpx.Response(200, json=[
                {"id": r["id"], "label": "negative", "confidence": 0.0} for r in batch
            ])

        _http(handler, batch_size=2).classify_batch(_requests(5))
        assert sizes == [2, 2, 1]

    def test_unknown_id_is_protocol_error(self):
        def handler(request):
            return httpx.Response(200, json=[
                {"id": "stranger", "label": "negative", "confidence": 0.0}
            ])

        with pytest.raises(AdapterProtocolError, match="unknown id"):
            _http(handler).classify_batch(_requests(1))

    def test_missing_id_is_protocol_error(self):
        def handler(request):
            batch = json.loads(request.content)
            return httpx.Response(200, json=[
                {"id": r["id"], "label": "negative", "confidence": 0.0}
                for r in batch[:-1]
            ])

        with pytest.raises(AdapterProtocolError, match="missing"):
            _http(handler).classify_batch(_requests(3))

    def test_confidence_out_of_range_rejected(self):
        def handler(request):
            batch = json.loads(request.content)
            return httpx.Response(200, json=[
                {"id": r["id"], "label": "negative", "confidence": 1.5} for r in batch
            ])

        with pytest.raises(AdapterProtocolError, match="confidence"):
            _http(handler).classify_batch(_requests(1))

    def test_http_error_retried_then_raised(self):
        attempts = []

        def handler(request):
            attempts.append(1)
            raise httpx.ConnectError("refused")

        with pytest.raises(AdapterError, match="unreachable"):
            _http(handler, retries=2).classify_batch(_requests(1))
        assert len(attempts) == 3

    def test_transient_error_then_success(self):
        attempts = []

        def handler(request):
            attempts.append(1)
            if len(attempts) == 1:
                raise httpx.ConnectError("refused")
            batch = json.loads(request.content)
            return httpx.Response(200, json=[
                {"id": r["id"], "label": "negative", "confidence": 0.0} for r in batch
            ])

        responses = _http(handler, retries=2).classify_batch(_requests(2))
        assert len(responses) == 2
