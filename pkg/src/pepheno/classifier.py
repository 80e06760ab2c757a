"""PE-positive/negative classification of extracted evidence.

The classifier surface is pluggable: a rule baseline (so the pipeline runs
end-to-end without model weights) and an adapter that ships merged notes to
an external model process over a line-delimited pipe or an HTTP endpoint.
Whatever the classifier, a report with no extracted evidence is Negative
without invoking it (the default-negative rule).
"""

from __future__ import annotations

import json
import os
import re
import select
import subprocess
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import httpx

from .corpus import BinaryLabel, Prediction, PredictionSource
from .extractor import ExtractedEvidence, mask_exclusions, split_sentences
from .matching import match_term
from .terms import TermTable, load_terms

NEGATION_CUES = (
    "no",
    "without",
    "no evidence of",
    "negative for",
    "rather than",
    "unlikely",
)
NEGATION_WINDOW = 6  # tokens

_WORD_RE = re.compile(r"\w+")


class Classifier(Protocol):
    name: str
    source: PredictionSource

    def classify(self, note: str) -> tuple[BinaryLabel, float]: ...


@dataclass(frozen=True)
class SentenceVote:
    text: str
    positive: bool


def _window_has_cue(window: list[str]) -> bool:
    for cue in NEGATION_CUES:
        parts = cue.split()
        if len(parts) == 1:
            if parts[0] in window:
                return True
        else:
            for i in range(len(window) - len(parts) + 1):
                if window[i:i + len(parts)] == parts:
                    return True
    return False


def _maximal_spans(spans: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Drop spans strictly contained in another ("embolism" inside a matched
    "pulmonary embolism" is one keyword occurrence, not two).
    """
    return [
        s for s in spans
        if not any(o != s and o[0] <= s[0] and s[1] <= o[1] for o in spans)
    ]


def baseline_votes(note: str, terms: TermTable) -> list[SentenceVote]:
    """Per-sentence rule votes over the note.

    A keyword occurrence (maximal keyword match) is discounted when a
    negation cue sits within the 6 preceding tokens, or when "chronic" does
    and "acute" appears nowhere in the sentence. A sentence votes positive
    when at least one occurrence survives; sentences without keywords do not
    vote.
    """
    masked = mask_exclusions(note, terms.exclusion_phrases)
    votes: list[SentenceVote] = []
    for span in split_sentences(note):
        sentence = masked[span.start:span.end]
        occurrences: list[tuple[int, int]] = []
        for keyword in terms.inclusion_keywords:
            occurrences.extend(match_term(sentence, keyword))
        occurrences = _maximal_spans(occurrences)
        if not occurrences:
            continue
        tokens = [(m.group(0).lower(), m.start()) for m in _WORD_RE.finditer(sentence)]
        token_words = [t for t, _ in tokens]
        has_acute = "acute" in token_words
        positive = False
        for start, _ in occurrences:
            window = [t for t, pos in tokens if pos < start][-NEGATION_WINDOW:]
            if _window_has_cue(window):
                continue
            if "chronic" in window and not has_acute:
                continue
            positive = True
            break
        votes.append(SentenceVote(text=span.text, positive=positive))
    return votes


def baseline_classify(note: str, terms: TermTable | None = None) -> tuple[BinaryLabel, float]:
    """Rule-cascade label for a merged note.

    Returns Positive iff at least one sentence votes positive; confidence is
    the positive-vote fraction (0.0 when nothing votes, which is Negative).
    """
    votes = baseline_votes(note, terms if terms is not None else load_terms())
    if not votes:
        return BinaryLabel.NEGATIVE, 0.0
    positive = sum(1 for v in votes if v.positive)
    confidence = positive / len(votes)
    label = BinaryLabel.POSITIVE if positive else BinaryLabel.NEGATIVE
    return label, confidence


@dataclass(frozen=True)
class BaselineClassifier:
    terms: TermTable
    name: str = "rule-baseline"
    source: PredictionSource = PredictionSource.BASELINE

    def classify(self, note: str) -> tuple[BinaryLabel, float]:
        return baseline_classify(note, self.terms)


def classify_report(evidence: ExtractedEvidence, classifier: Classifier) -> Prediction:
    """Default-negative rule, then the classifier.

    No evidence ⇒ Negative without invoking the classifier, whatever the
    classifier would have said.
    """
    if not evidence.evidence_present:
        return Prediction(
            report_id=evidence.report_id,
            binary=BinaryLabel.NEGATIVE,
            source=PredictionSource.DEFAULT_NEGATIVE,
            evidence_present=False,
            confidence=None,
        )
    label, confidence = classifier.classify(evidence.merged_note)
    return Prediction(
        report_id=evidence.report_id,
        binary=BinaryLabel(label),
        source=classifier.source,
        evidence_present=True,
        confidence=confidence,
    )


# ---------------------------------------------------------------------------
# External adapter: line-delimited records over a child-process pipe or HTTP.
# Request {"id": ..., "text": ...}; response {"id": ..., "label":
# "positive"|"negative", "confidence": 0.0-1.0}. Responses may arrive out of
# order; the join is by id.
# ---------------------------------------------------------------------------


class AdapterError(Exception):
    """Transport or protocol failure talking to the external classifier."""


class AdapterProtocolError(AdapterError):
    """Schema violation, unknown or duplicate id. Never retried."""


@dataclass(frozen=True)
class AdapterRequest:
    id: str
    text: str


@dataclass(frozen=True)
class AdapterResponse:
    id: str
    label: str  # "positive" | "negative"
    confidence: float

    @property
    def binary(self) -> BinaryLabel:
        return BinaryLabel.POSITIVE if self.label == "positive" else BinaryLabel.NEGATIVE


def parse_adapter_response(obj: object) -> AdapterResponse:
    if not isinstance(obj, dict):
        raise AdapterProtocolError(f"response is not an object: {obj!r}")
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise AdapterProtocolError(f"response missing id: {obj!r}")
    label = obj.get("label")
    if label not in ("positive", "negative"):
        raise AdapterProtocolError(f"response {rid!r} has invalid label {label!r}")
    confidence = obj.get("confidence")
    if not isinstance(confidence, (int, float)) or not 0.0 <= float(confidence) <= 1.0:
        raise AdapterProtocolError(f"response {rid!r} has invalid confidence {confidence!r}")
    return AdapterResponse(id=rid, label=label, confidence=float(confidence))


def _join_responses(
    requests: Sequence[AdapterRequest], responses: Sequence[AdapterResponse]
) -> list[AdapterResponse]:
    expected = {r.id for r in requests}
    by_id: dict[str, AdapterResponse] = {}
    for response in responses:
        if response.id not in expected:
            raise AdapterProtocolError(f"response for unknown id {response.id!r}")
        if response.id in by_id:
            raise AdapterProtocolError(f"duplicate response for id {response.id!r}")
        by_id[response.id] = response
    missing = expected - set(by_id)
    if missing:
        raise AdapterProtocolError(f"missing responses for ids: {sorted(missing)}")
    return [by_id[r.id] for r in requests]


@dataclass
class PipeAdapter:
    """Spawns the sidecar command and speaks one JSON record per line.

    Up to ``window`` requests are in flight at once; responses arriving in
    any order are joined by id. A transport failure restarts the sidecar and
    resends the unanswered requests, up to ``retries`` restarts.
    """

    command: Sequence[str]
    window: int = 32
    timeout: float = 30.0
    retries: int = 1
    name: str = "pipe-adapter"
    source: PredictionSource = PredictionSource.EXTERNAL

    def classify_batch(self, requests: Sequence[AdapterRequest]) -> list[AdapterResponse]:
        if not requests:
            raise AdapterError("empty request batch")
        answered: dict[str, AdapterResponse] = {}
        last_error: AdapterError | None = None
        for _ in range(self.retries + 1):
            pending = [r for r in requests if r.id not in answered]
            if not pending:
                break
            try:
                self._run_once(pending, answered)
                last_error = None
                break
            except AdapterProtocolError:
                raise
            except AdapterError as exc:
                last_error = exc
        if last_error is not None:
            raise last_error
        return _join_responses(requests, list(answered.values()))

    def _run_once(
        self, requests: Sequence[AdapterRequest], answered: dict[str, AdapterResponse]
    ) -> None:
        try:
            proc = subprocess.Popen(
                list(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise AdapterError(f"cannot start sidecar {self.command!r}: {exc}") from exc
        assert proc.stdin is not None and proc.stdout is not None
        deadline = time.monotonic() + self.timeout
        expected = {r.id for r in requests}
        seen: set[str] = set()
        queue = list(requests)
        sent = 0
        try:
            buffer = b""
            out_fd = proc.stdout.fileno()
            while len(seen) < len(requests):
                while sent < len(queue) and sent - len(seen) < self.window:
                    record = {"id": queue[sent].id, "text": queue[sent].text}
                    proc.stdin.write((json.dumps(record) + "\n").encode("utf-8"))
                    proc.stdin.flush()
                    sent += 1
                if sent == len(queue) and proc.stdin and not proc.stdin.closed:
                    proc.stdin.close()
                line, buffer = self._read_line(out_fd, buffer, deadline)
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise AdapterError(f"bad response line {line!r}: {exc}") from None
                response = parse_adapter_response(obj)
                if response.id not in expected:
                    raise AdapterProtocolError(f"response for unknown id {response.id!r}")
                if response.id in seen or response.id in answered:
                    raise AdapterProtocolError(f"duplicate response for id {response.id!r}")
                seen.add(response.id)
                answered[response.id] = response
        except BrokenPipeError as exc:
            raise AdapterError("sidecar closed its pipe") from exc
        finally:
            for stream in (proc.stdin, proc.stdout):
                try:
                    if stream and not stream.closed:
                        stream.close()
                except OSError:
                    pass
            proc.terminate()
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    @staticmethod
    def _read_line(fd: int, buffer: bytes, deadline: float) -> tuple[str, bytes]:
        while b"\n" not in buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise AdapterError("sidecar timed out")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise AdapterError("sidecar timed out")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise AdapterError("sidecar closed its pipe before answering")
            buffer += chunk
        line, _, rest = buffer.partition(b"\n")
        return line.decode("utf-8"), rest


@dataclass
class HttpAdapter:
    """POSTs request batches to ``endpoint`` (path /classify) as a JSON array."""

    endpoint: str
    batch_size: int = 64
    timeout: float = 30.0
    retries: int = 2
    name: str = "http-adapter"
    source: PredictionSource = PredictionSource.EXTERNAL
    client_factory: Callable[[], httpx.Client] | None = field(default=None, repr=False)

    def classify_batch(self, requests: Sequence[AdapterRequest]) -> list[AdapterResponse]:
        if not requests:
            raise AdapterError("empty request batch")
        responses: list[AdapterResponse] = []
        factory = self.client_factory or (lambda: httpx.Client(timeout=self.timeout))
        with factory() as client:
            for i in range(0, len(requests), self.batch_size):
                chunk = requests[i:i + self.batch_size]
                payload = [{"id": r.id, "text": r.text} for r in chunk]
                body = self._post(client, payload)
                if not isinstance(body, list):
                    raise AdapterError(f"expected a JSON array, got {type(body).__name__}")
                parsed = [parse_adapter_response(obj) for obj in body]
                responses.extend(_join_responses(chunk, parsed))
        return responses

    def _post(self, client: httpx.Client, payload: list[dict]) -> object:
        url = self.endpoint.rstrip("/") + "/classify"
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                reply = client.post(url, json=payload)
                if reply.status_code != 200:
                    raise AdapterError(f"sidecar returned HTTP {reply.status_code}")
                return reply.json()
            except (httpx.TransportError, json.JSONDecodeError) as exc:
                last_exc = exc
                if attempt < self.retries:
                    time.sleep(min(0.2 * 2**attempt, 2.0))
        raise AdapterError(f"sidecar unreachable after {self.retries + 1} attempts: {last_exc}")


def external_classify(
    requests: Sequence[AdapterRequest], adapter: PipeAdapter | HttpAdapter
) -> list[AdapterResponse]:
    """Batch-classify through an adapter; all ids answered, request order out."""
    return adapter.classify_batch(requests)


@dataclass
class ExternalClassifier:
    """Classifier-contract wrapper over an adapter, for single-note calls."""

    adapter: PipeAdapter | HttpAdapter
    name: str = "external"
    source: PredictionSource = PredictionSource.EXTERNAL
    _counter: int = field(default=0, repr=False)

    def classify(self, note: str) -> tuple[BinaryLabel, float]:
        self._counter += 1
        request = AdapterRequest(id=f"q{self._counter}", text=note)
        response = self.adapter.classify_batch([request])[0]
        return response.binary, response.confidence


def classify_evidence_batch(
    evidences: Sequence[ExtractedEvidence],
    classifier: Classifier | None = None,
    adapter: PipeAdapter | HttpAdapter | None = None,
) -> list[Prediction]:
    """Classify a batch of evidence records.

    Default-negative fires first for every zero-evidence record; the rest go
    to the in-process classifier or, when ``adapter`` is given, out in one
    batched call.
    """
    if (classifier is None) == (adapter is None):
        raise ValueError("provide exactly one of classifier or adapter")
    predictions: dict[str, Prediction] = {}
    pending: list[ExtractedEvidence] = []
    for evidence in evidences:
        if not evidence.evidence_present:
            predictions[evidence.report_id] = Prediction(
                report_id=evidence.report_id,
                binary=BinaryLabel.NEGATIVE,
                source=PredictionSource.DEFAULT_NEGATIVE,
                evidence_present=False,
                confidence=None,
            )
        else:
            pending.append(evidence)
    if pending and adapter is not None:
        requests = [AdapterRequest(id=e.report_id, text=e.merged_note) for e in pending]
        for evidence, response in zip(pending, adapter.classify_batch(requests)):
            predictions[evidence.report_id] = Prediction(
                report_id=evidence.report_id,
                binary=response.binary,
                source=PredictionSource.EXTERNAL,
                evidence_present=True,
                confidence=response.confidence,
            )
    elif pending:
        assert classifier is not None
        for evidence in pending:
            predictions[evidence.report_id] = classify_report(evidence, classifier)
    return [predictions[e.report_id] for e in evidences]
