"""Event-sourced store for the dual-reviewer gold-labeling workflow.

Persistence is an append-only JSONL event log; item statuses are a pure
function of the log, so replaying it reconstructs the store exactly. An
item moves Unreviewed -> OneReview -> Consensus when the second review
agrees (on the binary collapse by default), or -> Conflict otherwise, and a
Conflict resolves through an explicit Consensus-role submission.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping

from ..corpus import BinaryLabel, FineLabel, PhenotypeLabel, collapse_label


class ReviewerRole(str, Enum):
    UNBLINDED = "Unblinded"
    BLINDED = "Blinded"
    CONSENSUS = "Consensus"


class ItemStatus(str, Enum):
    UNREVIEWED = "Unreviewed"
    ONE_REVIEW = "OneReview"
    CONFLICT = "Conflict"
    CONSENSUS = "Consensus"


class ConflictGranularity(str, Enum):
    BINARY = "binary"
    FINE = "fine"


class AdjudicationError(Exception):
    pass


class UnknownReportError(AdjudicationError):
    pass


class InvalidTransitionError(AdjudicationError):
    pass


@dataclass(frozen=True)
class ReviewEvent:
    event_id: int
    report_id: str
    reviewer_id: str
    role: ReviewerRole
    fine_label: FineLabel
    timestamp: str

    def to_record(self) -> dict:
        return {
            "event_id": self.event_id,
            "report_id": self.report_id,
            "reviewer_id": self.reviewer_id,
            "role": self.role.value,
            "fine_label": self.fine_label.value,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ReviewEvent":
        return cls(
            event_id=int(record["event_id"]),
            report_id=str(record["report_id"]),
            reviewer_id=str(record["reviewer_id"]),
            role=ReviewerRole(record["role"]),
            fine_label=FineLabel(record["fine_label"]),
            timestamp=str(record["timestamp"]),
        )


@dataclass
class ReviewItem:
    report_id: str
    merged_note: str
    report_text: str
    model_prediction: BinaryLabel | None = None
    status: ItemStatus = ItemStatus.UNREVIEWED
    reviews: list[ReviewEvent] = field(default_factory=list)
    consensus_event: ReviewEvent | None = None

    @property
    def evidence_present(self) -> bool:
        return bool(self.merged_note)

    @property
    def consensus_label(self) -> PhenotypeLabel | None:
        if self.consensus_event is None:
            return None
        return PhenotypeLabel.from_fine(self.consensus_event.fine_label)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class AdjudicationStore:
    """Single-writer store; reads are cheap and lock briefly.

    ``clock`` is injectable for deterministic logs in tests.
    """

    def __init__(
        self,
        items: Iterable[ReviewItem],
        log_path: str | Path | None = None,
        granularity: ConflictGranularity = ConflictGranularity.BINARY,
        clock: Callable[[], str] | None = None,
    ):
        self._items: dict[str, ReviewItem] = {}
        for item in items:
            if item.report_id in self._items:
                raise AdjudicationError(f"duplicate item {item.report_id!r}")
            self._items[item.report_id] = item
        self._order = sorted(self._items)
        self._granularity = granularity
        self._clock = clock or _utc_now
        self._lock = threading.Lock()
        self._assignments: dict[str, tuple[str, ReviewerRole]] = {}
        self._next_event_id = 1
        self._log_path = Path(log_path) if log_path is not None else None
        self._log_fh = None
        if self._log_path is not None:
            if self._log_path.exists():
                self._replay_file(self._log_path)
            self._log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_fh = open(self._log_path, "a", encoding="utf-8")

    # -- event log ---------------------------------------------------------

    def _replay_file(self, path: Path) -> None:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    self.apply_event(ReviewEvent.from_record(json.loads(line)))

    def replay_events(self, events: Iterable[ReviewEvent]) -> None:
        for event in events:
            self.apply_event(event)

    def _append(self, event: ReviewEvent) -> None:
        if self._log_fh is not None:
            self._log_fh.write(json.dumps(event.to_record(), sort_keys=True) + "\n")
            self._log_fh.flush()

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    # -- state machine -----------------------------------------------------

    def _agrees(self, a: FineLabel, b: FineLabel) -> bool:
        if self._granularity == ConflictGranularity.FINE:
            return a == b
        return collapse_label(a) == collapse_label(b)

    def apply_event(self, event: ReviewEvent) -> ItemStatus:
        """Apply one event to the state machine (used by live submits and
        replay alike). Raises on transitions the live path would refuse.
        """
        item = self._items.get(event.report_id)
        if item is None:
            raise UnknownReportError(f"unknown report {event.report_id!r}")
        if event.role == ReviewerRole.CONSENSUS:
            auto = (
                item.status == ItemStatus.CONSENSUS
                and item.consensus_event is None
            )
            if item.status != ItemStatus.CONFLICT and not auto:
                raise InvalidTransitionError(
                    f"consensus event requires a Conflict or two agreeing reviews "
                    f"(item {item.report_id!r} is {item.status.value})"
                )
            item.consensus_event = event
            item.status = ItemStatus.CONSENSUS
        else:
            if item.status in (ItemStatus.CONFLICT, ItemStatus.CONSENSUS):
                raise InvalidTransitionError(
                    f"item {item.report_id!r} already has two reviews"
                )
            if any(r.reviewer_id == event.reviewer_id for r in item.reviews):
                raise InvalidTransitionError(
                    f"reviewer {event.reviewer_id!r} already reviewed {item.report_id!r}"
                )
            item.reviews.append(event)
            if len(item.reviews) == 1:
                item.status = ItemStatus.ONE_REVIEW
            else:
                first, second = item.reviews[0], item.reviews[1]
                if self._agrees(first.fine_label, second.fine_label):
                    # consensus_event arrives as the next event in the log
                    item.status = ItemStatus.CONSENSUS
                else:
                    item.status = ItemStatus.CONFLICT
        self._next_event_id = max(self._next_event_id, event.event_id + 1)
        return item.status

    def submit_label(
        self,
        reviewer_id: str,
        role: ReviewerRole,
        report_id: str,
        fine_label: FineLabel | str,
    ) -> ItemStatus:
        """Record a review (or consensus resolution); returns the new status."""
        fine = FineLabel(fine_label)
        role = ReviewerRole(role)
        with self._lock:
            item = self._items.get(report_id)
            if item is None:
                raise UnknownReportError(f"unknown report {report_id!r}")
            event = ReviewEvent(
                event_id=self._next_event_id,
                report_id=report_id,
                reviewer_id=reviewer_id,
                role=role,
                fine_label=fine,
                timestamp=self._clock(),
            )
            status = self.apply_event(event)
            self._append(event)
            if (
                role != ReviewerRole.CONSENSUS
                and status == ItemStatus.CONSENSUS
                and item.consensus_event is None
            ):
                # binary agreement: record the resolution as a Consensus-role
                # event carrying the earlier review's fine label
                auto = ReviewEvent(
                    event_id=self._next_event_id,
                    report_id=report_id,
                    reviewer_id=reviewer_id,
                    role=ReviewerRole.CONSENSUS,
                    fine_label=item.reviews[0].fine_label,
                    timestamp=self._clock(),
                )
                status = self.apply_event(auto)
                self._append(auto)
            self._assignments.pop(report_id, None)
            return status

    # -- queue -------------------------------------------------------------

    def next_item(self, reviewer_id: str, role: ReviewerRole) -> ReviewItem | None:
        """Next unlabeled item for this reviewer (Conflict items for the
        Consensus role). Compare-and-set assignment keeps two concurrent
        sessions off the same item.
        """
        role = ReviewerRole(role)
        with self._lock:
            released = [
                rid for rid, (holder, _) in self._assignments.items()
                if holder == reviewer_id
            ]
            for rid in released:
                del self._assignments[rid]
            for report_id in self._order:
                item = self._items[report_id]
                if role == ReviewerRole.CONSENSUS:
                    wanted = item.status == ItemStatus.CONFLICT
                else:
                    wanted = item.status in (ItemStatus.UNREVIEWED, ItemStatus.ONE_REVIEW)
                    wanted = wanted and not any(
                        r.reviewer_id == reviewer_id for r in item.reviews
                    )
                if not wanted:
                    continue
                holder = self._assignments.get(report_id)
                if holder is not None and holder[0] != reviewer_id:
                    continue
                self._assignments[report_id] = (reviewer_id, role)
                return item
        return None

    # -- views -------------------------------------------------------------

    def get(self, report_id: str) -> ReviewItem:
        item = self._items.get(report_id)
        if item is None:
            raise UnknownReportError(f"unknown report {report_id!r}")
        return item

    def items(self) -> list[ReviewItem]:
        return [self._items[rid] for rid in self._order]

    def conflicts(self) -> list[ReviewItem]:
        return [i for i in self.items() if i.status == ItemStatus.CONFLICT]

    def statuses(self) -> dict[str, ItemStatus]:
        return {rid: self._items[rid].status for rid in self._order}

    def export_gold(self) -> dict:
        """Deterministic export: consensus labels plus pending item statuses."""
        gold = []
        pending = []
        for item in self.items():
            label = item.consensus_label
            if label is not None:
                gold.append(
                    {
                        "report_id": item.report_id,
                        "fine": label.fine.value,
                        "binary": label.binary.value,
                    }
                )
            else:
                pending.append({"report_id": item.report_id, "status": item.status.value})
        return {"gold": gold, "pending": pending}

    def export_gold_bytes(self) -> bytes:
        return (json.dumps(self.export_gold(), indent=2, sort_keys=True) + "\n").encode()


def items_from_pipeline(
    evidences: Mapping[str, str],
    report_texts: Mapping[str, str],
    predictions: Mapping[str, BinaryLabel] | None = None,
) -> list[ReviewItem]:
    """Build review items from extractor output (report_id -> merged note),
    report texts, and optional model predictions.
    """
    predictions = predictions or {}
    items = []
    for report_id in sorted(evidences):
        items.append(
            ReviewItem(
                report_id=report_id,
                merged_note=evidences[report_id],
                report_text=report_texts.get(report_id, ""),
                model_prediction=predictions.get(report_id),
            )
        )
    return items
