"""HTTP API over the adjudication store.

Blinding is enforced server-side: payloads built for a Blinded session never
carry a model_prediction field at all, so no client can render or cache one.
Reviewer identities and roles come from a config-declared registry.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel

from ..corpus import FineLabel
from .store import (
    AdjudicationError,
    AdjudicationStore,
    InvalidTransitionError,
    ItemStatus,
    ReviewerRole,
    ReviewItem,
    UnknownReportError,
)


class LabelRequest(BaseModel):
    reviewer_id: str
    role: ReviewerRole
    fine_label: FineLabel


def item_payload(item: ReviewItem, role: ReviewerRole) -> dict:
    """Role-aware item view. Blinded and Consensus payloads have no
    prediction field; the full report text rides along only when extraction
    isolated nothing.
    """
    payload: dict = {
        "report_id": item.report_id,
        "merged_note": item.merged_note,
        "full_report_available": not item.evidence_present,
        "status": item.status.value,
    }
    if not item.evidence_present:
        payload["report_text"] = item.report_text
    if role == ReviewerRole.UNBLINDED and item.model_prediction is not None:
        payload["model_prediction"] = item.model_prediction.value
    return payload


def conflict_payload(item: ReviewItem) -> dict:
    payload = item_payload(item, ReviewerRole.CONSENSUS)
    payload["reviews"] = [
        {
            "reviewer_id": r.reviewer_id,
            "role": r.role.value,
            "fine_label": r.fine_label.value,
        }
        for r in item.reviews
    ]
    return payload


def create_app(
    store: AdjudicationStore,
    reviewers: dict[str, ReviewerRole],
) -> FastAPI:
    app = FastAPI(title="pepheno adjudication service")

    def check_role(reviewer_id: str, role: ReviewerRole) -> None:
        declared = reviewers.get(reviewer_id)
        if declared is None:
            raise HTTPException(status_code=403, detail=f"unknown reviewer {reviewer_id!r}")
        if declared != role:
            raise HTTPException(
                status_code=403,
                detail=f"reviewer {reviewer_id!r} has role {declared.value}, not {role.value}",
            )

    @app.get("/items/next")
    def next_item(role: ReviewerRole = Query(...), reviewer: str = Query(...)) -> dict:
        check_role(reviewer, role)
        item = store.next_item(reviewer, role)
        if item is None:
            return {"item": None}
        return {"item": item_payload(item, role)}

    @app.post("/items/{report_id}/label")
    def submit_label(report_id: str, request: LabelRequest) -> dict:
        check_role(request.reviewer_id, request.role)
        try:
            status = store.submit_label(
                request.reviewer_id, request.role, report_id, request.fine_label
            )
        except UnknownReportError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except InvalidTransitionError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except AdjudicationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"report_id": report_id, "status": status.value}

    @app.get("/conflicts")
    def conflicts() -> dict:
        return {"conflicts": [conflict_payload(item) for item in store.conflicts()]}

    @app.get("/export")
    def export() -> dict:
        return store.export_gold()

    @app.get("/progress")
    def progress() -> dict:
        statuses = store.statuses().values()
        return {
            "total": len(statuses),
            "consensus": sum(1 for s in statuses if s == ItemStatus.CONSENSUS),
            "conflicts": sum(1 for s in statuses if s == ItemStatus.CONFLICT),
            "unreviewed": sum(1 for s in statuses if s == ItemStatus.UNREVIEWED),
            "one_review": sum(1 for s in statuses if s == ItemStatus.ONE_REVIEW),
        }

    return app
