from .store import (
    AdjudicationError,
    AdjudicationStore,
    ConflictGranularity,
    InvalidTransitionError,
    ItemStatus,
    ReviewEvent,
    ReviewerRole,
    ReviewItem,
    UnknownReportError,
    items_from_pipeline,
)
from .service import create_app, item_payload

__all__ = [
    "AdjudicationError",
    "AdjudicationStore",
    "ConflictGranularity",
    "InvalidTransitionError",
    "ItemStatus",
    "ReviewEvent",
    "ReviewerRole",
    "ReviewItem",
    "UnknownReportError",
    "items_from_pipeline",
    "create_app",
    "item_payload",
]
