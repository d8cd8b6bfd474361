from .contours import all_labels, classify_ensemble
from .enumeration import (
    EnumerationResult,
    Window,
    WindowMarginal,
    canonical_window,
    enumerate,
    enumerate_model,
    origin_window,
    split_enumeration_logz,
)
from .transfer import TransferResult, tm_logz, tm_resolved, tm_window, transfer_matrix

__all__ = [
    "all_labels",
    "classify_ensemble",
    "EnumerationResult",
    "Window",
    "WindowMarginal",
    "canonical_window",
    "enumerate",
    "enumerate_model",
    "origin_window",
    "split_enumeration_logz",
    "TransferResult",
    "tm_logz",
    "tm_resolved",
    "tm_window",
    "transfer_matrix",
]
