"""Observer-relative simulation of the EPR-Bohm experiment in Minkowski spacetime."""

__version__ = "0.1.0"

from .epr import (  # noqa: E402
    Case,
    Conclusion,
    EPRScenario,
    Side,
    classify_case,
    evaluate_premises,
    frame_scan,
    initialize,
    measure_side,
    predict_remote,
    verdict_in_frame,
)
from .relational import Ledger, SystemId, check_consistency, describe_interaction, observe  # noqa: E402
from .spacetime import Event, Frame  # noqa: E402

__all__ = [
    "Case",
    "Conclusion",
    "EPRScenario",
    "Event",
    "Frame",
    "Ledger",
    "Side",
    "SystemId",
    "check_consistency",
    "classify_case",
    "describe_interaction",
    "evaluate_premises",
    "frame_scan",
    "initialize",
    "measure_side",
    "observe",
    "predict_remote",
    "verdict_in_frame",
]
