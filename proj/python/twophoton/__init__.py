from ._core import (
    CalibrationInfeasible,
    IntegrationFailure,
    InvalidInput,
    ParseError,
    calibrate,
    cavity_summary,
    concurrence,
    finesse,
    free_spectral_range,
    simulate,
    subconfocal_lengths,
    threshold,
)

__all__ = [
    "CalibrationInfeasible",
    "IntegrationFailure",
    "InvalidInput",
    "ParseError",
    "calibrate",
    "cavity_summary",
    "concurrence",
    "finesse",
    "free_spectral_range",
    "simulate",
    "subconfocal_lengths",
    "threshold",
]
