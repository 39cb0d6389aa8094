"""Exact approximation characteristics of weighted Wiener classes on the torus."""

from .errors import (
    CountOverflow,
    DivergentSeries,
    FamilyError,
    GuardExceeded,
    NonConvergence,
    RegimeMismatch,
    ScanCapExceeded,
    WienerError,
)

__all__ = [
    "CountOverflow",
    "DivergentSeries",
    "FamilyError",
    "GuardExceeded",
    "NonConvergence",
    "RegimeMismatch",
    "ScanCapExceeded",
    "WienerError",
]

__version__ = "0.1.0"
