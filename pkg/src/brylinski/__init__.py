"""Beta functions of closed space curves: direct quadrature, meromorphic
continuation and residues, with the local-graph invariant formulas."""

from __future__ import annotations

from .errors import (BrylinskiError, DomainError, HalfPlaneError, NotAPoleError,
                     ParseError, PoleProximityError, UsageError, VerificationFailure)
from .jets import Jet

__version__ = "0.1.0"

__all__ = [
    "BrylinskiError", "DomainError", "HalfPlaneError", "Jet", "NotAPoleError",
    "ParseError", "PoleProximityError", "UsageError", "VerificationFailure",
]
