"""Exception hierarchy shared by the library and the command line front end.

Every exception carries a machine-readable ``code`` and the process exit
status the CLI uses when the exception escapes a command.
"""

from __future__ import annotations


class BrylinskiError(Exception):
    code = "E_INTERNAL"
    exit_status = 1


class ParseError(BrylinskiError):
    code = "E_PARSE"
    exit_status = 2


class UsageError(BrylinskiError, ValueError):
    code = "E_USAGE"
    exit_status = 4


class DomainError(BrylinskiError, ValueError):
    code = "E_DOMAIN"
    exit_status = 4


class SingularJetError(DomainError):
    code = "E_SINGULAR_JET"


class UndefinedFrameError(DomainError):
    """Curvature too small for a Frenet frame (torsion undefined)."""

    code = "E_UNDEFINED_FRAME"


class InflectionError(DomainError):
    code = "E_INFLECTION"


class CurveValidationError(DomainError):
    code = "E_CURVE"


class HalfPlaneError(DomainError):
    """The direct double integral does not converge at the requested s."""

    code = "E_HALF_PLANE"


class OrderBudgetError(DomainError):
    code = "E_ORDER_BUDGET"


class NotAPoleError(UsageError):
    code = "E_NOT_A_POLE"


class PoleProximityError(BrylinskiError, ValueError):
    code = "E_POLE"
    exit_status = 3

    def __init__(self, message: str, pole: int):
        super().__init__(message)
        self.pole = pole


class VerificationFailure(BrylinskiError):
    code = "E_VERIFY"
    exit_status = 5
