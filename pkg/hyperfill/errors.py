"""
Exception hierarchy for hyperfill.

Every error raised on purpose by the library derives from HyperfillError. The CLI
turns any of them into `{"error": <class name>, "message": <text>}` on stdout.
"""

from typing import Any, Dict, Optional


class HyperfillError(Exception):
    pass


class ParseError(HyperfillError, ValueError):
    pass


class InvariantViolation(HyperfillError):
    pass


class CapacityExceeded(HyperfillError):
    pass


class InvalidParameter(HyperfillError, ValueError):
    pass


class UnknownVertex(HyperfillError, KeyError):
    pass


class UnknownEdge(HyperfillError, KeyError):
    pass


class UnknownBoundaryPoint(HyperfillError, KeyError):
    pass


class MismatchedTargets(HyperfillError):
    pass


class QuadratureFailure(HyperfillError, ArithmeticError):
    pass


class InsufficientMass(HyperfillError):
    pass


class TailUnknown(HyperfillError):
    """Raised when an improper integral can only be reported as a lower bound."""

    def __init__(self, message: str, lower_bound: float):
        super().__init__(message)
        self.lower_bound = lower_bound


class HypothesisViolation(HyperfillError):
    pass


class RegimeMismatch(HyperfillError):
    pass


class ConstructionFailure(HyperfillError):
    pass


class HorizonExhausted(HyperfillError):
    def __init__(self, message: str, cells: int):
        super().__init__(message)
        self.cells = cells


class PreconditionFailure(HyperfillError):
    pass


class ShellExhaustion(HyperfillError):
    def __init__(self, message: str, shells: int):
        super().__init__(message)
        self.shells = shells


def error_document(exc: BaseException, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    # KeyError wraps its message in quotes when str()'d
    message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
    doc: Dict[str, Any] = {"error": type(exc).__name__, "message": str(message)}
    for attr in ("lower_bound", "cells", "shells"):
        if hasattr(exc, attr):
            doc[attr] = getattr(exc, attr)
    if extra:
        doc.update(extra)
    return doc
