"""
BNSL - Errors
Exception hierarchy shared by parsers, model construction and the LP engine.
"""

from typing import Optional


class BnslError(Exception):
    """Base class for every error raised by the package."""


class ParseError(BnslError):
    """Malformed dataset, score or constraint file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.message = message
        self.line = line
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)


class InfeasibleConstraintError(BnslError):
    """Structural constraints leave some node without any candidate parent set."""


class LpError(BnslError):
    """Internal failure of the simplex engine."""


class NotBasicError(LpError):
    """Tableau row requested for a variable that is not basic."""
