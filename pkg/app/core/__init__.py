"""
Core components for the accident detection engine.
Defines the exception hierarchy shared by every layer.
"""

from typing import Optional


class AccidentDetectionError(Exception):
    """Base class for all engine errors."""


class ParseError(AccidentDetectionError):
    """A detection stream record could not be turned into a frame."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.message = message
        self.line_number = line_number
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line_number is None:
            return self.message
        return f"line {self.line_number}: {self.message}"

    def at_line(self, line_number: int) -> "ParseError":
        """Return a copy of this error annotated with a line number."""
        return type(self)(self.message, line_number)


class OutOfOrderFrame(ParseError):
    """Frame indices must be strictly increasing within a stream."""


class DomainError(AccidentDetectionError):
    """A kinematic quantity was requested outside its valid domain."""


class SpecError(AccidentDetectionError):
    """A scenario specification is inconsistent."""


class ConfigError(AccidentDetectionError):
    """Engine configuration is invalid."""


class EvaluationError(AccidentDetectionError, ZeroDivisionError):
    """A rate was requested with a zero denominator."""
