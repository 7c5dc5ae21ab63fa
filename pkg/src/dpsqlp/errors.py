#!/usr/bin/env python3
"""
Error hierarchy for the streaming DP engine.
Every error raised by the package derives from DpSqlpError.
"""

from typing import Optional


class DpSqlpError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(DpSqlpError, ValueError):
    """An argument is outside its documented domain."""


class CalibrationError(DpSqlpError):
    """A numeric search did not converge or overflowed."""


class SequencingError(DpSqlpError):
    """Triggers, leaves or releases were presented out of order."""


class OutOfOrderError(SequencingError):
    """A tree leaf was written at a position other than the cursor."""


class CapacityError(DpSqlpError):
    """A tree ran out of leaves."""


class InvalidStepError(DpSqlpError, IndexError):
    """A prefix index is outside the filled or allocated range."""


class StateError(DpSqlpError):
    """A state transition is not allowed from the current state."""


class ContractViolationError(DpSqlpError):
    """A value reached perturbation without being clamped."""


class RecoveryError(DpSqlpError):
    """Persisted state failed its checksum or framing checks."""


class IngestError(DpSqlpError):
    """A malformed input row."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class InjectedFault(DpSqlpError):
    """Raised by a fault-injection hook to simulate a crash."""
