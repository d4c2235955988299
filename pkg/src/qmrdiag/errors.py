"""Exception types shared by every backend."""

from __future__ import annotations

from dataclasses import dataclass


class QmrError(Exception):
    """Base class for all errors raised by qmrdiag."""


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    message: str = ""

    def __str__(self) -> str:
        text = f"{self.kind} {self.where}"
        return f"{text}: {self.message}" if self.message else text


class InvalidNetError(QmrError, ValueError):
    """Raised when a net or evidence set breaks one or more invariants.

    ``violations`` holds every problem found, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class CapExceeded(QmrError):
    pass


class DegenerateParameter(QmrError, ValueError):
    pass


class IncompleteTable(QmrError, ValueError):
    pass


class SamplingError(QmrError):
    """Sampling finished but produced no usable weight.

    The partially filled report is attached so callers can still print
    the diagnostics (draw counts, acceptance rate).
    """

    def __init__(self, message, report=None, accumulator=None):
        super().__init__(message)
        self.report = report
        self.accumulator = accumulator


class NoAcceptedSamples(SamplingError):
    pass


class ZeroTotalWeight(SamplingError):
    pass


class ImpossibleEvidence(QmrError, ValueError):
    """The evidence has probability exactly zero under the net."""
