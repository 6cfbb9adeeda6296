"""Exceptions raised by the simulator."""
from __future__ import annotations


class UnsupportedLength(ValueError):
    """No code of the requested length exists."""


class DimensionMismatch(ValueError):
    """Array shapes disagree with the waveform configuration."""


class DelayOutOfRange(ValueError):
    """Delay bin outside the admissible range."""


class InvalidProbability(ValueError):
    """Probability outside the open interval (0, 1)."""


class LagOutOfRange(ValueError):
    """Correlation lag outside the PRI."""


class ConfigInvalid(ValueError):
    """Configuration violating one or more invariants.

    Attributes:
        problems: Every violated invariant, one message per field.

    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class OutputError(OSError):
    """Results could not be written."""
