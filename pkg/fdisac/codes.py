"""This module contains the fast-time codes used to compress the radar pulse."""
from __future__ import annotations

import numpy as np

from fdisac.errors import UnsupportedLength


class CodeKind:
    """Enum of fast-time code families."""

    LFM_DERIVED = "lfm"
    BARKER = "barker"
    CUSTOM = "custom"

    ALL = (LFM_DERIVED, BARKER, CUSTOM)


BARKER_SEQUENCES = {
    2: [1, -1],
    3: [1, 1, -1],
    4: [1, 1, -1, 1],
    5: [1, 1, 1, -1, 1],
    7: [1, 1, 1, -1, -1, 1, -1],
    11: [1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1],
    13: [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1],
}


class FastTimeCode:
    """Complex chip sequence c[n] of one radar pulse.

    Attributes:
        chips: Read-only complex vector of length N with squared norm N.
        label: Human readable name of the code.
        kind: Code family, one of CodeKind.

    """

    def __init__(self, chips: np.ndarray, label: str, kind: str = CodeKind.CUSTOM):
        """Initializes the code.

        Args:
            chips: Chip values. Their squared norm has to equal their count.
            label: Human readable name of the code.
            kind: Code family, one of CodeKind.

        """
        self.chips = np.array(chips, dtype=np.complex128)
        self.chips.flags.writeable = False
        self.label = label
        self.kind = kind

        if not self.verify():
            raise ValueError(
                "The squared norm of a fast-time code has to equal its length."
            )

    def __len__(self) -> int:
        return self.chips.size

    def __repr__(self) -> str:
        return f"<FastTimeCode {self.label}>"

    def verify(self) -> bool:
        """Checks that the code is a nonempty vector with squared norm N."""
        if self.chips.ndim != 1 or self.chips.size == 0:
            return False
        energy = float(np.sum(np.abs(self.chips) ** 2))
        return abs(energy - self.chips.size) <= 1e-12 * self.chips.size

    def sample(self, oversampling: int = 1) -> np.ndarray:
        """Renders the code at sub-chip resolution.

        The LFM-derived code is evaluated from its continuous chirp phase at fractional
        chip positions, every other code holds each chip for a whole chip period.

        Args:
            oversampling: Samples per chip.

        Returns:
            Vector of N * oversampling samples.

        """
        if oversampling == 1:
            return np.array(self.chips)
        if self.kind == CodeKind.LFM_DERIVED:
            u = np.arange(len(self) * oversampling) / oversampling
            return np.exp(1j * np.pi * u**2 / len(self))
        return np.repeat(self.chips, oversampling)


def make_lfm_code(length: int) -> FastTimeCode:
    """Builds the code c[n] = exp(j pi n^2 / N) of a linear frequency sweep.

    Args:
        length: Number of chips N.

    Returns:
        The unit-modulus code.

    """
    if length < 1:
        raise UnsupportedLength("A code needs at least one chip.")
    n = np.arange(length)
    chips = np.exp(1j * np.pi * n**2 / length)
    return FastTimeCode(chips, f"lfm-{length}", CodeKind.LFM_DERIVED)


def make_barker_code(length: int) -> FastTimeCode:
    """Builds the binary Barker code of the given length.

    Length two uses the [+1, -1] variant.

    Raises:
        UnsupportedLength: No Barker code of that length exists.

    """
    if length not in BARKER_SEQUENCES:
        raise UnsupportedLength(
            f"No Barker code of length {length}, "
            f"choose one of {sorted(BARKER_SEQUENCES)}."
        )
    return FastTimeCode(BARKER_SEQUENCES[length], f"barker-{length}", CodeKind.BARKER)


def make_custom_code(chips: np.ndarray, label: str = "custom") -> FastTimeCode:
    """Wraps arbitrary chips into a code, rescaling them to squared norm N."""
    chips = np.asarray(chips, dtype=np.complex128)
    energy = np.sum(np.abs(chips) ** 2)
    if chips.ndim != 1 or chips.size == 0 or energy == 0:
        raise UnsupportedLength("A custom code needs at least one nonzero chip.")
    scaled = chips * np.sqrt(chips.size / energy)
    # renormalize once more so the norm identity holds to rounding
    scaled *= np.sqrt(chips.size / np.sum(np.abs(scaled) ** 2))
    return FastTimeCode(scaled, label, CodeKind.CUSTOM)


class CodeFactory:
    """Factory for fast-time codes."""

    @classmethod
    def get_code(
        cls, kind: str, length: int, chips: np.ndarray | None = None
    ) -> FastTimeCode | None:
        """Get new code based on the family name.

        Args:
            kind: Code family, one of CodeKind.
            length: Number of chips N.
            chips: Chip values, only used by CodeKind.CUSTOM.

        Returns:
            New code or None if the family is unknown or custom chips are missing.

        """
        if kind == CodeKind.LFM_DERIVED:
            return make_lfm_code(length)
        if kind == CodeKind.BARKER:
            return make_barker_code(length)
        if kind == CodeKind.CUSTOM and chips is not None:
            code = make_custom_code(chips)
            if len(code) != length:
                raise UnsupportedLength(
                    f"Custom code has {len(code)} chips but the pulse holds {length}."
                )
            return code
        return None
