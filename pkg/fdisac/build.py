"""This module assembles chip-rate baseband frames from codes and symbols."""
from __future__ import annotations

import numpy as np

from fdisac.codes import FastTimeCode
from fdisac.errors import DelayOutOfRange, DimensionMismatch
from fdisac.waveform import WaveformConfig, draw_comm_symbols, draw_embedded_symbols


class Segment:
    """Enum of the parts of a PRI."""

    PULSE = 0
    COMM = 1


class BasebandFrame:
    """Transmitted chip-rate samples of one coherent processing interval.

    Row k holds x_k^d: the pulse sqrt(Pr*Tc)*omega_k*c[l] in columns 0..N-1 followed by
    the dedicated symbols sqrt(Pc*Tc)*s_k[l-N] in columns N..N+J-1. The samples of
    the PRI preceding the first are kept as a warm-up row so that echoes of PRI 0
    can reach back into it.

    Attributes:
        cfg: Waveform configuration the frame was built for.
        code: Fast-time code of the pulse.
        pri_samples: K x (N+J) complex samples.
        embedded_symbols: omega_k, one per PRI.
        comm_symbols: s_k[j], K x J.
        warmup_symbols: s_{-1}, length J.
        warmup_samples: Samples of the PRI preceding the first, length N+J.
        segment_map: Segment tag of every column.

    """

    def __init__(
        self,
        cfg: WaveformConfig,
        code: FastTimeCode,
        pri_samples: np.ndarray,
        embedded_symbols: np.ndarray,
        comm_symbols: np.ndarray,
        warmup_symbols: np.ndarray,
        warmup_samples: np.ndarray,
        segment_map: np.ndarray,
    ):
        self.cfg = cfg
        self.code = code
        self.pri_samples = pri_samples
        self.embedded_symbols = embedded_symbols
        self.comm_symbols = comm_symbols
        self.warmup_symbols = warmup_symbols
        self.warmup_samples = warmup_samples
        self.segment_map = segment_map
        for array in (
            pri_samples,
            embedded_symbols,
            comm_symbols,
            warmup_symbols,
            warmup_samples,
            segment_map,
        ):
            array.flags.writeable = False

    @property
    def pris(self) -> int:
        return self.pri_samples.shape[0]

    @property
    def samples_per_pri(self) -> int:
        return self.pri_samples.shape[1]

    def power_profile(self) -> np.ndarray:
        """Transmit power p^d of every column, Pr on the pulse and Pc elsewhere."""
        return np.where(
            self.segment_map == Segment.PULSE, self.cfg.radar_power, self.cfg.comm_power
        )

    def energy_per_pri(self) -> np.ndarray:
        return np.sum(np.abs(self.pri_samples) ** 2, axis=1)

    def previous_samples(self) -> np.ndarray:
        """Samples of PRI k-1 for every k, the warm-up row standing in for PRI -1."""
        return np.vstack([self.warmup_samples[np.newaxis, :], self.pri_samples[:-1]])

    def extended(self) -> np.ndarray:
        """K x 2(N+J) concatenation of PRI k-1 and PRI k."""
        return np.hstack([self.previous_samples(), self.pri_samples])

    def echo_vectors(self, delay_bin: int) -> np.ndarray:
        """Echo vectors x^r_{k,n} of a target n chips away.

        Columns 0..n-1 carry the tail of s_{k-1}, columns n..n+N-1 the code and the
        rest the head of s_k.

        Args:
            delay_bin: Delay n in chips, 1 <= n <= J.

        Returns:
            K x (N+J) matrix.

        """
        if not 1 <= delay_bin <= self.cfg.comm_chips:
            raise DelayOutOfRange(
                f"Delay bin {delay_bin} outside [1, {self.cfg.comm_chips}]."
            )
        length = self.samples_per_pri
        return self.extended()[:, length - delay_bin : 2 * length - delay_bin]

    def render(
        self, pri: int, oversampling: int = 1, segment: int | None = None
    ) -> np.ndarray:
        """Samples one PRI at sub-chip resolution.

        Args:
            pri: PRI index, -1 for the warm-up PRI.
            oversampling: Samples per chip.
            segment: Keep only Segment.PULSE or Segment.COMM, both if None.

        Returns:
            Vector of (N+J) * oversampling samples.

        """
        cfg = self.cfg
        tc = cfg.chip_duration
        if pri == -1:
            pulse = np.zeros(len(self.code) * oversampling, dtype=np.complex128)
            comm = self.warmup_symbols
        else:
            omega = self.embedded_symbols[pri]
            pulse = np.sqrt(cfg.radar_power * tc) * omega
            pulse = pulse * self.code.sample(oversampling)
            comm = self.comm_symbols[pri]
        comm = np.sqrt(cfg.comm_power * tc) * np.repeat(comm, oversampling)

        if segment == Segment.PULSE:
            comm = np.zeros_like(comm)
        elif segment == Segment.COMM:
            pulse = np.zeros_like(pulse)
        return np.concatenate([pulse, comm])


class FrameBuilder:
    """Builder for baseband frames of one waveform configuration and code."""

    def __init__(self, cfg: WaveformConfig, code: FastTimeCode):
        if len(code) != cfg.chips_per_pulse:
            raise DimensionMismatch(
                f"Code has {len(code)} chips but the pulse holds {cfg.chips_per_pulse}."
            )
        self.cfg = cfg
        self.code = code

    def build(
        self, omega: np.ndarray, symbols: np.ndarray, warmup: np.ndarray | None = None
    ) -> BasebandFrame:
        """Build the frame of one coherent processing interval.

        Args:
            omega: K embedded unit-modulus symbols.
            symbols: K x J dedicated symbols.
            warmup: Dedicated symbols of the PRI preceding the first, zeros if omitted.

        Returns:
            The assembled frame.

        """
        omega = np.array(omega, dtype=np.complex128)
        symbols = np.array(symbols, dtype=np.complex128)
        if warmup is None:
            warmup = np.zeros(self.cfg.comm_chips, dtype=np.complex128)
        warmup = np.array(warmup, dtype=np.complex128)
        self._check_dimensions(omega, symbols, warmup)

        return BasebandFrame(
            self.cfg,
            self.code,
            self._build_pri_samples(omega, symbols),
            omega,
            symbols,
            warmup,
            self._build_warmup_samples(warmup),
            self._build_segment_map(),
        )

    def _check_dimensions(
        self, omega: np.ndarray, symbols: np.ndarray, warmup: np.ndarray
    ):
        k, j = self.cfg.pris_per_cpi, self.cfg.comm_chips
        if omega.shape != (k,):
            raise DimensionMismatch(
                f"Expected {k} embedded symbols, got shape {omega.shape}."
            )
        if symbols.shape != (k, j):
            raise DimensionMismatch(
                f"Expected {k} x {j} dedicated symbols, got shape {symbols.shape}."
            )
        if warmup.shape != (j,):
            raise DimensionMismatch(
                f"Expected {j} warm-up symbols, got shape {warmup.shape}."
            )

    def _build_pri_samples(self, omega: np.ndarray, symbols: np.ndarray) -> np.ndarray:
        tc = self.cfg.chip_duration
        pulse = np.sqrt(self.cfg.radar_power * tc) * np.outer(omega, self.code.chips)
        comm = np.sqrt(self.cfg.comm_power * tc) * symbols
        return np.hstack([pulse, comm])

    def _build_warmup_samples(self, warmup: np.ndarray) -> np.ndarray:
        # the pulse of PRI -1 lies beyond every admissible delay
        pulse = np.zeros(self.cfg.chips_per_pulse, dtype=np.complex128)
        comm = np.sqrt(self.cfg.comm_power * self.cfg.chip_duration) * warmup
        return np.concatenate([pulse, comm])

    def _build_segment_map(self) -> np.ndarray:
        return np.concatenate(
            [
                np.full(self.cfg.chips_per_pulse, Segment.PULSE),
                np.full(self.cfg.comm_chips, Segment.COMM),
            ]
        )


def assemble_frame(
    cfg: WaveformConfig,
    code: FastTimeCode,
    omega: np.ndarray,
    symbols: np.ndarray,
    warmup: np.ndarray | None = None,
) -> BasebandFrame:
    """Assembles the frame for given symbols, see FrameBuilder.build."""
    return FrameBuilder(cfg, code).build(omega, symbols, warmup)


def draw_frame(
    cfg: WaveformConfig, code: FastTimeCode, seed: int | np.random.Generator | None
) -> BasebandFrame:
    """Draws random embedded and dedicated symbols and assembles their frame.

    Both symbol sets and the warm-up row come from one generator, so equal seeds give
    bit-identical frames.

    """
    rng = np.random.default_rng(seed)
    omega = draw_embedded_symbols(cfg.psk_order, cfg.pris_per_cpi, rng)
    symbols = draw_comm_symbols(
        cfg.comm_constellation,
        cfg.pris_per_cpi,
        cfg.comm_chips,
        rng,
        order=cfg.comm_psk_order,
        warmup=True,
    )
    return assemble_frame(cfg, code, omega, symbols[1:], warmup=symbols[0])
