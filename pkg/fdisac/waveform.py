"""This module contains the waveform parameters, symbol sources and chip pulse."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from commpy.filters import rrcosfilter
from scipy import signal

from fdisac.codes import CodeKind, FastTimeCode
from fdisac.errors import ConfigInvalid, DelayOutOfRange, DimensionMismatch

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299792458.0


class Constellation:
    """Enum of dedicated communication symbol alphabets."""

    PSK_M = "psk"
    GAUSSIAN = "gaussian"

    ALL = (PSK_M, GAUSSIAN)


@dataclass(frozen=True)
class WaveformConfig:
    """Timing, power and modulation parameters of one coherent processing interval.

    The chip duration is derived as 1/B, the pulse holds N = round(B*Tp) chips and
    the communication segment J = round(B*(T-Tp)) chips.

    Attributes:
        bandwidth: Signal bandwidth B in Hz.
        pri: Pulse repetition interval T in seconds.
        pulse_duration: Radar pulse duration Tp in seconds.
        pris_per_cpi: Number K of PRIs per coherent processing interval.
        radar_power: Pulse power Pr in watts.
        comm_power: Communication segment power Pc in watts.
        psk_order: Order M of the PSK symbols embedded across pulses.
        code_kind: Fast-time code family, one of CodeKind.
        comm_constellation: Alphabet of the dedicated symbols, one of Constellation.
        comm_psk_order: Order of the dedicated symbols when they are PSK.

    """

    bandwidth: float = 100e6
    pri: float = 10e-6
    pulse_duration: float = 1e-6
    pris_per_cpi: int = 100
    radar_power: float = 1.0
    comm_power: float = 1.0
    psk_order: int = 128
    code_kind: str = CodeKind.LFM_DERIVED
    comm_constellation: str = Constellation.GAUSSIAN
    comm_psk_order: int = 4

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigInvalid(problems)

    def problems(self) -> list[str]:
        """Lists every violated invariant of the configuration."""
        problems = []
        for name in ("bandwidth", "pri", "pulse_duration"):
            if not np.isfinite(getattr(self, name)) or getattr(self, name) <= 0:
                problems.append(f"waveform.{name}: has to be positive and finite")
        if problems:
            return problems

        if self.pulse_duration >= self.pri:
            problems.append("waveform.pulse_duration: has to be shorter than the pri")
        else:
            n, j = self.chips_per_pulse, self.comm_chips
            if n < 1:
                problems.append("waveform.pulse_duration: pulse shorter than one chip")
            if j < 1:
                problems.append("waveform.pri: no room for a communication chip")
            if n + j != round(self.bandwidth * self.pri):
                problems.append(
                    "waveform: rounded pulse and communication chips miss the pri"
                )
        if self.pris_per_cpi < 1:
            problems.append("waveform.pris_per_cpi: has to be at least 1")
        if self.psk_order < 2:
            problems.append("waveform.psk_order: has to be at least 2")
        if self.comm_psk_order < 2:
            problems.append("waveform.comm_psk_order: has to be at least 2")
        if self.radar_power < 0:
            problems.append("waveform.radar_power: has to be nonnegative")
        if self.comm_power < 0:
            problems.append("waveform.comm_power: has to be nonnegative")
        if self.radar_power == 0 and self.comm_power == 0:
            problems.append("waveform: radar_power and comm_power cannot both be zero")
        if self.code_kind not in CodeKind.ALL:
            problems.append(f"waveform.code_kind: unknown code '{self.code_kind}'")
        if self.comm_constellation not in Constellation.ALL:
            problems.append(
                "waveform.comm_constellation: "
                f"unknown alphabet '{self.comm_constellation}'"
            )
        return problems

    @property
    def chip_duration(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def chips_per_pulse(self) -> int:
        return round(self.bandwidth * self.pulse_duration)

    @property
    def comm_chips(self) -> int:
        return round(self.bandwidth * (self.pri - self.pulse_duration))

    @property
    def samples_per_pri(self) -> int:
        return self.chips_per_pulse + self.comm_chips

    @property
    def duty_cycle(self) -> float:
        return self.pulse_duration / self.pri

    @property
    def average_power(self) -> float:
        """Power averaged over one PRI, rho*Pr + (1-rho)*Pc."""
        rho = self.duty_cycle
        return rho * self.radar_power + (1 - rho) * self.comm_power

    @property
    def pulse_energy(self) -> float:
        return self.radar_power * self.chip_duration * self.chips_per_pulse

    @property
    def comm_energy(self) -> float:
        return self.comm_power * self.chip_duration * self.comm_chips

    def with_powers(self, radar_power: float, comm_power: float) -> WaveformConfig:
        """Returns a copy with other pulse and communication powers."""
        return dataclasses.replace(self, radar_power=radar_power, comm_power=comm_power)


def psk_points(order: int) -> np.ndarray:
    """Constellation exp(j 2 pi m / M) for m = 0..M-1."""
    return np.exp(2j * np.pi * np.arange(order) / order)


def draw_embedded_symbols(
    order: int, count: int, seed: int | np.random.Generator | None
) -> np.ndarray:
    """Draws PSK symbols embedded across pulses, uniform over the M points.

    Args:
        order: PSK order M.
        count: Number K of symbols.
        seed: Integer seed or generator.

    Returns:
        Unit-modulus vector of length K.

    """
    rng = np.random.default_rng(seed)
    return psk_points(order)[rng.integers(0, order, count)]


def draw_comm_symbols(
    kind: str,
    rows: int,
    columns: int,
    seed: int | np.random.Generator | None,
    order: int = 4,
    warmup: bool = False,
) -> np.ndarray:
    """Draws the dedicated communication symbols s_k[j].

    Args:
        kind: Constellation.PSK_M for unit-modulus M-PSK or Constellation.GAUSSIAN for
            circularly symmetric complex normal symbols of unit variance.
        rows: Number K of PRIs.
        columns: Number J of symbols per PRI.
        seed: Integer seed or generator.
        order: PSK order, only used by Constellation.PSK_M.
        warmup: Prepend one hidden row s_{-1} for the PRI preceding the first.

    Returns:
        Matrix with K rows, or K+1 rows when warmup is set.

    """
    if columns < 1:
        raise DimensionMismatch("At least one communication symbol per PRI is needed.")
    rng = np.random.default_rng(seed)
    shape = (rows + 1 if warmup else rows, columns)
    if kind == Constellation.PSK_M:
        return psk_points(order)[rng.integers(0, order, shape)]
    if kind == Constellation.GAUSSIAN:
        values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return values / np.sqrt(2)
    raise ValueError(f"Unknown constellation '{kind}'.")


class NyquistPulse:
    """Truncated root-raised-cosine chip pulse with unit energy.

    Samples are stored on a grid of oversampling_factor points per chip spanning
    support_chips chips on each side of the centre. Its autocorrelation at nonzero
    multiples of the chip period approximates zero.

    Attributes:
        oversampling_factor: Samples per chip.
        support_chips: One-sided support in chips.
        roll_off: Excess bandwidth factor in (0, 1].
        samples: Real pulse samples normalized to unit energy in chip units.

    """

    def __init__(
        self,
        oversampling_factor: int = 16,
        support_chips: int = 512,
        roll_off: float = 1.0,
    ):
        if oversampling_factor < 8:
            raise ValueError("The Nyquist pulse needs at least 8 samples per chip.")
        if support_chips < 1:
            raise ValueError("The Nyquist pulse needs a support of at least one chip.")
        if not 0 < roll_off <= 1:
            raise ValueError("The roll-off factor has to lie in (0, 1].")

        self.oversampling_factor = oversampling_factor
        self.support_chips = support_chips
        self.roll_off = roll_off

        # even tap count centres the filter on a sample, the first tap is extra
        half = support_chips * oversampling_factor
        _, h = rrcosfilter(2 * half + 2, roll_off, 1.0, oversampling_factor)
        h = h[1:]
        self.samples = h / np.sqrt(np.sum(h**2) / oversampling_factor)

    @property
    def half_length(self) -> int:
        return self.support_chips * self.oversampling_factor

    def chip_autocorrelation(self) -> np.ndarray:
        """Autocorrelation at chip lags 0..2*support_chips."""
        full = signal.correlate(self.samples, self.samples, mode="full")
        full = full / self.oversampling_factor
        centre = self.samples.size - 1
        return full[centre :: self.oversampling_factor]

    def max_isi(self) -> float:
        """Largest autocorrelation magnitude at a nonzero chip lag."""
        return float(np.max(np.abs(self.chip_autocorrelation()[1:])))


def continuous_projection_oracle(
    cfg: WaveformConfig,
    code: FastTimeCode,
    omega: np.ndarray,
    symbols: np.ndarray,
    pulse: NyquistPulse,
    delay_bin: int,
    warmup: np.ndarray | None = None,
) -> np.ndarray:
    """Projects the delayed continuous-time waveform onto the chip pulses.

    Each PRI is synthesized together with its predecessor as a sum of shifted
    Nyquist pulses, delayed by delay_bin chips and correlated with psi(t - l*Tc)
    by numerical integration. Delay 0 yields the transmitted chips themselves.

    Args:
        cfg: Waveform configuration.
        code: Fast-time code of length N.
        omega: Embedded symbols, one per PRI.
        symbols: Dedicated symbols, K x J.
        pulse: Oversampled chip pulse.
        delay_bin: Delay n_tau in chips, 0 <= n_tau <= J.
        warmup: Dedicated symbols of the PRI preceding the first, zeros if omitted.

    Returns:
        K x (N+J) matrix of projections.

    """
    n_chips, j_chips, length = cfg.chips_per_pulse, cfg.comm_chips, cfg.samples_per_pri
    if not 0 <= delay_bin <= j_chips:
        raise DelayOutOfRange(f"Delay bin {delay_bin} outside [0, {j_chips}].")
    omega = np.asarray(omega)
    symbols = np.asarray(symbols)
    if len(code) != n_chips or symbols.shape != (omega.size, j_chips):
        raise DimensionMismatch(
            "Code or symbols do not match the waveform configuration."
        )
    if warmup is None:
        warmup = np.zeros(j_chips, dtype=np.complex128)

    pulse_amp = np.sqrt(cfg.radar_power * cfg.chip_duration)
    comm_amp = np.sqrt(cfg.comm_power * cfg.chip_duration)
    os_ = pulse.oversampling_factor

    previous_omega = np.concatenate([[0.0], omega[:-1]])
    previous_symbols = np.vstack([warmup[np.newaxis, :], symbols[:-1]])
    starts = (np.arange(length) + length - delay_bin) * os_

    projections = np.empty((omega.size, length), dtype=np.complex128)
    for k in range(omega.size):
        chips = np.concatenate(
            [
                pulse_amp * previous_omega[k] * code.chips,
                comm_amp * previous_symbols[k],
                pulse_amp * omega[k] * code.chips,
                comm_amp * symbols[k],
            ]
        )
        impulses = np.zeros(chips.size * os_, dtype=np.complex128)
        impulses[::os_] = chips
        wave = signal.fftconvolve(impulses, pulse.samples)
        correlation = signal.correlate(wave, pulse.samples, mode="valid")
        projections[k] = correlation[starts] / os_

    logger.debug("projected %d PRIs at delay bin %d", omega.size, delay_bin)
    return projections
