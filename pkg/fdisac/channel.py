"""This module contains the link budget and the monostatic echo channel."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np

from fdisac.build import BasebandFrame
from fdisac.errors import ConfigInvalid, DelayOutOfRange, DimensionMismatch
from fdisac.waveform import SPEED_OF_LIGHT, WaveformConfig

logger = logging.getLogger(__name__)

DOPPLER_WARN_LIMIT = 0.05


def db_to_power(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def power_to_db(value: float) -> float:
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(value))


@dataclass(frozen=True)
class LinkBudget:
    """Geometry and antenna parameters of the radar and communication paths.

    Attributes:
        carrier_freq: Carrier frequency fc in Hz.
        tx_gain: Transmit antenna gain Gt, linear.
        rx_gain: Radar receive antenna gain Gr, linear.
        comm_rx_gain: Gain Gc of the communication receiver antenna, linear.
        rcs: Radar cross section sigma in m^2.
        target_range: Target distance R in meters.
        comm_range: Distance R_com to the communication receiver in meters.
        pathloss_exp: Path-loss exponent gamma of the communication link.

    """

    carrier_freq: float = 3.5e9
    tx_gain: float = 10**1.7
    rx_gain: float = 10**1.7
    comm_rx_gain: float = 1.0
    rcs: float = 1.0
    target_range: float = 1350.0
    comm_range: float = 400.0
    pathloss_exp: float = 2.7

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigInvalid(problems)

    def problems(self) -> list[str]:
        problems = []
        for name in (
            "carrier_freq",
            "tx_gain",
            "rx_gain",
            "comm_rx_gain",
            "target_range",
            "comm_range",
            "pathloss_exp",
        ):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                problems.append(f"link.{name}: has to be positive and finite")
        if not np.isfinite(self.rcs) or self.rcs < 0:
            problems.append("link.rcs: has to be nonnegative and finite")
        return problems

    @classmethod
    def from_db(
        cls,
        tx_gain_db: float = 17.0,
        rx_gain_db: float = 17.0,
        comm_rx_gain_db: float = 0.0,
        **kwargs,
    ) -> LinkBudget:
        """Creates a budget from antenna gains given in dBi."""
        return cls(
            tx_gain=db_to_power(tx_gain_db),
            rx_gain=db_to_power(rx_gain_db),
            comm_rx_gain=db_to_power(comm_rx_gain_db),
            **kwargs,
        )

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    def with_range(self, target_range: float) -> LinkBudget:
        return dataclasses.replace(self, target_range=target_range)


@dataclass(frozen=True)
class ChannelState:
    """Target, self-interference and noise parameters seen by the radar receiver.

    Attributes:
        alpha: Complex two-way target gain including the delay phase.
        delay_bin: Target delay n_tau in chips.
        doppler_bin: Nearest Doppler bin q, 0 for a static target.
        doppler_hz: Doppler shift f_d in Hz.
        si_gain: Complex self-interference gain beta.
        sic_factor: Residual-to-original self-interference power ratio epsilon.
        noise_psd: Noise power spectral density N0 in W/Hz.
        target_present: Whether the echo is part of the received signal.

    """

    alpha: complex = 0j
    delay_bin: int = 1
    doppler_bin: int = 0
    doppler_hz: float = 0.0
    si_gain: complex = 0.1 + 0j
    sic_factor: float = 1e-8
    noise_psd: float = db_to_power(-199.0)
    target_present: bool = True

    def __post_init__(self):
        problems = []
        if self.delay_bin < 1:
            problems.append("channel.delay_bin: has to be at least 1")
        if not 0 <= self.sic_factor <= 1:
            problems.append("channel.sic_factor: has to lie in [0, 1]")
        if self.noise_psd < 0:
            problems.append("channel.noise_psd: has to be nonnegative")
        if problems:
            raise ConfigInvalid(problems)

    @classmethod
    def bin_aligned(
        cls,
        cfg: WaveformConfig,
        alpha: complex,
        delay_bin: int,
        doppler_bin: int,
        **kwargs,
    ) -> ChannelState:
        """Creates a state whose Doppler shift sits exactly on bin q, f_d = q/(K*T)."""
        doppler_hz = doppler_bin / (cfg.pris_per_cpi * cfg.pri)
        return cls(
            alpha=alpha,
            delay_bin=delay_bin,
            doppler_bin=doppler_bin,
            doppler_hz=doppler_hz,
            **kwargs,
        )

    @property
    def si_gain_sq(self) -> float:
        return abs(self.si_gain) ** 2

    @property
    def target_gain_sq(self) -> float:
        return abs(self.alpha) ** 2 if self.target_present else 0.0


def radar_two_way_gain(link: LinkBudget) -> float:
    """Two-way target gain |alpha|^2 = Gt*Gr*lambda^2*sigma / ((4 pi)^3 R^4)."""
    return (
        link.tx_gain
        * link.rx_gain
        * link.wavelength**2
        * link.rcs
        / ((4 * np.pi) ** 3 * link.target_range**4)
    )


def comm_gain(link: LinkBudget) -> float:
    """Communication gain |h|^2 = Gt*Gc*lambda^2 / ((4 pi)^2 R_com^gamma)."""
    return (
        link.tx_gain
        * link.comm_rx_gain
        * link.wavelength**2
        / ((4 * np.pi) ** 2 * link.comm_range**link.pathloss_exp)
    )


def doppler_from_velocity(velocity: float, wavelength: float) -> float:
    """Doppler shift 2v/lambda, negative for a receding target."""
    if wavelength <= 0:
        raise ValueError("The wavelength has to be positive.")
    return 2.0 * velocity / wavelength


def delay_bin_from_range(
    target_range: float, cfg: WaveformConfig, warn: bool = True
) -> int:
    """Rounds the round-trip delay of a target to a delay bin within [1, J]."""
    raw = round(2.0 * target_range * cfg.bandwidth / SPEED_OF_LIGHT)
    delay_bin = min(max(raw, 1), cfg.comm_chips)
    if warn and delay_bin != raw:
        logger.warning(
            "range %.6g m maps to delay bin %d, clipped to %d",
            target_range,
            raw,
            delay_bin,
        )
    return delay_bin


def range_from_delay_bin(delay_bin: int, cfg: WaveformConfig) -> float:
    return delay_bin * SPEED_OF_LIGHT / (2.0 * cfg.bandwidth)


def doppler_bin(doppler_hz: float, cfg: WaveformConfig) -> int:
    """Nearest Doppler bin of a shift, wrapped into [-K/2, K/2]."""
    k = cfg.pris_per_cpi
    q = round(doppler_hz * k * cfg.pri)
    return int((q + k // 2) % k - k // 2)


def apply_channel(
    frame: BasebandFrame, ch: ChannelState, seed: int | np.random.Generator | None
) -> np.ndarray:
    """Passes a frame through the echo, self-interference and noise channel.

    Row k of the result is alpha*exp(j 2 pi f_d k T)*x^r_{k,n} + beta*x_k^d + n_k with
    complex normal noise of variance N0 per sample.

    Args:
        frame: Transmitted frame.
        ch: Channel state.
        seed: Integer seed or generator of the noise.

    Returns:
        K x (N+J) received samples.

    """
    cfg = frame.cfg
    if frame.pri_samples.shape != (cfg.pris_per_cpi, cfg.samples_per_pri):
        raise DimensionMismatch("Frame samples do not match its configuration.")
    if not 1 <= ch.delay_bin <= cfg.comm_chips:
        raise DelayOutOfRange(
            f"Delay bin {ch.delay_bin} outside [1, {cfg.comm_chips}]."
        )
    if abs(ch.doppler_hz * cfg.pri) >= DOPPLER_WARN_LIMIT:
        logger.warning(
            "f_d*T = %.3g, the Doppler phase is no longer constant within a PRI",
            ch.doppler_hz * cfg.pri,
        )

    rng = np.random.default_rng(seed)
    received = ch.si_gain * frame.pri_samples
    if ch.target_present and ch.alpha != 0:
        slow_time = np.arange(frame.pris) * cfg.pri
        phase = np.exp(2j * np.pi * ch.doppler_hz * slow_time)[:, np.newaxis]
        received = received + ch.alpha * phase * frame.echo_vectors(ch.delay_bin)
    if ch.noise_psd > 0:
        shape = received.shape
        noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        received = received + np.sqrt(ch.noise_psd / 2) * noise
    return received
