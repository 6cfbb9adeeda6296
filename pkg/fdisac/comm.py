"""This module contains the communication receiver and its performance formulas."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from fdisac.channel import LinkBudget, comm_gain
from fdisac.codes import FastTimeCode
from fdisac.waveform import WaveformConfig, psk_points

logger = logging.getLogger(__name__)

SER_BATCH = 20000


@dataclass(frozen=True)
class CommLink:
    """Direct path from the transmitter to the communication receiver.

    Attributes:
        h_gain: Complex channel coefficient h.
        noise_psd: Receiver noise spectral density N0 in W/Hz.
        psk_order: Order M of the embedded PSK symbols.

    """

    h_gain: complex
    noise_psd: float
    psk_order: int = 128

    @classmethod
    def from_budget(
        cls,
        link: LinkBudget,
        noise_psd: float,
        psk_order: int = 128,
        phase: float = 0.0,
    ) -> CommLink:
        """Creates a link whose |h|^2 follows the path-loss model of the budget."""
        h_gain = math.sqrt(comm_gain(link)) * complex(math.cos(phase), math.sin(phase))
        return cls(h_gain, noise_psd, psk_order)

    @property
    def gain_sq(self) -> float:
        return abs(self.h_gain) ** 2


def embedded_snr(
    h_gain: complex,
    radar_power: float,
    pulse_chips: int,
    noise_psd: float,
    bandwidth: float,
) -> float:
    """SNR |h|^2*Pr*N/(N0*B) of an embedded symbol after the code matched filter."""
    return abs(h_gain) ** 2 * radar_power * pulse_chips / (noise_psd * bandwidth)


def _nearest_psk(estimate: np.ndarray, order: int) -> np.ndarray:
    index = np.rint(np.angle(estimate) * order / (2 * np.pi)).astype(int) % order
    return psk_points(order)[index]


def demod_embedded(
    received: np.ndarray,
    code: FastTimeCode,
    h_gain: complex,
    radar_power: float,
    chip_duration: float,
    order: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Demodulates embedded PSK symbols from the pulse chips.

    The statistic (1/sqrt(N)) c^H y_c equals h*sqrt(Pr*Tc*N)*omega_k plus noise of
    variance N0. It is divided by h*sqrt(Pr*Tc*N) and mapped to the nearest point.

    Args:
        received: Pulse chips 0..N-1, one row per PRI.
        code: Fast-time code known at the receiver.
        h_gain: Channel coefficient h, known at the receiver.
        radar_power: Pulse power Pr.
        chip_duration: Tc.
        order: PSK order M.

    Returns:
        Decided symbols and the matched filter statistics.

    """
    received = np.atleast_2d(received)
    pulse_chips = len(code)
    statistic = received @ np.conj(code.chips) / math.sqrt(pulse_chips)
    amplitude = h_gain * math.sqrt(radar_power * chip_duration * pulse_chips)
    estimate = statistic / amplitude
    return _nearest_psk(estimate, order), statistic


def demod_dedicated(
    received: np.ndarray,
    h_gain: complex,
    comm_power: float,
    chip_duration: float,
    order: int,
) -> np.ndarray:
    """Hard PSK decisions on dedicated communication chips."""
    estimate = np.asarray(received) / (h_gain * math.sqrt(comm_power * chip_duration))
    return _nearest_psk(estimate, order)


def ser_embedded_analytic(
    h_gain: complex,
    radar_power: float,
    pulse_chips: int,
    noise_psd: float,
    bandwidth: float,
    order: int,
) -> float:
    """Symbol error probability 2Q(sqrt(2*SNR)*sin(pi/M)) of the embedded symbols.

    The union bound exceeds 1 at low SNR, the result is clamped to [0, 1].

    """
    snr = embedded_snr(h_gain, radar_power, pulse_chips, noise_psd, bandwidth)
    value = 2.0 * stats.norm.sf(math.sqrt(2.0 * snr) * math.sin(math.pi / order))
    if value > 1.0:
        logger.debug("symbol error bound %.3g clamped to 1", value)
    return float(min(max(value, 0.0), 1.0))


def spectrum_efficiency_dedicated(
    h_gain: complex,
    comm_power: float,
    noise_psd: float,
    bandwidth: float,
    duty_cycle: float,
) -> float:
    """Gaussian-signalling efficiency (1-rho)*log2(1 + |h|^2*Pc/(N0*B))."""
    if not 0 <= duty_cycle < 1:
        raise ValueError("Duty cycle has to lie in [0, 1).")
    snr = abs(h_gain) ** 2 * comm_power / (noise_psd * bandwidth)
    return (1 - duty_cycle) * math.log2(1 + snr)


def simulate_embedded_ser(
    link: CommLink,
    cfg: WaveformConfig,
    code: FastTimeCode,
    trials: int,
    seed: int | np.random.Generator | None,
) -> tuple[float, float]:
    """Monte-Carlo symbol error rate of the embedded PSK symbols.

    Returns:
        Error rate and the half-width of its 95% binomial interval.

    """
    rng = np.random.default_rng(seed)
    points = psk_points(link.psk_order)
    amplitude = link.h_gain * math.sqrt(cfg.radar_power * cfg.chip_duration)
    errors = 0
    done = 0
    while done < trials:
        batch = min(SER_BATCH, trials - done)
        sent = rng.integers(0, link.psk_order, batch)
        shape = (batch, len(code))
        noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        received = amplitude * np.outer(points[sent], code.chips)
        received = received + math.sqrt(link.noise_psd / 2) * noise
        decided, _ = demod_embedded(
            received,
            code,
            link.h_gain,
            cfg.radar_power,
            cfg.chip_duration,
            link.psk_order,
        )
        errors += int(np.count_nonzero(decided != points[sent]))
        done += batch

    rate = errors / trials
    return rate, 1.96 * math.sqrt(rate * (1 - rate) / trials)
