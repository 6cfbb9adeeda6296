"""Closed-form sensing performance and ambiguity analysis."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal, special

from fdisac.build import BasebandFrame, Segment, draw_frame
from fdisac.channel import (
    ChannelState,
    LinkBudget,
    db_to_power,
    delay_bin_from_range,
    power_to_db,
    radar_two_way_gain,
)
from fdisac.codes import FastTimeCode
from fdisac.errors import DelayOutOfRange, LagOutOfRange
from fdisac.receiver import check_probability
from fdisac.waveform import SPEED_OF_LIGHT, WaveformConfig

logger = logging.getLogger(__name__)

_SERIES_TOLERANCE = 1e-14
_SERIES_CHUNK = 64
_SERIES_MAX_TERMS = 100000


class Branch:
    """Enum of the delay regions of the residual self-interference."""

    NEAR = "near"
    FAR = "far"


def _residual_numerator(radar_power, comm_power, delay_bin, pulse_chips, comm_chips):
    near = (
        radar_power**2 * pulse_chips
        + comm_power**2 * comm_chips
        - delay_bin * (radar_power - comm_power) ** 2
    )
    far = (
        comm_power**2 * (comm_chips - pulse_chips)
        + 2 * comm_power * radar_power * pulse_chips
    )
    return np.where(delay_bin <= pulse_chips, near, far)


def residual_si_power(
    radar_power: float,
    comm_power: float,
    delay_bin: int,
    pulse_chips: int,
    comm_chips: int,
    chip_duration: float,
    si_gain_sq: float,
    sic_factor: float,
) -> float:
    """Power E|z_k|^2 of the residual self-interference after the matched filter.

    Args:
        radar_power: Pulse power Pr.
        comm_power: Communication power Pc.
        delay_bin: Range bin n_tau of the filter, 1 <= n_tau <= J.
        pulse_chips: N.
        comm_chips: J.
        chip_duration: Tc.
        si_gain_sq: |beta|^2.
        sic_factor: eps.

    Returns:
        The residual power, zero for perfect cancellation.

    """
    if not 1 <= delay_bin <= comm_chips:
        raise DelayOutOfRange(f"Delay bin {delay_bin} outside [1, {comm_chips}].")
    numerator = _residual_numerator(
        radar_power, comm_power, delay_bin, pulse_chips, comm_chips
    )
    energy = comm_power * comm_chips + radar_power * pulse_chips
    return float(sic_factor * si_gain_sq * chip_duration * numerator / energy)


def sigma_phi_sq_profile(
    cfg: WaveformConfig, ch: ChannelState, bins: np.ndarray | None = None
) -> np.ndarray:
    """Noise plus residual SI power sigma_phi^2 of every range bin."""
    if bins is None:
        bins = np.arange(1, cfg.comm_chips + 1)
    bins = np.asarray(bins)
    numerator = _residual_numerator(
        cfg.radar_power, cfg.comm_power, bins, cfg.chips_per_pulse, cfg.comm_chips
    )
    energy = cfg.comm_power * cfg.comm_chips + cfg.radar_power * cfg.chips_per_pulse
    residual = ch.sic_factor * ch.si_gain_sq * cfg.chip_duration * numerator / energy
    return residual + ch.noise_psd


@dataclass(frozen=True)
class SinrBreakdown:
    """Per-bin SINR and its constituents, powers referred to the full bandwidth.

    Attributes:
        signal_power: |alpha|^2 (Pc*J + Pr*N).
        residual_si_power: B * E|z_k|^2.
        noise_power: N0 * B.
        sinr1: SINR after the matched filter of one PRI.
        sinr_k: SINR after coherent integration over K PRIs.
        branch: Branch.NEAR or Branch.FAR.
        delay_bin: Range bin the values refer to.

    """

    signal_power: float
    residual_si_power: float
    noise_power: float
    sinr1: float
    sinr_k: float
    branch: str
    delay_bin: int

    @property
    def sinr1_db(self) -> float:
        return power_to_db(self.sinr1)

    @property
    def sinr_k_db(self) -> float:
        return power_to_db(self.sinr_k)


def sinr1(
    cfg: WaveformConfig,
    ch: ChannelState,
    delay_bin: int | None = None,
    radar_power: float | None = None,
    comm_power: float | None = None,
) -> SinrBreakdown:
    """Evaluates the matched filter SINR of a range bin.

    Args:
        cfg: Waveform configuration.
        ch: Channel state with the target gain, SI gain, SIC factor and N0.
        delay_bin: Range bin, the channel's delay bin if None.
        radar_power: Pulse power, the configured one if None.
        comm_power: Communication power, the configured one if None.

    Returns:
        The SINR breakdown.

    """
    pr = cfg.radar_power if radar_power is None else radar_power
    pc = cfg.comm_power if comm_power is None else comm_power
    n = ch.delay_bin if delay_bin is None else delay_bin
    n_chips, j_chips = cfg.chips_per_pulse, cfg.comm_chips

    residual = residual_si_power(
        pr, pc, n, n_chips, j_chips, cfg.chip_duration, ch.si_gain_sq, ch.sic_factor
    )
    residual_power = residual * cfg.bandwidth
    noise_power = ch.noise_psd * cfg.bandwidth
    signal_power = ch.target_gain_sq * (pc * j_chips + pr * n_chips)
    interference = residual_power + noise_power
    if interference > 0:
        ratio = signal_power / interference
    else:
        ratio = math.inf if signal_power > 0 else 0.0

    return SinrBreakdown(
        signal_power=signal_power,
        residual_si_power=residual_power,
        noise_power=noise_power,
        sinr1=ratio,
        sinr_k=cfg.pris_per_cpi * ratio,
        branch=Branch.NEAR if n <= n_chips else Branch.FAR,
        delay_bin=n,
    )


def _bessel_series(ratio: float, x: float, start: int) -> float:
    # terms ratio^k * ive(k, x) decrease monotonically in k
    total = 0.0
    first = start
    while first < _SERIES_MAX_TERMS:
        orders = np.arange(first, first + _SERIES_CHUNK)
        terms = ratio**orders * special.ive(orders, x)
        total += float(np.sum(terms))
        if terms[-1] < _SERIES_TOLERANCE:
            return total
        first += _SERIES_CHUNK
    logger.warning("Marcum Q series truncated at %d terms", _SERIES_MAX_TERMS)
    return total


def _marcum_q1(a: float, b: float) -> float:
    if b == 0 or math.isinf(a):
        return 1.0
    if a == 0:
        return math.exp(-b * b / 2)
    x = a * b
    if a < b:
        value = math.exp(-((b - a) ** 2) / 2) * _bessel_series(a / b, x, 0)
    else:
        value = 1.0 - math.exp(-((a - b) ** 2) / 2) * _bessel_series(b / a, x, 1)
    return min(max(value, 0.0), 1.0)


def marcum_q1(a: float | np.ndarray, b: float | np.ndarray) -> float | np.ndarray:
    """First-order Marcum Q function Q1(a, b).

    Evaluated with the exponentially scaled modified Bessel series, using the
    complementary expansion when a >= b.

    Args:
        a: Noncentrality, nonnegative.
        b: Threshold, nonnegative.

    Returns:
        Q1(a, b), a float for scalar inputs and an array otherwise.

    """
    a_arr, b_arr = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    )
    invalid = np.any(a_arr < 0) or np.any(np.isnan(a_arr)) or np.any(b_arr < 0)
    if invalid or not np.all(np.isfinite(b_arr)):
        raise ValueError(
            "Marcum Q arguments have to be nonnegative, the threshold finite."
        )
    if a_arr.ndim == 0:
        return _marcum_q1(float(a_arr), float(b_arr))
    values = [_marcum_q1(x, y) for x, y in zip(a_arr.ravel(), b_arr.ravel())]
    return np.array(values).reshape(a_arr.shape)


def prob_detection(sinr_k: float | np.ndarray, p_fa: float) -> float | np.ndarray:
    """Detection probability Q1(sqrt(2*SINR_K), sqrt(-2 ln P_FA)) of the detector."""
    check_probability(p_fa)
    sinr_k = np.asarray(sinr_k, dtype=float)
    if np.any(sinr_k < 0):
        raise ValueError("SINR has to be nonnegative.")
    return marcum_q1(np.sqrt(2 * sinr_k), math.sqrt(-2 * math.log(p_fa)))


def blind_range(pulse_duration: float, recovery_time: float = 0.0) -> float:
    """Minimum range c(Tp + t_r)/2 of a half-duplex pulsed radar."""
    return SPEED_OF_LIGHT * (pulse_duration + recovery_time) / 2


def unambiguous_range(pri: float, pulse_duration: float) -> float:
    return SPEED_OF_LIGHT * (pri - pulse_duration) / 2


def range_resolution(bandwidth: float) -> float:
    return SPEED_OF_LIGHT / (2 * bandwidth)


def rate_embedded(psk_order: int, duty_cycle: float, pulse_chips: int) -> float:
    """Spectrum efficiency of PSK symbols embedded one per pulse."""
    if psk_order < 2:
        raise ValueError("PSK order has to be at least 2.")
    return duty_cycle / pulse_chips * math.log2(psk_order)


def rate_total(psk_order: int, duty_cycle: float, pulse_chips: int) -> float:
    """Embedded rate plus M-ary signalling on the whole communication segment."""
    dedicated = (1 - duty_cycle) * math.log2(psk_order)
    return rate_embedded(psk_order, duty_cycle, pulse_chips) + dedicated


def required_sic_db(
    cfg: WaveformConfig,
    ch: ChannelState,
    p_fa: float,
    target: float = 0.99,
    bracket: tuple[float, float] = (-250.0, 0.0),
) -> float:
    """Largest SIC factor in dB that still reaches the target detection probability.

    Returns:
        The factor in dB, nan if even perfect cancellation misses the target.

    """

    def margin(sic_db: float) -> float:
        state = dataclasses.replace(ch, sic_factor=db_to_power(sic_db))
        return prob_detection(sinr1(cfg, state).sinr_k, p_fa) - target

    low, high = bracket
    if margin(low) < 0:
        logger.warning(
            "target P_D %.3g unreachable even with perfect cancellation", target
        )
        return math.nan
    if margin(high) >= 0:
        return high
    return optimize.brentq(margin, low, high, xtol=1e-9)


def max_detection_range(
    cfg: WaveformConfig,
    link: LinkBudget,
    ch: ChannelState,
    p_fa: float,
    target: float = 0.99,
    points: int = 2000,
) -> float:
    """Largest range within the unambiguous range that reaches the target P_D.

    The target gain follows the two-way radar equation and the delay bin the range.

    Returns:
        Range in meters, nan if no range reaches the target.

    """

    def detection(target_range: float) -> float:
        state = dataclasses.replace(
            ch,
            alpha=math.sqrt(radar_two_way_gain(link.with_range(target_range))),
            delay_bin=delay_bin_from_range(target_range, cfg, warn=False),
            target_present=True,
        )
        return prob_detection(sinr1(cfg, state).sinr_k, p_fa)

    grid = np.linspace(
        range_resolution(cfg.bandwidth),
        unambiguous_range(cfg.pri, cfg.pulse_duration),
        points,
    )
    reached = np.array([detection(r) >= target for r in grid])
    if not reached.any():
        return math.nan
    last = int(np.flatnonzero(reached)[-1])
    if last == grid.size - 1:
        return float(grid[-1])
    return optimize.brentq(
        lambda r: detection(r) - target, grid[last], grid[last + 1], xtol=1e-6
    )


def alpha_for_sinr(cfg: WaveformConfig, ch: ChannelState, sinr_k: float) -> float:
    """Target gain magnitude |alpha| giving the SINR_K in the channel's bin."""
    reference = sinr1(cfg, dataclasses.replace(ch, alpha=1.0, target_present=True))
    return math.sqrt(sinr_k / reference.sinr_k)


@dataclass(frozen=True)
class AcfCurve:
    """Normalized autocorrelation of one PRI.

    Attributes:
        lags: Lags in seconds.
        values: Normalized magnitude, 1 at zero lag.
        psl_db: Peak sidelobe level in dB.
        components: Complex normalized contributions per lag: "pulse_acf" of the pulse
            with itself, "phi" of the remaining terms within the pulse duration and
            "psi" beyond it.

    """

    lags: np.ndarray
    values: np.ndarray
    psl_db: float
    components: dict[str, np.ndarray]


@dataclass(frozen=True)
class AcfEnvelope:
    """Per-lag statistics of the autocorrelation over independent symbol draws."""

    lags: np.ndarray
    median: np.ndarray
    p95: np.ndarray
    std: np.ndarray
    draws: int


def _check_lags(
    cfg: WaveformConfig, lag_bins: np.ndarray | None, oversampling: int
) -> np.ndarray:
    max_lag = cfg.comm_chips * oversampling
    if lag_bins is None:
        return np.arange(-max_lag, max_lag + 1)
    lag_bins = np.asarray(lag_bins, dtype=int)
    if np.any(np.abs(lag_bins) > max_lag):
        raise LagOutOfRange(f"Lags have to stay within {max_lag} samples of zero.")
    return lag_bins


def _correlate_pri(
    current: np.ndarray, previous: np.ndarray, max_lag: int
) -> np.ndarray:
    # c(d) = sum_i current[i] * conj(x(t_i - d)), x before the PRI from its predecessor
    extended = np.concatenate([previous, current])
    correlation = signal.correlate(extended, current, mode="valid")
    return np.conj(correlation[current.size - np.arange(max_lag + 1)])


def _ambiguity_row(
    frame: BasebandFrame,
    pri: int,
    oversampling: int,
    doppler_hz: float = 0.0,
    segment: int | None = None,
) -> np.ndarray:
    previous_pri = pri - 1 if pri > 0 else -1
    current = frame.render(pri, oversampling, segment)
    previous = frame.render(previous_pri, oversampling, segment)
    if doppler_hz != 0:
        t = np.arange(current.size) * frame.cfg.chip_duration / oversampling
        current = current * np.exp(-2j * np.pi * doppler_hz * t)
    return _correlate_pri(current, previous, frame.cfg.comm_chips * oversampling)


def peak_sidelobe_db(values: np.ndarray) -> float:
    """Largest value beyond the mainlobe, values starting at zero lag.

    The mainlobe ends at the first local minimum.

    """
    i = 1
    while i + 1 < values.size and values[i + 1] < values[i]:
        i += 1
    if i >= values.size:
        return -math.inf
    return 20 * math.log10(float(np.max(values[i:]) / values[0]))


def acf_curve(
    cfg: WaveformConfig,
    frame: BasebandFrame,
    lag_bins: np.ndarray | None = None,
    pri: int = 0,
    oversampling: int = 1,
) -> AcfCurve:
    """Normalized autocorrelation of one PRI of the frame.

    Lags are integer multiples of Tc/oversampling. Negative lags take the value of the
    positive ones.

    Args:
        cfg: Waveform configuration.
        frame: Frame holding the code and symbols.
        lag_bins: Lags in units of Tc/oversampling, all lags within +-J chips if None.
        pri: PRI to analyse.
        oversampling: Lag resolution in samples per chip.

    Returns:
        The curve, its PSL and its components.

    """
    lag_bins = _check_lags(cfg, lag_bins, oversampling)
    total = _ambiguity_row(frame, pri, oversampling)
    pulse_only = _ambiguity_row(frame, pri, oversampling, segment=Segment.PULSE)

    magnitude = np.abs(total) / np.abs(total[0])
    zero = np.abs(total[0])
    within_pulse = np.arange(total.size) <= cfg.chips_per_pulse * oversampling
    components = {
        "pulse_acf": np.where(within_pulse, pulse_only, 0) / zero,
        "phi": np.where(within_pulse, total - pulse_only, 0) / zero,
        "psi": np.where(within_pulse, 0, total) / zero,
    }

    index = np.abs(lag_bins)
    return AcfCurve(
        lags=lag_bins * cfg.chip_duration / oversampling,
        values=magnitude[index],
        psl_db=peak_sidelobe_db(magnitude),
        components={name: part[index] for name, part in components.items()},
    )


def af_surface(
    cfg: WaveformConfig,
    frame: BasebandFrame,
    lag_bins: np.ndarray | None = None,
    doppler_grid: np.ndarray = (0.0,),
    pri: int = 0,
    oversampling: int = 1,
) -> np.ndarray:
    """Normalized ambiguity function of one PRI.

    Returns:
        Matrix with one row per Doppler shift and one column per lag, normalized by the
            value at zero lag and zero Doppler.

    """
    lag_bins = _check_lags(cfg, lag_bins, oversampling)
    reference = _ambiguity_row(frame, pri, oversampling)
    rows = []
    for doppler_hz in np.atleast_1d(doppler_grid):
        row = reference
        if doppler_hz != 0:
            row = _ambiguity_row(frame, pri, oversampling, doppler_hz)
        rows.append((np.abs(row) / np.abs(reference[0]))[np.abs(lag_bins)])
    return np.array(rows)


def acf_ensemble(
    cfg: WaveformConfig,
    code: FastTimeCode,
    draws: int,
    seed: int,
    lag_bins: np.ndarray | None = None,
    oversampling: int = 1,
) -> AcfEnvelope:
    """Median, 95th percentile and spread of the autocorrelation over symbol draws."""
    lag_bins = _check_lags(cfg, lag_bins, oversampling)
    children = np.random.SeedSequence(seed).spawn(draws)
    curves = np.array(
        [
            acf_curve(
                cfg, draw_frame(cfg, code, child), lag_bins, oversampling=oversampling
            ).values
            for child in children
        ]
    )
    return AcfEnvelope(
        lags=lag_bins * cfg.chip_duration / oversampling,
        median=np.median(curves, axis=0),
        p95=np.percentile(curves, 95, axis=0),
        std=np.std(curves, axis=0, ddof=1) if draws > 1 else np.zeros(lag_bins.size),
        draws=draws,
    )
