"""This module contains the radar receive chain from SI cancellation to detection."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np
from numba import njit, prange
from scipy import fft

from fdisac.build import BasebandFrame
from fdisac.errors import DelayOutOfRange, DimensionMismatch, InvalidProbability

logger = logging.getLogger(__name__)


@njit(parallel=True)
def _correlate_bins(extended, received, bins):
    pris, length = received.shape
    output = np.zeros((bins.size, pris), dtype=np.complex128)
    energy = np.zeros((bins.size, pris))
    for b in prange(bins.size):
        offset = length - bins[b]
        for k in range(pris):
            acc = 0j
            norm = 0.0
            for l in range(length):
                v = extended[k, offset + l]
                acc += np.conj(v) * received[k, l]
                norm += v.real * v.real + v.imag * v.imag
            output[b, k] = acc
            energy[b, k] = norm
    return output, energy


def check_probability(p_fa: float) -> float:
    if not 0 < p_fa < 1:
        raise InvalidProbability(f"False alarm probability {p_fa} outside (0, 1).")
    return float(p_fa)


@dataclass(frozen=True)
class RangeDopplerMap:
    """Matched filter outputs over range bins and PRIs, optionally Doppler processed.

    Attributes:
        delay_bins: Delay bin of every row.
        mf_output: Matched filter output per row and PRI.
        filter_energy: Squared norm of the echo reference per row and PRI.
        dft_output: Unitary slow-time DFT of mf_output, columns in bin order 0..K-1.

    """

    delay_bins: np.ndarray
    mf_output: np.ndarray
    filter_energy: np.ndarray
    dft_output: np.ndarray | None = None

    @property
    def pris(self) -> int:
        return self.mf_output.shape[1]

    @property
    def magnitude(self) -> np.ndarray:
        if self.dft_output is None:
            return np.abs(self.mf_output)
        return np.abs(self.dft_output)

    def row_of(self, delay_bin: int) -> int:
        rows = np.flatnonzero(self.delay_bins == delay_bin)
        if rows.size == 0:
            raise DelayOutOfRange(f"Delay bin {delay_bin} was not processed.")
        return int(rows[0])

    def column_of(self, doppler_bin: int) -> int:
        return doppler_bin % self.pris

    def signed_doppler_bins(self) -> np.ndarray:
        return np.rint(fft.fftfreq(self.pris, 1.0 / self.pris)).astype(int)

    def peak(self) -> tuple[int, int]:
        """Delay and signed Doppler bin of the strongest cell."""
        row, column = np.unravel_index(np.argmax(self.magnitude), self.magnitude.shape)
        return int(self.delay_bins[row]), int(self.signed_doppler_bins()[column])


@dataclass(frozen=True)
class DetectionResult:
    """Per-cell outcome of the linear detector.

    Attributes:
        statistic: Magnitude z = |Y| of every cell.
        threshold: Threshold sigma_phi*sqrt(-ln P_FA) of every cell.
        decisions: Whether z exceeds the threshold.
        sigma_phi_sq: Noise plus residual self-interference power of every cell.

    """

    statistic: np.ndarray
    threshold: np.ndarray
    decisions: np.ndarray
    sigma_phi_sq: np.ndarray

    def detections(self, rd_map: RangeDopplerMap) -> list[tuple[int, int]]:
        """Delay and signed Doppler bins of all cells above threshold."""
        rows, columns = np.nonzero(self.decisions)
        doppler = rd_map.signed_doppler_bins()
        return [
            (int(rd_map.delay_bins[r]), int(doppler[c])) for r, c in zip(rows, columns)
        ]


def cancel_si(
    received: np.ndarray,
    frame: BasebandFrame,
    si_gain: complex,
    sic_factor: float,
    seed: int | np.random.Generator | None,
) -> np.ndarray:
    """Removes the known self-interference and adds the Gaussian SIC residual.

    The residual sqrt(eps)*beta*sqrt(Tc*p^d)*z_k follows the transmit power profile of
    the PRI, z_k being standard complex normal.

    Args:
        received: K x (N+J) received samples.
        frame: Transmitted frame.
        si_gain: Self-interference gain beta.
        sic_factor: Residual power ratio eps in [0, 1].
        seed: Integer seed or generator of the residual.

    Returns:
        Samples after cancellation.

    """
    if not 0 <= sic_factor <= 1:
        raise ValueError(f"SIC factor {sic_factor} outside [0, 1].")
    if received.shape != frame.pri_samples.shape:
        raise DimensionMismatch("Received samples do not match the frame.")

    cleaned = received - si_gain * frame.pri_samples
    if sic_factor > 0 and si_gain != 0:
        rng = np.random.default_rng(seed)
        shape = received.shape
        z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        scale = np.sqrt(frame.cfg.chip_duration * frame.power_profile())
        cleaned = cleaned + np.sqrt(sic_factor) * si_gain * scale[np.newaxis, :] * z
    return cleaned


def matched_filter_bank(
    received: np.ndarray, frame: BasebandFrame, bins: np.ndarray | None = None
) -> RangeDopplerMap:
    """Correlates every PRI with the normalized echo reference of every range bin.

    The reference of bin n in PRI k is x^r_{k,n} / ||x^r_{k,n}||, rebuilt from the
    known transmitted symbols of PRIs k-1 and k.

    Args:
        received: K x (N+J) samples after SI cancellation.
        frame: Transmitted frame.
        bins: Delay bins to process, all bins 1..J if None.

    Returns:
        Map with mf_output filled.

    """
    cfg = frame.cfg
    if received.shape != frame.pri_samples.shape:
        raise DimensionMismatch("Received samples do not match the frame.")
    if bins is None:
        bins = np.arange(1, cfg.comm_chips + 1)
    bins = np.atleast_1d(np.asarray(bins, dtype=np.int64))
    if bins.size and (bins.min() < 1 or bins.max() > cfg.comm_chips):
        raise DelayOutOfRange(f"Delay bins have to lie in [1, {cfg.comm_chips}].")

    extended = np.ascontiguousarray(frame.extended())
    output, energy = _correlate_bins(
        extended, np.ascontiguousarray(received, dtype=np.complex128), bins
    )
    norm = np.sqrt(energy)
    mf_output = np.divide(output, norm, out=np.zeros_like(output), where=norm > 0)
    return RangeDopplerMap(bins, mf_output, energy)


def doppler_dft(rd_map: RangeDopplerMap) -> RangeDopplerMap:
    """Applies the unitary K-point DFT over slow time to every range bin."""
    if rd_map.pris < 2:
        raise DimensionMismatch("Doppler processing needs at least two PRIs.")
    dft_output = fft.fft(rd_map.mf_output, axis=1, norm="ortho")
    return dataclasses.replace(rd_map, dft_output=dft_output)


def _per_cell(values: np.ndarray | float, shape: tuple[int, int]) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    return np.broadcast_to(values, shape)


def detect(
    rd_map: RangeDopplerMap, sigma_phi_sq: np.ndarray | float, p_fa: float
) -> DetectionResult:
    """Compares every cell magnitude with its P_FA-calibrated threshold.

    Under H0 the magnitude is Rayleigh with P_FA = exp(-T^2/sigma_phi^2), hence
    T = sigma_phi*sqrt(-ln P_FA).

    Args:
        rd_map: Doppler processed map.
        sigma_phi_sq: Noise plus residual SI power, scalar, one value per row or one
            per cell.
        p_fa: False alarm probability.

    Returns:
        Statistics, thresholds and decisions of every cell.

    """
    check_probability(p_fa)
    if rd_map.dft_output is None:
        raise ValueError("Detection needs a Doppler processed map.")
    statistic = np.abs(rd_map.dft_output)
    sigma_phi_sq = _per_cell(sigma_phi_sq, statistic.shape)
    if np.any(sigma_phi_sq <= 0):
        raise ValueError("Noise power has to be positive in every cell.")
    threshold = np.sqrt(sigma_phi_sq) * np.sqrt(-np.log(p_fa))
    return DetectionResult(statistic, threshold, statistic > threshold, sigma_phi_sq)


def estimate_noise_power(
    rd_map: RangeDopplerMap, exclude: np.ndarray | None = None
) -> np.ndarray:
    """Estimates sigma_phi^2 of every range bin from its Doppler cells.

    Args:
        rd_map: Doppler processed map.
        exclude: Cells to leave out, e.g. around an expected target.

    Returns:
        One power estimate per row.

    """
    if rd_map.dft_output is None:
        raise ValueError("Noise estimation needs a Doppler processed map.")
    power = np.abs(rd_map.dft_output) ** 2
    keep = np.ones_like(power, dtype=bool) if exclude is None else ~np.asarray(exclude)
    counts = keep.sum(axis=1)
    if np.any(counts == 0):
        raise ValueError("Every range bin needs at least one secondary cell.")
    return np.where(keep, power, 0.0).sum(axis=1) / counts
