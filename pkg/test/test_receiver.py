import dataclasses

import numpy as np
import pytest
from scipy import stats

from fdisac.build import draw_frame
from fdisac.channel import ChannelState, apply_channel
from fdisac.errors import DelayOutOfRange, DimensionMismatch, InvalidProbability
from fdisac.receiver import (
    RangeDopplerMap,
    cancel_si,
    detect,
    doppler_dft,
    estimate_noise_power,
    matched_filter_bank,
)


def _noise_map(values: np.ndarray) -> RangeDopplerMap:
    values = np.atleast_2d(values)
    bins = np.arange(1, values.shape[0] + 1)
    return RangeDopplerMap(bins, values, np.ones(values.shape), dft_output=values)


def _cell_row(frame, state: ChannelState, seed: int) -> np.ndarray:
    received = apply_channel(frame, state, seed)
    rd_map = doppler_dft(matched_filter_bank(received, frame, bins=[state.delay_bin]))
    return rd_map.dft_output[0]


class TestCancelSi:
    """Tests for self-interference cancellation."""

    def test_perfect(self, small_cfg, small_code):
        """Test that eps = 0 leaves exactly the echo."""
        frame = draw_frame(small_cfg, small_code, 4)
        state = ChannelState(alpha=0.2, delay_bin=20, si_gain=0.1 + 0.2j, noise_psd=0.0)
        received = apply_channel(frame, state, 0)
        cleaned = cancel_si(received, frame, state.si_gain, 0.0, 0)
        assert np.allclose(cleaned, 0.2 * frame.echo_vectors(20))

    def test_residual_power(self, small_cfg, small_code):
        """Test residual power eps*|beta|^2*Tc*p^d per sample."""
        frame = draw_frame(small_cfg, small_code, 4)
        received = 0.5 * frame.pri_samples
        cleaned = cancel_si(received, frame, 0.5, 0.1, np.random.default_rng(8))
        expected = 0.1 * 0.25 * small_cfg.chip_duration * frame.power_profile()
        ratio = np.abs(cleaned) ** 2 / expected[np.newaxis, :]
        assert np.mean(ratio) == pytest.approx(1.0, abs=0.15)

    def test_invalid_factor(self, small_cfg, small_code):
        """Test that eps outside [0, 1] is rejected."""
        frame = draw_frame(small_cfg, small_code, 4)
        with pytest.raises(ValueError):
            cancel_si(frame.pri_samples, frame, 0.1, 1.5, 0)

    def test_shape(self, small_cfg, small_code):
        """Test that the received block has to match the frame."""
        frame = draw_frame(small_cfg, small_code, 4)
        with pytest.raises(DimensionMismatch):
            cancel_si(np.zeros((16, 10)), frame, 0.1, 0.0, 0)


class TestMatchedFilterBank:
    """Tests for the per-bin matched filters."""

    def test_against_reference(self, small_cfg, small_code, rng):
        """Test the compiled kernel against direct correlation."""
        frame = draw_frame(small_cfg, small_code, 6)
        received = rng.standard_normal((16, 64)) + 1j * rng.standard_normal((16, 64))
        rd_map = matched_filter_bank(received, frame, bins=[1, 8, 9, 56])
        for row, n in enumerate([1, 8, 9, 56]):
            reference = frame.echo_vectors(n)
            norm = np.linalg.norm(reference, axis=1)
            expected = np.sum(np.conj(reference) * received, axis=1) / norm
            assert np.allclose(rd_map.mf_output[row], expected)
            assert np.allclose(rd_map.filter_energy[row], norm**2)

    def test_matched_gain(self, small_cfg, small_code):
        """Test that a noise-free echo yields the norm of its reference."""
        frame = draw_frame(small_cfg, small_code, 6)
        state = ChannelState(alpha=1.0, delay_bin=30, si_gain=0.0, noise_psd=0.0)
        rd_map = matched_filter_bank(apply_channel(frame, state, 0), frame)
        row = rd_map.row_of(30)
        assert np.allclose(rd_map.mf_output[row], np.sqrt(rd_map.filter_energy[row]))
        assert rd_map.delay_bins.size == 56

    def test_bins_out_of_range(self, small_cfg, small_code):
        """Test that bins outside [1, J] are rejected."""
        frame = draw_frame(small_cfg, small_code, 6)
        with pytest.raises(DelayOutOfRange):
            matched_filter_bank(frame.pri_samples, frame, bins=[0, 3])

    def test_unprocessed_bin(self, small_cfg, small_code):
        """Test that rows exist only for processed bins."""
        frame = draw_frame(small_cfg, small_code, 6)
        rd_map = matched_filter_bank(frame.pri_samples, frame, bins=[3])
        with pytest.raises(DelayOutOfRange):
            rd_map.row_of(4)


class TestDopplerDft:
    """Tests for slow-time processing."""

    def test_parseval(self, small_cfg, small_code, rng):
        """Test that the unitary DFT preserves energy."""
        frame = draw_frame(small_cfg, small_code, 6)
        received = rng.standard_normal((16, 64)) + 1j * rng.standard_normal((16, 64))
        rd_map = doppler_dft(matched_filter_bank(received, frame))
        assert np.allclose(
            np.sum(np.abs(rd_map.dft_output) ** 2, axis=1),
            np.sum(np.abs(rd_map.mf_output) ** 2, axis=1),
        )

    @pytest.mark.parametrize("delay_bin, q", [(5, 0), (12, 3), (40, -5), (56, 7)])
    def test_peak(self, small_cfg, small_code, delay_bin, q):
        """Test that a noise-free target peaks in its range-Doppler cell."""
        frame = draw_frame(small_cfg, small_code, 6)
        state = ChannelState.bin_aligned(
            small_cfg,
            alpha=1.0,
            delay_bin=delay_bin,
            doppler_bin=q,
            si_gain=0.0,
            noise_psd=0.0,
        )
        rd_map = doppler_dft(matched_filter_bank(apply_channel(frame, state, 0), frame))
        assert rd_map.peak() == (delay_bin, q)

    def test_single_pri(self):
        """Test that one PRI cannot be Doppler processed."""
        rd_map = RangeDopplerMap(np.array([1]), np.ones((1, 1)), np.ones((1, 1)))
        with pytest.raises(DimensionMismatch):
            doppler_dft(rd_map)

    def test_signed_bins(self):
        """Test the mapping of DFT columns to signed Doppler bins."""
        rd_map = _noise_map(np.ones((1, 16)))
        assert list(rd_map.signed_doppler_bins()[:3]) == [0, 1, 2]
        assert rd_map.signed_doppler_bins()[-1] == -1
        assert rd_map.column_of(-3) == 13


class TestDetect:
    """Tests for the linear detector."""

    def test_threshold(self):
        """Test T = sigma*sqrt(-ln P_FA)."""
        result = detect(_noise_map(np.array([[3.0, 4.0]])), 2.0, 1e-3)
        assert result.threshold[0, 0] == pytest.approx(np.sqrt(2 * np.log(1e3)))
        assert list(result.decisions[0]) == [False, True]
        assert result.detections(_noise_map(np.array([[3.0, 4.0]]))) == [(1, 1)]

    @pytest.mark.parametrize("p_fa", [0.0, 1.0, -0.1, 1.5])
    def test_invalid_probability(self, p_fa):
        """Test that P_FA outside (0, 1) is rejected."""
        with pytest.raises(InvalidProbability):
            detect(_noise_map(np.ones((1, 2))), 1.0, p_fa)

    def test_needs_dft(self):
        """Test that detection runs on Doppler processed maps."""
        rd_map = RangeDopplerMap(np.array([1]), np.ones((1, 2)), np.ones((1, 2)))
        with pytest.raises(ValueError):
            detect(rd_map, 1.0, 1e-3)

    def test_per_row_noise(self):
        """Test one noise power per range bin."""
        result = detect(_noise_map(np.full((2, 3), 2.0)), np.array([1.0, 4.0]), 0.1)
        assert result.sigma_phi_sq.shape == (2, 3)
        assert np.all(result.decisions[0])
        assert not np.any(result.decisions[1])

    def test_false_alarm_rate(self, rng):
        """Test the empirical false alarm rate on complex Gaussian noise."""
        sigma_sq = 3.0
        noise = np.sqrt(sigma_sq / 2) * (
            rng.standard_normal((1, 40000)) + 1j * rng.standard_normal((1, 40000))
        )
        result = detect(_noise_map(noise), sigma_sq, 0.1)
        assert np.mean(result.decisions) == pytest.approx(0.1, abs=0.01)

    def test_noise_estimate(self, rng):
        """Test the per-row noise power estimate."""
        noise = rng.standard_normal((2, 20000)) + 1j * rng.standard_normal((2, 20000))
        noise[1] *= 2
        estimate = estimate_noise_power(_noise_map(noise))
        assert estimate == pytest.approx([2.0, 8.0], rel=0.05)


class TestDetectorStatistics:
    """Tests for the distribution of the detector input."""

    def test_rayleigh_without_target(self, small_cfg, small_code):
        """Test that |Y| follows a Rayleigh law under noise alone."""
        frame = draw_frame(small_cfg, small_code, 3)
        state = ChannelState(alpha=0.0, delay_bin=20, si_gain=0.0, noise_psd=2.0)
        samples = np.concatenate(
            [np.abs(_cell_row(frame, state, seed)) for seed in range(100)]
        )
        result = stats.kstest(samples, stats.rayleigh(scale=1.0).cdf)
        assert result.pvalue > 1e-3

    def test_rician_with_target(self, small_cfg, small_code):
        """Test that |Y| in the target cell follows a Rician law."""
        frame = draw_frame(small_cfg, small_code, 3)
        clean = ChannelState(alpha=1.0, delay_bin=20, si_gain=0.0, noise_psd=0.0)
        nu = abs(_cell_row(frame, clean, 0)[0])
        scale = nu / 3
        state = dataclasses.replace(clean, noise_psd=2 * scale**2)
        samples = [abs(_cell_row(frame, state, seed)[0]) for seed in range(400)]
        result = stats.kstest(samples, stats.rice(3.0, scale=scale).cdf)
        assert result.pvalue > 1e-3

    def test_pulsed_snr(self, small_cfg, small_code):
        """Test |alpha|^2*Pr*N/(N0*B) after the matched filter of a pulsed radar."""
        cfg = dataclasses.replace(small_cfg, pris_per_cpi=8192).with_powers(1.0, 0.0)
        frame = draw_frame(cfg, small_code, 6)
        state = ChannelState(alpha=1.0, delay_bin=20, si_gain=0.0, noise_psd=1e-8)
        clean = dataclasses.replace(state, noise_psd=0.0)
        signal = matched_filter_bank(apply_channel(frame, clean, 0), frame, bins=[20])
        noisy = matched_filter_bank(apply_channel(frame, state, 5), frame, bins=[20])
        noise = noisy.mf_output[0] - signal.mf_output[0]
        snr = np.mean(np.abs(signal.mf_output[0]) ** 2) / np.mean(np.abs(noise) ** 2)
        expected = 1.0 * 8 / (1e-8 * cfg.bandwidth)
        assert 10 * np.log10(snr / expected) == pytest.approx(0.0, abs=0.2)
