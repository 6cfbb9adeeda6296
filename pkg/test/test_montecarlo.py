import dataclasses
import math

import numpy as np
import pytest

from fdisac.analysis import alpha_for_sinr, prob_detection, sigma_phi_sq_profile, sinr1
from fdisac.build import draw_frame
from fdisac.channel import ChannelState, apply_channel
from fdisac.montecarlo import (
    WORKERS_ENV,
    DetectionTally,
    TrialSetup,
    binomial_ci95,
    run_trial,
    run_trials,
    trial_seed,
    worker_count,
)
from fdisac.receiver import cancel_si, doppler_dft, matched_filter_bank

DELAY_BIN = 20


def _setup(cfg, code, sinr_k, p_fa) -> TrialSetup:
    channel = ChannelState(
        alpha=1.0, delay_bin=DELAY_BIN, si_gain=0.1, sic_factor=1e-4, noise_psd=1e-12
    )
    channel = dataclasses.replace(channel, alpha=alpha_for_sinr(cfg, channel, sinr_k))
    sigma_phi_sq = float(sigma_phi_sq_profile(cfg, channel, [DELAY_BIN])[0])
    return TrialSetup(cfg, code, channel, p_fa, sigma_phi_sq)


class TestSeeds:
    """Tests for per-trial seeding."""

    def test_deterministic(self):
        """Test that a trial seed depends on its inputs only."""
        first = trial_seed(5, (1, 2), 3).generate_state(4)
        assert np.array_equal(first, trial_seed(5, (1, 2), 3).generate_state(4))

    @pytest.mark.parametrize("other", [(6, (1, 2), 3), (5, (1, 3), 3), (5, (1, 2), 4)])
    def test_distinct(self, other):
        """Test that seed, point key and trial index all matter."""
        first = trial_seed(5, (1, 2), 3).generate_state(4)
        assert not np.array_equal(first, trial_seed(*other).generate_state(4))


class TestTally:
    """Tests for detection counts."""

    def test_merge(self):
        """Test that counts add up."""
        tally = DetectionTally(10, 4, 1).merge(DetectionTally(5, 1, 0))
        assert tally == DetectionTally(15, 5, 1)
        assert tally.p_d == pytest.approx(1 / 3)
        assert tally.p_fa == pytest.approx(1 / 15)

    def test_confidence_interval(self):
        """Test the normal approximation of the binomial interval."""
        assert binomial_ci95(50, 100) == pytest.approx(1.96 * 0.05)
        assert DetectionTally(100, 50, 0).p_d_ci95 == pytest.approx(0.098)
        assert DetectionTally(100, 50, 0).p_fa_ci95 == 0.0

    def test_empty(self):
        """Test that an empty tally has no estimate."""
        assert math.isnan(DetectionTally().p_d)
        assert math.isnan(binomial_ci95(0, 0))


class TestWorkerCount:
    """Tests for the worker count setting."""

    @pytest.mark.parametrize(
        "value, expected", [(None, -1), ("", -1), ("3", 3), ("0", 1), ("many", -1)]
    )
    def test_environment(self, monkeypatch, value, expected):
        """Test parsing of the environment variable."""
        if value is None:
            monkeypatch.delenv(WORKERS_ENV, raising=False)
        else:
            monkeypatch.setenv(WORKERS_ENV, value)
        assert worker_count() == expected


class TestTrials:
    """Tests for the end-to-end trials."""

    def test_single_trial(self, small_cfg, small_code):
        """Test that a strong target is detected and noise alone is not."""
        setup = _setup(small_cfg, small_code, 1e4, 1e-6)
        assert run_trial(setup, trial_seed(1, (0,), 0)) == (True, False)

    def test_batching(self, small_cfg, small_code):
        """Test that batch size and worker count leave the counts unchanged."""
        setup = _setup(small_cfg, small_code, 3.0, 0.05)
        reference = run_trials(setup, 120, 9, workers=1, batch_size=120)
        assert run_trials(setup, 120, 9, workers=1, batch_size=7) == reference
        assert run_trials(setup, 120, 9, workers=2, batch_size=25) == reference
        assert reference.trials == 120

    def test_point_keys(self, small_cfg, small_code):
        """Test that sweep points draw different trials."""
        setup = _setup(small_cfg, small_code, 3.0, 0.3)
        first = run_trials(setup, 200, 9, key=(0,), workers=1)
        second = run_trials(setup, 200, 9, key=(1,), workers=1)
        assert first != second

    @pytest.mark.parametrize("sinr_k, p_fa", [(3.0, 1e-2), (5.0, 1e-2), (8.0, 1e-3)])
    def test_against_analytic(self, small_cfg, small_code, sinr_k, p_fa):
        """Test simulated P_D and P_FA against the Marcum Q prediction."""
        setup = _setup(small_cfg, small_code, sinr_k, p_fa)
        tally = run_trials(setup, 2000, 20240601, workers=1)
        assert sinr1(small_cfg, setup.channel).sinr_k == pytest.approx(sinr_k)
        assert tally.p_d == pytest.approx(prob_detection(sinr_k, p_fa), abs=0.05)
        assert tally.p_fa == pytest.approx(p_fa, abs=0.01)

    def test_convergence(self, small_cfg, small_code):
        """Test that the simulation error shrinks as 1/sqrt(trials)."""
        setup = _setup(small_cfg, small_code, 5.0, 1e-2)
        analytic = prob_detection(5.0, 1e-2)
        spread = math.sqrt(analytic * (1 - analytic))
        for trials in [250, 1000, 4000]:
            tally = run_trials(setup, trials, 77, key=(trials,), workers=1)
            assert abs(tally.p_d - analytic) < 4 * spread / math.sqrt(trials) + 0.01
            assert tally.p_d_ci95 * math.sqrt(trials) == pytest.approx(
                1.96 * spread, rel=0.15
            )


class TestCoherentGain:
    """Tests for the slow-time integration gain."""

    def test_gain_of_k(self, small_cfg, small_code):
        """Test that the DFT raises the target power K-fold over one PRI."""
        frame = draw_frame(small_cfg, small_code, 13)
        state = ChannelState(alpha=0.7, delay_bin=DELAY_BIN, si_gain=0.0, noise_psd=0.0)
        cleaned = cancel_si(apply_channel(frame, state, 0), frame, 0.0, 0.0, 0)
        rd_map = matched_filter_bank(cleaned, frame, bins=[DELAY_BIN])
        before = np.mean(np.abs(rd_map.mf_output[0]) ** 2)
        after = np.abs(doppler_dft(rd_map).dft_output[0, 0]) ** 2
        assert after / before == pytest.approx(small_cfg.pris_per_cpi, rel=0.05)
