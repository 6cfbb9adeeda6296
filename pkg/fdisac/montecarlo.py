"""Seeded end-to-end Monte-Carlo trials of the radar chain."""
from __future__ import annotations

import dataclasses
import functools
import logging
import math
import os
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from fdisac.build import draw_frame
from fdisac.channel import ChannelState, apply_channel
from fdisac.codes import FastTimeCode
from fdisac.receiver import cancel_si, detect, doppler_dft, matched_filter_bank
from fdisac.waveform import WaveformConfig

logger = logging.getLogger(__name__)

WORKERS_ENV = "FDISAC_WORKERS"
BATCH_SIZE = 200


def worker_count() -> int:
    """Worker count from FDISAC_WORKERS, -1 (all cores) when unset."""
    value = os.environ.get(WORKERS_ENV)
    if not value:
        return -1
    try:
        workers = int(value)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", WORKERS_ENV, value)
        return -1
    return workers if workers != 0 else 1


def trial_seed(seed: int, key: tuple[int, ...], trial: int) -> np.random.SeedSequence:
    """Seed of one trial, a function of the run seed, point key and trial only."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(*key, trial))


def binomial_ci95(successes: int, trials: int) -> float:
    if trials == 0:
        return math.nan
    p = successes / trials
    return 1.96 * math.sqrt(p * (1 - p) / trials)


@dataclass(frozen=True)
class DetectionTally:
    """Counts of trials, detections with the target and false alarms without it."""

    trials: int = 0
    detections: int = 0
    false_alarms: int = 0

    def merge(self, other: DetectionTally) -> DetectionTally:
        return DetectionTally(
            self.trials + other.trials,
            self.detections + other.detections,
            self.false_alarms + other.false_alarms,
        )

    @property
    def p_d(self) -> float:
        return self.detections / self.trials if self.trials else math.nan

    @property
    def p_fa(self) -> float:
        return self.false_alarms / self.trials if self.trials else math.nan

    @property
    def p_d_ci95(self) -> float:
        return binomial_ci95(self.detections, self.trials)

    @property
    def p_fa_ci95(self) -> float:
        return binomial_ci95(self.false_alarms, self.trials)


@dataclass(frozen=True)
class TrialSetup:
    """Everything one trial needs besides its seed.

    Attributes:
        cfg: Waveform configuration.
        code: Fast-time code.
        channel: Channel with the target present.
        p_fa: False alarm probability of the detector.
        sigma_phi_sq: Noise plus residual SI power of the target's range bin.

    """

    cfg: WaveformConfig
    code: FastTimeCode
    channel: ChannelState
    p_fa: float
    sigma_phi_sq: float


def _decide(
    frame, ch: ChannelState, setup: TrialSetup, rng: np.random.Generator
) -> bool:
    received = apply_channel(frame, ch, rng)
    cleaned = cancel_si(received, frame, ch.si_gain, ch.sic_factor, rng)
    rd_map = doppler_dft(matched_filter_bank(cleaned, frame, bins=[ch.delay_bin]))
    result = detect(rd_map, setup.sigma_phi_sq, setup.p_fa)
    return bool(result.decisions[0, rd_map.column_of(ch.doppler_bin)])


def run_trial(setup: TrialSetup, seed: np.random.SeedSequence) -> tuple[bool, bool]:
    """Runs the chain once with and once without the target on one random frame.

    Returns:
        Detection under the target hypothesis and false alarm under the null one.

    """
    frame_seed, present_seed, absent_seed = seed.spawn(3)
    frame = draw_frame(setup.cfg, setup.code, frame_seed)
    absent = dataclasses.replace(setup.channel, target_present=False)
    detected = _decide(frame, setup.channel, setup, np.random.default_rng(present_seed))
    false_alarm = _decide(frame, absent, setup, np.random.default_rng(absent_seed))
    return detected, false_alarm


def _run_batch(
    setup: TrialSetup, seed: int, key: tuple[int, ...], first: int, last: int
) -> DetectionTally:
    detections = false_alarms = 0
    for trial in range(first, last):
        detected, false_alarm = run_trial(setup, trial_seed(seed, key, trial))
        detections += detected
        false_alarms += false_alarm
    return DetectionTally(last - first, detections, false_alarms)


def run_trials(
    setup: TrialSetup,
    trials: int,
    seed: int,
    key: tuple[int, ...] = (0,),
    workers: int | None = None,
    batch_size: int = BATCH_SIZE,
    progress: bool = False,
) -> DetectionTally:
    """Runs independent trials in parallel batches and sums their counts.

    Args:
        setup: Trial setup.
        trials: Number of trials.
        seed: Run seed.
        key: Identifies the sweep point so that points draw independent trials.
        workers: joblib worker count, FDISAC_WORKERS or all cores if None.
        batch_size: Trials per dispatched batch.
        progress: Show a progress bar over batches.

    Returns:
        Summed counts, independent of the worker count and the batch size.

    """
    workers = worker_count() if workers is None else workers
    bounds = [
        (first, min(first + batch_size, trials))
        for first in range(0, trials, batch_size)
    ]
    logger.debug(
        "running %d trials in %d batches on %d workers", trials, len(bounds), workers
    )

    tallies = Parallel(n_jobs=workers)(
        delayed(_run_batch)(setup, seed, key, first, last)
        for first, last in tqdm(
            bounds, desc="trials", unit="batch", disable=not progress
        )
    )
    return functools.reduce(DetectionTally.merge, tallies, DetectionTally())
