"""This module evaluates scenarios into result rows."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from fdisac import analysis, comm
from fdisac.build import draw_frame
from fdisac.channel import ChannelState
from fdisac.montecarlo import DetectionTally, TrialSetup, run_trials
from fdisac.scenario import RunMode, Scenario, Series, SweepVariable, apply_sweep
from fdisac.waveform import WaveformConfig

logger = logging.getLogger(__name__)

DETECTION_STREAM = 0
SER_STREAM = 1


@dataclass(frozen=True)
class ResultRow:
    """One metric at one sweep point.

    Attributes:
        scenario: Scenario name, followed by the series label in brackets.
        sweep_value: Value of the swept variable, the target P_D for summary metrics.
        metric: Metric name.
        analytic: Closed-form value.
        mc: Monte-Carlo estimate.
        mc_ci95: Half-width of the 95% interval of the estimate.
        trials: Monte-Carlo trial count.
        seed: Run seed of the Monte-Carlo estimate.

    """

    scenario: str
    sweep_value: float
    metric: str
    analytic: float | None = None
    mc: float | None = None
    mc_ci95: float | None = None
    trials: int | None = None
    seed: int | None = None


class ScenarioRunner:
    """Evaluates every series of a scenario at every sweep point."""

    def __init__(
        self,
        scenario: Scenario,
        mode: str | None = None,
        trials: int | None = None,
        seed: int | None = None,
        workers: int | None = None,
        progress: bool = False,
    ):
        self.scenario = scenario
        self.mode = scenario.mode if mode is None else mode
        self.trials = scenario.trials if trials is None else trials
        self.seed = scenario.seed if seed is None else seed
        self.workers = workers
        self.progress = progress
        if self.mode not in RunMode.ALL:
            raise ValueError(f"Unknown mode '{self.mode}'.")
        if self.trials < 1:
            raise ValueError("Trial count has to be positive.")

    @property
    def analytic(self) -> bool:
        return self.mode in (RunMode.ANALYTIC, RunMode.BOTH)

    @property
    def monte_carlo(self) -> bool:
        return self.mode in (RunMode.MONTE_CARLO, RunMode.BOTH)

    def run(self) -> list[ResultRow]:
        logger.info(
            "running scenario %s: %d series, %d points, mode %s",
            self.scenario.name,
            len(self.scenario.series),
            self.scenario.sweep.values.size,
            self.mode,
        )
        rows = []
        for index, series in enumerate(self.scenario.series):
            name = self.scenario.name
            if series.label:
                name = f"{name}[{series.label}]"
            if self.scenario.sweep.variable == SweepVariable.LAG:
                rows.extend(self._acf_rows(name, index, series))
                continue
            for point, value in enumerate(self.scenario.sweep.values):
                key = (index, point)
                rows.extend(self._point_rows(name, key, series, float(value)))
            rows.extend(self._summary_rows(name, series))
        return rows

    def _row(self, name: str, value: float, metric: str, analytic=None, estimate=None):
        if estimate is None:
            return ResultRow(name, value, metric, analytic=analytic)
        mc, ci95 = estimate
        return ResultRow(
            name, value, metric, analytic, mc, ci95, self.trials, self.seed
        )

    def _tally(self, key, cfg, series, state: ChannelState) -> DetectionTally:
        profile = analysis.sigma_phi_sq_profile(cfg, state, [state.delay_bin])
        setup = TrialSetup(
            cfg=cfg,
            code=series.code,
            channel=state,
            p_fa=self.scenario.p_fa,
            sigma_phi_sq=float(profile[0]),
        )
        return run_trials(
            setup,
            self.trials,
            self.seed,
            key=(*key, DETECTION_STREAM),
            workers=self.workers,
            progress=self.progress,
        )

    def _point_rows(
        self, name: str, key: tuple[int, int], series: Series, value: float
    ) -> list[ResultRow]:
        variable = self.scenario.sweep.variable
        warn = key[1] == 0 or variable == SweepVariable.TARGET_RANGE
        cfg, state = apply_sweep(series, variable, value, warn=warn)
        breakdown = analysis.sinr1(cfg, state)
        p_fa = self.scenario.p_fa
        link = comm.CommLink.from_budget(series.link, state.noise_psd, cfg.psk_order)

        tally = None
        if self.monte_carlo and {"p_d", "p_fa"} & set(self.scenario.metrics):
            tally = self._tally(key, cfg, series, state)

        rows = []
        for metric in self.scenario.metrics:
            analytic = estimate = None
            if metric == "sinr1_db":
                analytic = breakdown.sinr1_db
            elif metric == "sinr_k_db":
                analytic = breakdown.sinr_k_db
            elif metric == "p_d":
                analytic = float(analysis.prob_detection(breakdown.sinr_k, p_fa))
                if tally is not None:
                    estimate = (tally.p_d, tally.p_d_ci95)
            elif metric == "p_fa":
                analytic = p_fa
                if tally is not None:
                    estimate = (tally.p_fa, tally.p_fa_ci95)
            elif metric == "rate_embedded":
                analytic = analysis.rate_embedded(
                    cfg.psk_order, cfg.duty_cycle, cfg.chips_per_pulse
                )
            elif metric == "rate_total":
                analytic = analysis.rate_total(
                    cfg.psk_order, cfg.duty_cycle, cfg.chips_per_pulse
                )
            elif metric in ("rate_dedicated", "spectrum_efficiency"):
                analytic = self._dedicated_rate(cfg, link)
                if metric == "spectrum_efficiency":
                    analytic += analysis.rate_embedded(
                        cfg.psk_order, cfg.duty_cycle, cfg.chips_per_pulse
                    )
            elif metric == "ser_embedded":
                analytic = comm.ser_embedded_analytic(
                    link.h_gain,
                    cfg.radar_power,
                    cfg.chips_per_pulse,
                    link.noise_psd,
                    cfg.bandwidth,
                    link.psk_order,
                )
                if self.monte_carlo:
                    seed = np.random.SeedSequence(
                        self.seed, spawn_key=(*key, SER_STREAM)
                    )
                    estimate = comm.simulate_embedded_ser(
                        link, cfg, series.code, self.trials, seed
                    )
            else:
                continue
            if not self.analytic:
                if estimate is None:
                    continue
                analytic = None
            rows.append(self._row(name, value, metric, analytic, estimate))
        return rows

    @staticmethod
    def _dedicated_rate(cfg: WaveformConfig, link: comm.CommLink) -> float:
        return comm.spectrum_efficiency_dedicated(
            link.h_gain, cfg.comm_power, link.noise_psd, cfg.bandwidth, cfg.duty_cycle
        )

    def _summary_rows(self, name: str, series: Series) -> list[ResultRow]:
        if not self.analytic:
            return []
        cfg = series.waveform
        state = series.channel.state(cfg, series.link, warn=False)
        target = self.scenario.target_pd
        rows = []
        for metric in self.scenario.metrics:
            if metric == "required_sic_db":
                value = analysis.required_sic_db(cfg, state, self.scenario.p_fa, target)
            elif metric == "max_range_m":
                value = analysis.max_detection_range(
                    cfg, series.link, state, self.scenario.p_fa, target
                )
            else:
                continue
            rows.append(ResultRow(name, target, metric, analytic=value))
        return rows

    def _acf_rows(self, name: str, index: int, series: Series) -> list[ResultRow]:
        cfg = series.waveform
        oversampling = self.scenario.sweep.oversampling
        lags = self.scenario.sweep.values
        lag_bins = np.rint(lags * oversampling / cfg.chip_duration).astype(int)
        seed = np.random.SeedSequence(self.seed, spawn_key=(index,))
        frame = draw_frame(cfg, series.code, seed)
        curve = analysis.acf_curve(cfg, frame, lag_bins, oversampling=oversampling)

        rows = []
        if "acf_db" in self.scenario.metrics:
            with np.errstate(divide="ignore"):
                values_db = 20 * np.log10(curve.values)
            rows.extend(
                ResultRow(name, float(lag), "acf_db", analytic=float(db))
                for lag, db in zip(lags, values_db)
            )
        if "psl_db" in self.scenario.metrics:
            rows.append(ResultRow(name, 0.0, "psl_db", analytic=curve.psl_db))
        return rows


def run_scenario(
    scenario: Scenario,
    mode: str | None = None,
    trials: int | None = None,
    seed: int | None = None,
    workers: int | None = None,
    progress: bool = False,
) -> list[ResultRow]:
    """Evaluates a scenario.

    Args:
        scenario: Validated scenario.
        mode: Overrides the scenario's mode.
        trials: Overrides the scenario's trial count.
        seed: Overrides the scenario's seed.
        workers: joblib worker count of the Monte-Carlo trials.
        progress: Show progress bars.

    Returns:
        One row per series, sweep point and metric, followed by the summary rows of
            every series. Equal arguments give equal rows.

    """
    return ScenarioRunner(scenario, mode, trials, seed, workers, progress).run()


def curve_points(
    rows: list[ResultRow], metric: str
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Sweep values and values of one metric per row name, MC without analytic."""
    curves = {}
    for row in rows:
        if row.metric != metric:
            continue
        value = row.analytic if row.analytic is not None else row.mc
        if value is None or (isinstance(value, float) and math.isnan(value)):
            continue
        xs, ys = curves.setdefault(row.scenario, ([], []))
        xs.append(row.sweep_value)
        ys.append(value)
    return {name: (np.array(xs), np.array(ys)) for name, (xs, ys) in curves.items()}
