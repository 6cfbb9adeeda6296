"""This module validates scenario documents and locates the builtin scenarios."""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fdisac.analysis import alpha_for_sinr
from fdisac.channel import (
    ChannelState,
    LinkBudget,
    db_to_power,
    delay_bin_from_range,
    radar_two_way_gain,
)
from fdisac.codes import CodeFactory, CodeKind, FastTimeCode
from fdisac.errors import ConfigInvalid, UnsupportedLength
from fdisac.waveform import WaveformConfig

logger = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

# parameter table of the reference system, every missing field falls back to it
DEFAULTS = {
    "waveform": {
        "bandwidth": 100e6,
        "pri": 10e-6,
        "pulse_duration": 1e-6,
        "pris_per_cpi": 100,
        "radar_power": 1.0,
        "comm_power": 1.0,
        "psk_order": 128,
        "code_kind": CodeKind.LFM_DERIVED,
        "comm_constellation": "gaussian",
        "comm_psk_order": 4,
    },
    "link": {
        "carrier_freq": 3.5e9,
        "tx_gain_db": 17.0,
        "rx_gain_db": 17.0,
        "comm_rx_gain_db": 0.0,
        "rcs": 1.0,
        "target_range": 1350.0,
        "comm_range": 400.0,
        "pathloss_exp": 2.7,
    },
    "channel": {
        "si_gain_db": -20.0,
        "sic_factor_db": -80.0,
        "noise_psd_db": -199.0,
        "doppler_bin": 3,
    },
    "detection": {"p_fa": 1e-8, "target_pd": 0.99},
}

TOP_LEVEL_KEYS = {
    "name",
    "description",
    "waveform",
    "custom_chips",
    "link",
    "channel",
    "detection",
    "sweep",
    "series",
    "metrics",
    "trials",
    "seed",
    "mode",
    "constraints",
}


class RunMode:
    """Enum of evaluation modes."""

    ANALYTIC = "analytic"
    MONTE_CARLO = "mc"
    BOTH = "both"

    ALL = (ANALYTIC, MONTE_CARLO, BOTH)


class SweepVariable:
    """Enum of the quantities a scenario can sweep."""

    EPSILON_DB = "epsilon_db"
    COMM_POWER = "comm_power"
    TARGET_RANGE = "target_range"
    LAG = "lag"
    SINR_K_DB = "sinr_k_db"

    ALL = (EPSILON_DB, COMM_POWER, TARGET_RANGE, LAG, SINR_K_DB)


POINT_METRICS = (
    "sinr1_db",
    "sinr_k_db",
    "p_d",
    "p_fa",
    "rate_embedded",
    "rate_total",
    "rate_dedicated",
    "spectrum_efficiency",
    "ser_embedded",
    "acf_db",
)
SUMMARY_METRICS = ("required_sic_db", "max_range_m", "psl_db")
LAG_METRICS = ("acf_db", "psl_db")


@dataclass(frozen=True)
class ChannelSettings:
    """Channel parameters of a scenario in the units of the document."""

    si_gain_db: float = -20.0
    sic_factor_db: float = -80.0
    noise_psd_db: float = -199.0
    doppler_bin: int = 3

    @property
    def noise_psd(self) -> float:
        return db_to_power(self.noise_psd_db)

    def state(
        self, cfg: WaveformConfig, link: LinkBudget, warn: bool = True
    ) -> ChannelState:
        """Channel state of a target placed by the link budget, Doppler on its bin."""
        return ChannelState.bin_aligned(
            cfg,
            alpha=math.sqrt(radar_two_way_gain(link)),
            delay_bin=delay_bin_from_range(link.target_range, cfg, warn=warn),
            doppler_bin=self.doppler_bin,
            si_gain=math.sqrt(db_to_power(self.si_gain_db)),
            sic_factor=db_to_power(self.sic_factor_db),
            noise_psd=self.noise_psd,
        )


@dataclass(frozen=True)
class Series:
    """One labelled curve of a scenario with fully resolved parameters."""

    label: str
    waveform: WaveformConfig
    code: FastTimeCode
    link: LinkBudget
    channel: ChannelSettings


@dataclass(frozen=True)
class Sweep:
    variable: str
    values: np.ndarray
    oversampling: int = 1


@dataclass(frozen=True)
class PowerConstraint:
    """Average power rho*Pr + (1-rho)*Pc = P_avg and peak powers below P_max."""

    avg_power: float
    max_power: float

    def problems(self, cfg: WaveformConfig, where: str) -> list[str]:
        problems = []
        if abs(cfg.average_power - self.avg_power) > 1e-9:
            problems.append(
                f"{where}: average power {cfg.average_power:.9g} W differs from "
                f"{self.avg_power:.9g} W"
            )
        if max(cfg.radar_power, cfg.comm_power) > self.max_power:
            problems.append(
                f"{where}: power above the {self.max_power:.9g} W peak limit"
            )
        return problems


@dataclass(frozen=True)
class Scenario:
    """A validated experiment: parameter sets, one swept variable and metrics."""

    name: str
    description: str
    series: list[Series]
    sweep: Sweep
    metrics: list[str]
    p_fa: float
    target_pd: float
    trials: int
    seed: int
    mode: str
    constraints: PowerConstraint | None = None
    source: Path | None = field(default=None, compare=False)


def _section(raw: dict, name: str, base: dict, problems: list[str]) -> dict:
    values = dict(base)
    given = raw.get(name, {})
    if not isinstance(given, dict):
        problems.append(f"{name}: has to be an object")
        return values
    for key, value in given.items():
        if key not in base:
            problems.append(f"{name}.{key}: unknown field")
        else:
            values[key] = value
    return values


def _number(
    values: dict, key: str, where: str, problems: list[str], integer: bool = False
):
    value = values[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{where}.{key}: has to be a number")
        return None
    if integer and int(value) != value:
        problems.append(f"{where}.{key}: has to be an integer")
        return None
    return int(value) if integer else float(value)


def _relocate(problems: list[str], section: str, where: str) -> list[str]:
    return [f"{where}{problem.removeprefix(section)}" for problem in problems]


def _build_waveform(
    values: dict, where: str, problems: list[str]
) -> WaveformConfig | None:
    numbers = {}
    for key in ("bandwidth", "pri", "pulse_duration", "radar_power", "comm_power"):
        numbers[key] = _number(values, key, where, problems)
    for key in ("pris_per_cpi", "psk_order", "comm_psk_order"):
        numbers[key] = _number(values, key, where, problems, integer=True)
    if any(value is None for value in numbers.values()):
        return None
    try:
        return WaveformConfig(
            code_kind=values["code_kind"],
            comm_constellation=values["comm_constellation"],
            **numbers,
        )
    except ConfigInvalid as error:
        problems.extend(_relocate(error.problems, "waveform", where))
        return None


def _build_code(
    cfg: WaveformConfig, chips: list | None, where: str, problems: list[str]
) -> FastTimeCode | None:
    if chips is not None:
        try:
            chips = np.array(
                [complex(*c) if isinstance(c, list) else complex(c) for c in chips]
            )
        except (TypeError, ValueError):
            problems.append(
                f"{where}.custom_chips: has to list numbers or [re, im] pairs"
            )
            return None
    try:
        code = CodeFactory.get_code(cfg.code_kind, cfg.chips_per_pulse, chips)
    except UnsupportedLength as error:
        problems.append(f"{where}.code_kind: {error}")
        return None
    if code is None:
        problems.append(f"{where}.custom_chips: custom codes need their chips")
    return code


def _build_link(values: dict, where: str, problems: list[str]) -> LinkBudget | None:
    numbers = {key: _number(values, key, where, problems) for key in values}
    if any(value is None for value in numbers.values()):
        return None
    try:
        return LinkBudget.from_db(**numbers)
    except ConfigInvalid as error:
        problems.extend(_relocate(error.problems, "link", where))
        return None


def _build_channel(
    values: dict, cfg: WaveformConfig | None, where: str, problems: list[str]
) -> ChannelSettings | None:
    numbers = {
        key: _number(values, key, where, problems, integer=(key == "doppler_bin"))
        for key in values
    }
    if any(value is None for value in numbers.values()):
        return None
    if numbers["sic_factor_db"] > 0:
        problems.append(
            f"{where}.sic_factor_db: residual cannot exceed the original SI"
        )
    if cfg is not None and abs(numbers["doppler_bin"]) > cfg.pris_per_cpi // 2:
        problems.append(f"{where}.doppler_bin: has to lie within +-K/2")
    return ChannelSettings(**numbers)


def _build_sweep(raw: dict, problems: list[str]) -> Sweep | None:
    sweep = raw.get("sweep")
    if not isinstance(sweep, dict):
        problems.append("sweep: required object with 'variable' and values")
        return None
    variable = sweep.get("variable")
    if variable not in SweepVariable.ALL:
        choices = ", ".join(SweepVariable.ALL)
        problems.append(f"sweep.variable: has to be one of {choices}")
        return None
    if "values" in sweep:
        values = sweep["values"]
        if not isinstance(values, list) or not values:
            problems.append("sweep.values: has to be a nonempty list")
            return None
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
            problems.append("sweep.values: have to be numbers")
            return None
        values = np.array(values, dtype=float)
    elif {"start", "stop", "num"} <= sweep.keys():
        start = _number(sweep, "start", "sweep", problems)
        stop = _number(sweep, "stop", "sweep", problems)
        num = _number(sweep, "num", "sweep", problems, integer=True)
        if start is None or stop is None or num is None:
            return None
        if num < 1:
            problems.append("sweep.num: has to be at least 1")
            return None
        values = np.linspace(start, stop, num)
    else:
        problems.append("sweep: give either 'values' or 'start', 'stop' and 'num'")
        return None
    if not np.all(np.isfinite(values)):
        problems.append("sweep.values: have to be finite")
    if variable == SweepVariable.COMM_POWER and np.any(values < 0):
        problems.append("sweep.values: powers have to be nonnegative")
    if variable == SweepVariable.TARGET_RANGE and np.any(values <= 0):
        problems.append("sweep.values: ranges have to be positive")
    if variable == SweepVariable.EPSILON_DB and np.any(values > 0):
        problems.append("sweep.values: SIC factors have to be at most 0 dB")
    oversampling = sweep.get("oversampling", 1)
    if not isinstance(oversampling, int) or oversampling < 1:
        problems.append("sweep.oversampling: has to be a positive integer")
        oversampling = 1
    return Sweep(variable, values, oversampling)


def _build_series(
    raw: dict, bases: dict[str, dict], problems: list[str]
) -> list[Series]:
    entries = raw.get("series", [{"label": ""}])
    if not isinstance(entries, list) or not entries:
        problems.append("series: has to be a nonempty list")
        return []

    series = []
    for index, entry in enumerate(entries):
        where = f"series[{index}]" if "series" in raw else "scenario"
        if not isinstance(entry, dict):
            problems.append(f"{where}: has to be an object")
            continue
        unknown = set(entry) - {"label", "waveform", "link", "channel", "custom_chips"}
        problems.extend(f"{where}.{key}: unknown field" for key in sorted(unknown))

        sections = {
            name: _section(entry, name, base, problems) for name, base in bases.items()
        }
        cfg = _build_waveform(sections["waveform"], f"{where}.waveform", problems)
        code = None
        if cfg is not None:
            chips = entry.get("custom_chips", raw.get("custom_chips"))
            code = _build_code(cfg, chips, f"{where}.waveform", problems)
        link = _build_link(sections["link"], f"{where}.link", problems)
        channel = _build_channel(sections["channel"], cfg, f"{where}.channel", problems)
        if None not in (cfg, code, link, channel):
            series.append(Series(str(entry.get("label", "")), cfg, code, link, channel))
    return series


def _swept_power_problems(
    constraints: PowerConstraint, series: list[Series], sweep: Sweep
) -> list[str]:
    problems = []
    for index, item in enumerate(series):
        for value in np.unique(sweep.values):
            where = f"series[{index}] at comm_power {value:.9g} W"
            try:
                cfg = item.waveform.with_powers(item.waveform.radar_power, value)
            except ConfigInvalid:
                continue
            problems.extend(constraints.problems(cfg, where))
    return problems


def validate_scenario(raw: dict, source: Path | None = None) -> Scenario:
    """Checks a scenario document and resolves it into a Scenario.

    Args:
        raw: Parsed JSON document.
        source: File the document came from.

    Returns:
        The validated scenario.

    Raises:
        ConfigInvalid: Listing every violated invariant.

    """
    if not isinstance(raw, dict):
        raise ConfigInvalid(["scenario: document has to be a JSON object"])
    problems = []
    unknown = sorted(set(raw) - TOP_LEVEL_KEYS)
    problems.extend(f"{key}: unknown field" for key in unknown)

    name = raw.get("name")
    if not isinstance(name, str) or not name:
        problems.append("name: required nonempty string")

    bases = {
        section: _section(raw, section, DEFAULTS[section], problems)
        for section in ("waveform", "link", "channel")
    }
    series = _build_series(raw, bases, problems)
    detection = _section(raw, "detection", DEFAULTS["detection"], problems)
    p_fa = _number(detection, "p_fa", "detection", problems)
    target_pd = _number(detection, "target_pd", "detection", problems)
    if p_fa is not None and not 0 < p_fa < 1:
        problems.append("detection.p_fa: has to lie in (0, 1)")
    if target_pd is not None and not 0 < target_pd < 1:
        problems.append("detection.target_pd: has to lie in (0, 1)")

    sweep = _build_sweep(raw, problems)
    if sweep is not None and sweep.variable == SweepVariable.LAG:
        for index, item in enumerate(series):
            max_lag = item.waveform.comm_chips * item.waveform.chip_duration
            if np.any(np.abs(sweep.values) > max_lag * (1 + 1e-9)):
                problems.append(
                    f"sweep.values: lags of series[{index}] exceed +-{max_lag:.9g} s"
                )

    lag_sweep = sweep is not None and sweep.variable == SweepVariable.LAG
    metrics = raw.get("metrics", ["acf_db"] if lag_sweep else ["p_d"])
    if not isinstance(metrics, list) or not metrics:
        problems.append("metrics: has to be a nonempty list")
        metrics = []
    for metric in metrics:
        if metric not in POINT_METRICS + SUMMARY_METRICS:
            problems.append(f"metrics: unknown metric '{metric}'")
        elif sweep is None:
            continue
        elif metric in LAG_METRICS and sweep.variable != SweepVariable.LAG:
            problems.append(f"metrics: '{metric}' needs a lag sweep")
        elif metric not in LAG_METRICS and sweep.variable == SweepVariable.LAG:
            problems.append(f"metrics: '{metric}' cannot be swept over lags")

    trials = raw.get("trials", 1000)
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        problems.append("trials: has to be a positive integer")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**63:
        problems.append("seed: has to be an integer in [0, 2^63)")
    mode = raw.get("mode", RunMode.ANALYTIC)
    if mode not in RunMode.ALL:
        problems.append(f"mode: has to be one of {', '.join(RunMode.ALL)}")

    constraints = None
    if "constraints" in raw:
        base = {"avg_power": None, "max_power": None}
        values = _section(raw, "constraints", base, problems)
        if any(not isinstance(values[key], (int, float)) for key in values):
            problems.append("constraints: need numeric avg_power and max_power")
        else:
            constraints = PowerConstraint(
                float(values["avg_power"]), float(values["max_power"])
            )
            for index, item in enumerate(series):
                problems.extend(constraints.problems(item.waveform, f"series[{index}]"))
            if sweep is not None and sweep.variable == SweepVariable.COMM_POWER:
                problems.extend(_swept_power_problems(constraints, series, sweep))

    if problems:
        raise ConfigInvalid(problems)

    return Scenario(
        name=name,
        description=str(raw.get("description", "")),
        series=series,
        sweep=sweep,
        metrics=list(metrics),
        p_fa=p_fa,
        target_pd=target_pd,
        trials=trials,
        seed=seed,
        mode=mode,
        constraints=constraints,
        source=source,
    )


def load_scenario(path: str | Path) -> Scenario:
    """Reads and validates a scenario file, or a builtin scenario given by name."""
    path = Path(path)
    if not path.exists() and path.suffix == "":
        builtin = builtin_scenarios().get(path.name)
        if builtin is not None:
            path = builtin
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigInvalid([f"{path}: no such scenario file or builtin scenario"])
    except json.JSONDecodeError as error:
        raise ConfigInvalid([f"{path}: malformed JSON ({error})"])
    logger.debug("loaded scenario document %s", path)
    return validate_scenario(raw, source=path)


def builtin_scenarios() -> dict[str, Path]:
    """Builtin scenario files by name."""
    return {path.stem: path for path in sorted(SCENARIO_DIR.glob("*.json"))}


def apply_sweep(
    series: Series, variable: str, value: float, warn: bool = True
) -> tuple[WaveformConfig, ChannelState]:
    """Waveform and channel of one series at one sweep value.

    Args:
        series: Series to evaluate.
        variable: Swept variable.
        value: Value of the swept variable.
        warn: Log a warning when the target range is clipped to the last bin.

    Raises:
        ConfigInvalid: The swept value yields an invalid waveform.

    """
    cfg = series.waveform
    link = series.link
    settings = series.channel
    if variable == SweepVariable.EPSILON_DB:
        settings = dataclasses.replace(settings, sic_factor_db=float(value))
    elif variable == SweepVariable.COMM_POWER:
        cfg = cfg.with_powers(cfg.radar_power, float(value))
    elif variable == SweepVariable.TARGET_RANGE:
        link = link.with_range(float(value))

    state = settings.state(cfg, link, warn=warn)
    if variable == SweepVariable.SINR_K_DB:
        alpha = alpha_for_sinr(cfg, state, db_to_power(value))
        state = dataclasses.replace(state, alpha=alpha)
    return cfg, state
