"""This module writes result rows as CSV and draws their curves."""
from __future__ import annotations

import dataclasses
import logging
import math
from pathlib import Path
from typing import IO

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from fdisac.errors import OutputError  # noqa: E402
from fdisac.harness import ResultRow, curve_points  # noqa: E402

logger = logging.getLogger(__name__)

COLUMNS = [
    "scenario",
    "sweep_value",
    "metric",
    "analytic",
    "mc",
    "mc_ci95",
    "trials",
    "seed",
]
SPARK_LEVELS = "▁▂▃▄▅▆▇█"


def rows_to_frame(rows: list[ResultRow]) -> pd.DataFrame:
    frame = pd.DataFrame([dataclasses.asdict(row) for row in rows], columns=COLUMNS)
    for column in ("sweep_value", "analytic", "mc", "mc_ci95"):
        frame[column] = frame[column].astype(float)
    for column in ("trials", "seed"):
        frame[column] = frame[column].astype("Int64")
    return frame


def emit_csv(rows: list[ResultRow], target: str | Path | IO[str]) -> None:
    """Writes rows as CSV, nine significant digits and empty cells for absent values.

    Args:
        rows: Nonempty list of rows.
        target: Path or open text buffer.

    Raises:
        OutputError: No rows, or the target cannot be written. No file is created
            for empty input.

    """
    if not rows:
        raise OutputError("No result rows to write.")
    frame = rows_to_frame(rows)
    try:
        frame.to_csv(
            target,
            index=False,
            float_format="%.9g",
            na_rep="",
            lineterminator="\n",
        )
    except OSError as error:
        raise OutputError(f"Cannot write results: {error}") from error
    logger.info("wrote %d rows", len(rows))


def _optional(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return value


def read_csv(source: str | Path | IO[str]) -> list[ResultRow]:
    """Reads rows written by emit_csv."""
    try:
        frame = pd.read_csv(
            source,
            dtype={"scenario": str, "metric": str, "trials": "Int64", "seed": "Int64"},
            keep_default_na=False,
            na_values=[""],
        )
    except OSError as error:
        raise OutputError(f"Cannot read results: {error}") from error

    rows = []
    for record in frame.to_dict("records"):
        rows.append(
            ResultRow(
                scenario=record["scenario"],
                sweep_value=float(record["sweep_value"]),
                metric=record["metric"],
                analytic=_optional(float(record["analytic"])),
                mc=_optional(float(record["mc"])),
                mc_ci95=_optional(float(record["mc_ci95"])),
                trials=None if pd.isna(record["trials"]) else int(record["trials"]),
                seed=None if pd.isna(record["seed"]) else int(record["seed"]),
            )
        )
    return rows


def sparkline(values: np.ndarray) -> str:
    """Unicode block rendering of a sequence, blanks for non-finite values."""
    values = np.asarray(values, dtype=float)
    finite = np.isfinite(values)
    if not finite.any():
        return " " * values.size
    low, high = values[finite].min(), values[finite].max()
    span = high - low
    chars = []
    for value, ok in zip(values, finite):
        if not ok:
            chars.append(" ")
            continue
        level = 0
        if span > 0:
            level = int(round((value - low) / span * (len(SPARK_LEVELS) - 1)))
        chars.append(SPARK_LEVELS[level])
    return "".join(chars)


def emit_curve(
    rows: list[ResultRow], path: str | Path | None = None, metric: str | None = None
) -> str | None:
    """Draws one metric over the sweep, one curve per scenario row name.

    Args:
        rows: Result rows.
        path: SVG file to write, a text sparkline is returned for None or "-".
        metric: Metric to draw, the first metric of the rows if None.

    Returns:
        The sparkline text, or None after writing the SVG.

    Raises:
        OutputError: No rows for the metric, or the file cannot be written.

    """
    if not rows:
        raise OutputError("No result rows to draw.")
    metric = rows[0].metric if metric is None else metric
    curves = curve_points(rows, metric)
    if not curves:
        raise OutputError(f"No values of metric '{metric}' to draw.")

    if path is None or str(path) == "-":
        width = max(len(name) for name in curves)
        lines = [f"{metric}:"]
        for name, (xs, ys) in curves.items():
            finite = ys[np.isfinite(ys)]
            extent = "[]"
            if finite.size:
                extent = f"[{finite.min():.4g}, {finite.max():.4g}]"
            lines.append(f"  {name:<{width}}  {sparkline(ys)}  {extent}")
        return "\n".join(lines)

    figure, axes = plt.subplots(figsize=(7, 4.5))
    for name, (xs, ys) in curves.items():
        axes.plot(xs, ys, label=name)
    axes.set_xlabel("sweep value")
    axes.set_ylabel(metric)
    axes.grid(True, alpha=0.3)
    if len(curves) > 1:
        axes.legend()
    try:
        figure.savefig(path, format="svg", bbox_inches="tight")
    except OSError as error:
        raise OutputError(f"Cannot write curve: {error}") from error
    finally:
        plt.close(figure)
    logger.info("wrote curve of %s to %s", metric, path)
    return None
