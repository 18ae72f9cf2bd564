"""Forecast metrics, seasonal stratification, and report assembly.

Metrics default to watt units; pass units="scaled" when scoring in the
[0, 1] min-max space.  R-squared on a constant actual series is an
explicit ZeroVarianceError from r2(), and report cells store None for
it rather than NaN, so degenerate slices are visible instead of
silently poisoning downstream tables.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gridcast.errors import (
    DimensionMismatchError,
    EmptyInputError,
    LengthMismatchError,
    TooFewRowsError,
    ZeroVarianceError,
)
from gridcast.types import (
    SLOTS_PER_DAY,
    WEATHER_FIELDS,
    MergedFrame,
    Season,
    season_of,
)

METRIC_NAMES = ("rmse", "mae", "r2")
UNIT_FLAGS = ("watts", "scaled")

# Column order of the correlation matrix: weather first, consumption last.
CORRELATION_COLUMNS = WEATHER_FIELDS + ("consumption_w",)


def _paired(pred, actual) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64).ravel()
    a = np.asarray(actual, dtype=np.float64).ravel()
    if p.shape != a.shape:
        raise LengthMismatchError(
            f"prediction length {p.shape[0]} != actual length {a.shape[0]}")
    if p.size == 0:
        raise EmptyInputError("no prediction/actual pairs")
    return p, a


def rmse(pred, actual) -> float:
    """Root mean squared error."""
    p, a = _paired(pred, actual)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(pred, actual) -> float:
    """Mean absolute error."""
    p, a = _paired(pred, actual)
    return float(np.mean(np.abs(p - a)))


def r2(pred, actual) -> float:
    """Coefficient of determination, 1 - SSE/SST.

    Zero for the exact mean predictor, negative when worse than it.
    Constant actuals make SST zero and raise rather than return NaN.
    """
    p, a = _paired(pred, actual)
    sst = float(np.sum((a - a.mean()) ** 2))
    if sst == 0.0:
        raise ZeroVarianceError(
            "actuals are constant; the mean-predictor reference is undefined")
    sse = float(np.sum((p - a) ** 2))
    return 1.0 - sse / sst


def pearson(x, y) -> float:
    """Product-moment correlation in [-1, 1]."""
    xv, yv = _paired(x, y)
    if xv.size < 2:
        raise ZeroVarianceError("correlation needs at least 2 samples")
    xm = xv - xv.mean()
    ym = yv - yv.mean()
    sx = float(np.sum(xm * xm))
    sy = float(np.sum(ym * ym))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVarianceError("correlation undefined for a constant input")
    r = float(np.sum(xm * ym) / np.sqrt(sx * sy))
    return float(np.clip(r, -1.0, 1.0))


@dataclass(frozen=True)
class MetricSet:
    """One slice's scores; r2 is None when the slice cannot define it."""

    rmse: float
    mae: float
    r2: float | None
    n: int
    units: str = "watts"

    def __post_init__(self):
        if self.units not in UNIT_FLAGS:
            raise ValueError(f"units must be one of {UNIT_FLAGS}, got {self.units!r}")
        if self.n < 1:
            raise ValueError(f"sample count must be positive, got {self.n}")


def compute_metrics(pred, actual, units: str = "watts") -> MetricSet:
    """Score one (prediction, actual) slice; r2 falls back to None."""
    p, a = _paired(pred, actual)
    try:
        r2_value = r2(p, a)
    except ZeroVarianceError:
        r2_value = None
    return MetricSet(rmse=rmse(p, a), mae=mae(p, a), r2=r2_value,
                     n=int(a.size), units=units)


def stratify_by_season(pred, actual, times, units: str = "watts"
                       ) -> dict[Season, MetricSet]:
    """Partition pairs by the season of their TimePoint and score each.

    Empty strata are omitted; present strata always partition the input,
    so the per-season counts sum to the total pair count.
    """
    p, a = _paired(pred, actual)
    times = tuple(times)
    if len(times) != a.size:
        raise LengthMismatchError(
            f"{a.size} pairs but {len(times)} timestamps")
    seasons = np.array([season_of(t).value for t in times])
    out: dict[Season, MetricSet] = {}
    for season in Season:
        mask = seasons == season.value
        if mask.any():
            out[season] = compute_metrics(p[mask], a[mask], units=units)
    return out


def diurnal_profile(frame: MergedFrame, statistic: str = "median"
                    ) -> dict[Season, np.ndarray]:
    """Per-season typical day: one value per 5-minute slot.

    Returns a 288-long array per season present in the frame; slots a
    season never observes hold NaN.
    """
    if statistic not in ("median", "mean"):
        raise ValueError(f"statistic must be median or mean, got {statistic!r}")
    reduce = np.median if statistic == "median" else np.mean
    slots = np.array([t.slot for t in frame.times])
    seasons = np.array([season_of(t).value for t in frame.times])
    out: dict[Season, np.ndarray] = {}
    for season in Season:
        season_mask = seasons == season.value
        if not season_mask.any():
            continue
        profile = np.full(SLOTS_PER_DAY, np.nan)
        season_slots = slots[season_mask]
        season_values = frame.consumption[season_mask]
        for slot in np.unique(season_slots):
            profile[slot] = reduce(season_values[season_slots == slot])
        out[season] = profile
    return out


def pairwise_correlation(columns) -> np.ndarray:
    """Symmetric correlation matrix over the columns of an (N, K) array.

    The diagonal is exactly 1; any pair involving a constant column is
    reported as NaN (missing) rather than raising, so one degenerate
    column cannot sink the whole matrix.
    """
    x = np.asarray(columns, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError(f"expected (rows, columns), got ndim={x.ndim}")
    if x.shape[0] < 2:
        raise TooFewRowsError(f"need at least 2 rows, got {x.shape[0]}")
    k = x.shape[1]
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                c = pearson(x[:, i], x[:, j])
            except ZeroVarianceError:
                c = np.nan
            out[i, j] = out[j, i] = c
    return out


def correlation_matrix(frame: MergedFrame) -> np.ndarray:
    """7x7 correlation of the six weather fields and consumption."""
    stacked = np.column_stack([frame.weather, frame.consumption])
    return pairwise_correlation(stacked)


@dataclass(frozen=True)
class ReportCell:
    """One scored (model, data slice) pair, e.g. ("lstm", "test/DJF")."""

    model: str
    subset: str
    metrics: MetricSet


@dataclass
class EvalReport:
    """All cells of one experiment plus provenance metadata."""

    metadata: dict
    cells: list[ReportCell]

    def cell(self, model: str, subset: str) -> MetricSet | None:
        for c in self.cells:
            if c.model == model and c.subset == subset:
                return c.metrics
        return None

    def models(self) -> tuple[str, ...]:
        seen = []
        for c in self.cells:
            if c.model not in seen:
                seen.append(c.model)
        return tuple(seen)

    def to_dict(self) -> dict:
        return {
            "metadata": dict(self.metadata),
            "cells": [
                {
                    "model": c.model,
                    "slice": c.subset,
                    "metrics": {
                        "rmse": c.metrics.rmse,
                        "mae": c.metrics.mae,
                        "r2": c.metrics.r2,
                        "n": c.metrics.n,
                        "units": c.metrics.units,
                    },
                }
                for c in self.cells
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        cells = [
            ReportCell(
                model=item["model"],
                subset=item["slice"],
                metrics=MetricSet(
                    rmse=item["metrics"]["rmse"],
                    mae=item["metrics"]["mae"],
                    r2=item["metrics"]["r2"],
                    n=item["metrics"]["n"],
                    units=item["metrics"]["units"],
                ),
            )
            for item in data["cells"]
        ]
        return cls(metadata=dict(data["metadata"]), cells=cells)


def write_report_json(report: EvalReport, path) -> None:
    """Reloadable JSON dump; floats keep full round-trip precision."""
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_report_json(path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_report_csv(report: EvalReport, path) -> None:
    """Plot-ready long table: one row per model x slice x metric."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["model", "slice", "metric", "value", "n", "units"])
        for c in report.cells:
            values = {"rmse": c.metrics.rmse, "mae": c.metrics.mae,
                      "r2": c.metrics.r2}
            for name in METRIC_NAMES:
                value = values[name]
                writer.writerow([
                    c.model, c.subset, name,
                    "" if value is None else repr(float(value)),
                    c.metrics.n, c.metrics.units,
                ])


def write_correlation_csv(values: np.ndarray, path,
                          labels=CORRELATION_COLUMNS) -> None:
    """Square correlation table with a label header row and column."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (len(labels), len(labels)):
        raise DimensionMismatchError(
            f"matrix shape {values.shape} does not fit {len(labels)} labels")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([""] + list(labels))
        for label, row in zip(labels, values):
            writer.writerow([label] + [
                "" if np.isnan(v) else repr(float(v)) for v in row])


def write_diurnal_csv(profiles: dict[Season, np.ndarray], path) -> None:
    """Long table of per-season typical days: season, slot, value."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["season", "slot", "value"])
        for season in Season:
            if season not in profiles:
                continue
            for slot, value in enumerate(profiles[season]):
                writer.writerow([season.value, slot,
                                 "" if np.isnan(value) else repr(float(value))])
