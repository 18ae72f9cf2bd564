"""CSV ingestion: meter streams, daily weather, gap filling, merging.

Parsers are forgiving row by row but strict about structure: a missing
column or an empty file is an error, while individual bad rows are
dropped and counted so callers can assert exactly what was discarded.

File schemas (UTF-8, LF or CRLF, header row required):

* meter:   ``timestamp,watts`` with timestamps like ``2023-03-01 00:05``
* weather: ``date,max_temp_c,rainfall_mm,temp_9am_c,rh_9am_pct,
  temp_3pm_c,rh_3pm_pct`` with ISO dates; an empty cell means missing

Monthly weather files are named ``YYYYMM.csv``.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from gridcast.errors import (
    AllMissingError,
    BoundaryMissingError,
    EmptyFileError,
    EmptyInputError,
    EmptyIntersectionError,
    MalformedTimestampError,
    MissingColumnError,
    NoOverlapError,
)
from gridcast.types import (
    TIMESTAMP_FORMAT,
    WEATHER_CSV_COLUMNS,
    WEATHER_FIELDS,
    MergedFrame,
    MeterRecord,
    TimePoint,
    WeatherDay,
    build_merged_frame,
    weather_value_ok,
)

STREAM_KINDS = ("grid", "solar", "plain")

# File header -> in-memory field name for the canonical weather schema.
DEFAULT_WEATHER_COLUMN_MAP: Mapping[str, str] = dict(
    zip(WEATHER_CSV_COLUMNS, WEATHER_FIELDS))

_MONTH_LABEL = re.compile(r"^(\d{4})(\d{2})$")
_MONTH_FILE = re.compile(r"^\d{6}\.csv$")


@dataclass(frozen=True)
class MeterCsvSpec:
    """Where and how to read one meter stream.

    ``kind`` states what the stream measures: ``grid`` is net draw from
    a solar household (negative = export, allowed), ``solar`` is panel
    generation, ``plain`` is a household without solar.  Negative watts
    are physically impossible for the latter two and are dropped.
    """

    path: str | Path
    timestamp_column: str = "timestamp"
    watts_column: str = "watts"
    timestamp_format: str = TIMESTAMP_FORMAT
    kind: str = "plain"

    def __post_init__(self):
        if self.kind not in STREAM_KINDS:
            raise ValueError(f"kind must be one of {STREAM_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class WeatherCsvSpec:
    """One monthly weather file plus the header adaptation map."""

    path: str | Path
    month_label: str
    date_column: str = "date"
    column_map: Mapping[str, str] = field(
        default_factory=lambda: dict(DEFAULT_WEATHER_COLUMN_MAP))

    def __post_init__(self):
        match = _MONTH_LABEL.match(self.month_label)
        if not match or not (1 <= int(match.group(2)) <= 12):
            raise ValueError(
                f"month label must look like 202303, got {self.month_label!r}")
        mapped = sorted(self.column_map.values())
        if mapped != sorted(WEATHER_FIELDS):
            raise ValueError(
                f"column map must cover exactly the fields {WEATHER_FIELDS}")

    @property
    def year(self) -> int:
        return int(self.month_label[:4])

    @property
    def month(self) -> int:
        return int(self.month_label[4:])


@dataclass(frozen=True)
class MeterDrops:
    """Row-level discards from one meter file."""

    bad_timestamps: int = 0
    blank_watts: int = 0
    negative_watts: int = 0
    duplicates: int = 0

    @property
    def total(self) -> int:
        return (self.bad_timestamps + self.blank_watts
                + self.negative_watts + self.duplicates)


@dataclass(frozen=True)
class WeatherDrops:
    """Discards and demotions from weather files.

    ``invalid_cells`` counts unparseable or out-of-range values demoted
    to missing (the row itself survives); the other counters are whole
    dropped rows.
    """

    bad_dates: int = 0
    duplicates: int = 0
    misfiled: int = 0
    invalid_cells: int = 0

    @property
    def total_rows(self) -> int:
        return self.bad_dates + self.duplicates + self.misfiled

    def merged_with(self, other: "WeatherDrops") -> "WeatherDrops":
        return WeatherDrops(
            bad_dates=self.bad_dates + other.bad_dates,
            duplicates=self.duplicates + other.duplicates,
            misfiled=self.misfiled + other.misfiled,
            invalid_cells=self.invalid_cells + other.invalid_cells,
        )


@dataclass(frozen=True)
class MeterParseResult:
    records: tuple[MeterRecord, ...]
    drops: MeterDrops


@dataclass(frozen=True)
class WeatherParseResult:
    days: tuple[WeatherDay, ...]
    drops: WeatherDrops


@dataclass(frozen=True)
class WeatherDirResult:
    days: tuple[WeatherDay, ...]
    drops: WeatherDrops
    files: tuple[str, ...]


@dataclass(frozen=True)
class MergeResult:
    records: tuple[MeterRecord, ...]
    grid_only: int
    solar_only: int


@dataclass(frozen=True)
class FrameResult:
    frame: MergedFrame
    dropped_no_weather: int


def _read_csv_rows(path, required_columns: Sequence[str]) -> list[dict]:
    with open(path, newline="", encoding="utf-8-sig") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise EmptyFileError(f"{path}: no header row")
        missing = [c for c in required_columns if c not in reader.fieldnames]
        if missing:
            raise MissingColumnError(f"{path}: missing column(s) {missing}")
        rows = list(reader)
    if not rows:
        raise EmptyFileError(f"{path}: header but no data rows")
    return rows


def parse_meter_csv(spec: MeterCsvSpec) -> MeterParseResult:
    """Read one meter stream; returns records sorted by time plus drops.

    Rows with unreadable timestamps or watts are dropped and counted; a
    repeated timestamp keeps its first row.  If over half the rows have
    unreadable timestamps the format string is presumed wrong and the
    whole parse fails instead of silently discarding the file.
    """
    rows = _read_csv_rows(spec.path, [spec.timestamp_column, spec.watts_column])
    bad_ts = blank = negative = duplicates = 0
    seen: set[TimePoint] = set()
    records: list[MeterRecord] = []
    for row in rows:
        ts_text = (row.get(spec.timestamp_column) or "").strip()
        try:
            t = TimePoint.parse(ts_text, spec.timestamp_format)
        except ValueError:
            bad_ts += 1
            continue
        watts_text = (row.get(spec.watts_column) or "").strip()
        try:
            watts = float(watts_text)
        except ValueError:
            blank += 1
            continue
        if not math.isfinite(watts):
            blank += 1
            continue
        if watts < 0 and spec.kind != "grid":
            negative += 1
            continue
        if t in seen:
            duplicates += 1
            continue
        seen.add(t)
        records.append(MeterRecord(t, watts))
    if bad_ts > len(rows) / 2:
        raise MalformedTimestampError(
            f"{spec.path}: {bad_ts} of {len(rows)} timestamps unreadable; "
            f"is the format string {spec.timestamp_format!r} right?")
    records.sort(key=lambda r: r.t)
    return MeterParseResult(
        records=tuple(records),
        drops=MeterDrops(bad_timestamps=bad_ts, blank_watts=blank,
                         negative_watts=negative, duplicates=duplicates),
    )


def parse_weather_csv(spec: WeatherCsvSpec) -> WeatherParseResult:
    """Read one monthly weather file into per-day records.

    Blank cells become missing markers.  Unparseable or implausible
    values are demoted to missing and counted; rows with unreadable
    dates, repeated dates, or dates outside the file's labelled month
    are dropped and counted.
    """
    required = [spec.date_column] + list(spec.column_map.keys())
    rows = _read_csv_rows(spec.path, required)
    bad_dates = duplicates = misfiled = invalid = 0
    seen: set[dt.date] = set()
    days: list[WeatherDay] = []
    for row in rows:
        date_text = (row.get(spec.date_column) or "").strip()
        try:
            date = dt.date.fromisoformat(date_text)
        except ValueError:
            bad_dates += 1
            continue
        if (date.year, date.month) != (spec.year, spec.month):
            misfiled += 1
            continue
        if date in seen:
            duplicates += 1
            continue
        seen.add(date)
        values: dict[str, float] = {}
        for file_column, field_name in spec.column_map.items():
            text = (row.get(file_column) or "").strip()
            if not text:
                continue  # blank cell is the documented missing marker
            try:
                value = float(text)
            except ValueError:
                invalid += 1
                continue
            if not weather_value_ok(field_name, value):
                invalid += 1
                continue
            values[field_name] = value
        days.append(WeatherDay(date, **values))
    days.sort(key=lambda d: d.date)
    return WeatherParseResult(
        days=tuple(days),
        drops=WeatherDrops(bad_dates=bad_dates, duplicates=duplicates,
                           misfiled=misfiled, invalid_cells=invalid),
    )


def load_weather_dir(directory,
                     column_map: Mapping[str, str] | None = None,
                     date_column: str = "date") -> WeatherDirResult:
    """Parse every YYYYMM.csv in a directory into one sorted day list.

    Other filenames are ignored.  Should two files both carry a date
    (only possible via misfiling, which is already dropped per file),
    the earlier-named file wins.
    """
    directory = Path(directory)
    names = sorted(p.name for p in directory.iterdir()
                   if _MONTH_FILE.match(p.name))
    if not names:
        raise EmptyInputError(f"{directory}: no YYYYMM.csv weather files")
    all_days: list[WeatherDay] = []
    drops = WeatherDrops()
    seen: set[dt.date] = set()
    for name in names:
        spec = WeatherCsvSpec(
            path=directory / name, month_label=name[:6],
            date_column=date_column,
            column_map=dict(column_map if column_map is not None
                            else DEFAULT_WEATHER_COLUMN_MAP))
        result = parse_weather_csv(spec)
        drops = drops.merged_with(result.drops)
        for day in result.days:
            if day.date in seen:
                drops = drops.merged_with(WeatherDrops(duplicates=1))
                continue
            seen.add(day.date)
            all_days.append(day)
    all_days.sort(key=lambda d: d.date)
    return WeatherDirResult(days=tuple(all_days), drops=drops,
                            files=tuple(names))


def _require_sorted_dates(days: Sequence[WeatherDay]) -> None:
    for prev, cur in zip(days, days[1:]):
        if not prev.date < cur.date:
            raise ValueError(
                f"weather days must be strictly sorted by date; "
                f"{cur.date} follows {prev.date}")


def interpolate_weather(days: Iterable[WeatherDay]) -> tuple[WeatherDay, ...]:
    """Fill every missing field linearly along the date axis.

    Each filled value is the straight line between the nearest earlier
    and later observed values of that field, weighted by calendar-day
    distance.  A field missing at either end of the range (or missing
    everywhere) cannot be filled and is an error.  Running the fill a
    second time is a no-op.
    """
    days = tuple(days)
    if not days:
        raise EmptyInputError("no weather days to interpolate")
    _require_sorted_dates(days)
    ordinals = np.array([d.date.toordinal() for d in days], dtype=np.float64)
    filled_columns: dict[str, list[float]] = {}
    for name in WEATHER_FIELDS:
        values = [getattr(d, name) for d in days]
        known = [i for i, v in enumerate(values) if v is not None]
        if not known:
            raise AllMissingError(f"field {name} has no observed values")
        if known[0] != 0 or known[-1] != len(days) - 1:
            end = "start" if known[0] != 0 else "end"
            raise BoundaryMissingError(
                f"field {name} is missing at the {end} of the date range; "
                f"linear interpolation has no anchor there")
        if len(known) == len(days):
            filled_columns[name] = values
            continue
        interpolated = np.interp(ordinals, ordinals[known],
                                 [values[i] for i in known])
        filled_columns[name] = [
            values[i] if values[i] is not None else float(interpolated[i])
            for i in range(len(days))
        ]
    return tuple(
        WeatherDay(day.date, **{name: filled_columns[name][i]
                                for name in WEATHER_FIELDS})
        for i, day in enumerate(days)
    )


def _require_sorted_records(records: Sequence[MeterRecord], label: str) -> None:
    for prev, cur in zip(records, records[1:]):
        if not prev.t < cur.t:
            raise ValueError(
                f"{label} records must be strictly sorted by time; "
                f"{cur.t.isoformat()} follows {prev.t.isoformat()}")


def merge_solar(grid: Sequence[MeterRecord],
                solar: Sequence[MeterRecord]) -> MergeResult:
    """Add generation back onto net grid draw, per matching timestamp.

    Total consumption = grid watts + solar watts.  Timestamps present in
    only one stream are dropped and counted per side; an empty
    intersection is an error.
    """
    grid = tuple(grid)
    solar = tuple(solar)
    _require_sorted_records(grid, "grid")
    _require_sorted_records(solar, "solar")
    solar_by_time = {rec.t: rec.watts for rec in solar}
    merged: list[MeterRecord] = []
    grid_only = 0
    for rec in grid:
        solar_watts = solar_by_time.get(rec.t)
        if solar_watts is None:
            grid_only += 1
            continue
        merged.append(MeterRecord(rec.t, rec.watts + solar_watts))
    if not merged:
        raise EmptyIntersectionError(
            "grid and solar streams share no timestamps")
    return MergeResult(records=tuple(merged), grid_only=grid_only,
                       solar_only=len(solar) - len(merged))


def build_frame(meter: Sequence[MeterRecord],
                weather: Sequence[WeatherDay]) -> FrameResult:
    """Broadcast each day's weather onto its 5-minute meter rows.

    Meter rows on dates with no weather are dropped and counted; if
    nothing remains the date ranges are disjoint and that is an error.
    Weather must already be fully interpolated.
    """
    meter = tuple(meter)
    if not meter:
        raise EmptyInputError("no meter records")
    for day in weather:
        if not day.is_complete():
            raise ValueError(
                f"weather for {day.date} still has missing fields "
                f"{day.missing_fields()}; interpolate first")
    by_date = {day.date: day for day in weather}
    times: list[TimePoint] = []
    consumption: list[float] = []
    weather_rows: list[tuple[float, ...]] = []
    dropped = 0
    for rec in meter:
        day = by_date.get(rec.t.date)
        if day is None:
            dropped += 1
            continue
        times.append(rec.t)
        consumption.append(rec.watts)
        weather_rows.append(day.field_values())
    if not times:
        raise NoOverlapError("no meter dates fall inside the weather range")
    frame = build_merged_frame(times, consumption, weather_rows)
    frame.validate()
    return FrameResult(frame=frame, dropped_no_weather=dropped)
