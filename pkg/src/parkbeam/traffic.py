"""Antenna-to-zone traffic conversion and temporal aggregation.

Zone traffic is the illumination-weighted sum of the selected antennas'
hourly series. Daily aggregation and weekday/weekend statistics run on
local civil dates derived from an explicit UTC-offset rule list, so the
whole chain is bit-reproducible without a tz database.
"""

from __future__ import annotations

import bisect
import csv
import datetime
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

SECONDS_PER_DAY = 86400
SECONDS_PER_HOUR = 3600


class CalendarError(ValueError):
    """Timestamp not covered by the calendar's offset rules."""


@dataclass(frozen=True)
class LocalCalendar:
    """Ordered (from_epoch, utc_offset_minutes) rules; first rule must
    cover the study start."""

    rules: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.rules:
            raise ValueError("calendar needs at least one offset rule")
        epochs = [r[0] for r in self.rules]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("offset rule epochs must be strictly increasing")

    @classmethod
    def utc(cls) -> "LocalCalendar":
        return cls(((0, 0),))

    @classmethod
    def fixed(cls, offset_min: int, from_epoch: int = 0) -> "LocalCalendar":
        return cls(((from_epoch, offset_min),))

    @classmethod
    def paris_2023(cls) -> "LocalCalendar":
        # CET/CEST for the 2023 study year; DST switches at 01:00 UTC.
        return cls(((1672531200, 60), (1679792400, 120), (1698541200, 60)))

    def offset_minutes(self, ts: int) -> int:
        idx = bisect.bisect_right([r[0] for r in self.rules], ts) - 1
        if idx < 0:
            raise CalendarError(f"timestamp {ts} precedes the first offset rule")
        return self.rules[idx][1]

    def offsets_array(self, ts: np.ndarray) -> np.ndarray:
        epochs = np.array([r[0] for r in self.rules], dtype=np.int64)
        offsets = np.array([r[1] for r in self.rules], dtype=np.int64)
        idx = np.searchsorted(epochs, ts, side="right") - 1
        if np.any(idx < 0):
            bad = int(ts[np.argmin(idx)])
            raise CalendarError(f"timestamp {bad} precedes the first offset rule")
        return offsets[idx]

    def local_date(self, ts: int) -> datetime.date:
        local = ts + self.offset_minutes(ts) * 60
        return datetime.date(1970, 1, 1) + datetime.timedelta(days=local // SECONDS_PER_DAY)

    def local_day_index(self, ts: np.ndarray) -> np.ndarray:
        local = ts + self.offsets_array(ts) * 60
        return local // SECONDS_PER_DAY

    def local_hour(self, ts: np.ndarray) -> np.ndarray:
        local = ts + self.offsets_array(ts) * 60
        return (local % SECONDS_PER_DAY) // SECONDS_PER_HOUR


def day_index_to_date(day_index: int) -> datetime.date:
    return datetime.date(1970, 1, 1) + datetime.timedelta(days=int(day_index))


def is_weekend_day_index(day_index: np.ndarray) -> np.ndarray:
    # 1970-01-01 was a Thursday; weekday 0 = Monday.
    return (np.asarray(day_index) + 3) % 7 >= 5


@dataclass
class ZoneTrafficSeries:
    """Hourly per-app volumes attributed to one zone (downlink+uplink)."""

    zone_id: str
    entries: dict[tuple[int, str], float]

    def total(self) -> float:
        return math.fsum(self.entries.values())

    def to_frame(self) -> pd.DataFrame:
        keys = sorted(self.entries)
        return pd.DataFrame(
            {
                "unit_id": self.zone_id,
                "timestamp": [k[0] for k in keys],
                "app_id": [k[1] for k in keys],
                "bytes": [self.entries[k] for k in keys],
            }
        )


def zone_traffic(
    zone_id: str,
    antenna_series: Mapping[str, Mapping[tuple[int, str], float]],
    weights: Mapping[str, float],
) -> ZoneTrafficSeries:
    """Weighted conversion T_p(t) = sum_v i_pv * T_v(t), per app and hour.

    Antennas missing from the series contribute zero. Accumulation runs in
    sorted antenna order for reproducible float sums.
    """
    acc: dict[tuple[int, str], float] = {}
    for antenna_id in sorted(weights):
        w = weights[antenna_id]
        series = antenna_series.get(antenna_id)
        if series is None:
            continue
        for key in sorted(series):
            acc[key] = acc.get(key, 0.0) + w * series[key]
    return ZoneTrafficSeries(zone_id, acc)


def convert_frame(traffic: pd.DataFrame, weights: pd.DataFrame) -> pd.DataFrame:
    """Vectorized weighted conversion for the whole zone set.

    traffic: antenna_id, app_id, timestamp, downlink, uplink (or bytes).
    weights: zone_id, antenna_id, i_pv. Returns zone_id, timestamp, app_id,
    bytes sorted for deterministic summation order.
    """
    df = traffic.copy()
    if "bytes" not in df.columns:
        df["bytes"] = df["downlink"].astype(np.float64) + df["uplink"].astype(np.float64)
    merged = df.merge(weights, on="antenna_id", how="inner")
    merged["bytes"] = merged["bytes"] * merged["i_pv"]
    merged = merged.sort_values(
        ["zone_id", "timestamp", "app_id", "antenna_id"], kind="mergesort"
    )
    out = (
        merged.groupby(["zone_id", "timestamp", "app_id"], sort=True, observed=True)["bytes"]
        .sum()
        .reset_index()
    )
    return out


def daily_volumes(
    series: ZoneTrafficSeries | pd.DataFrame, calendar: LocalCalendar
) -> dict[datetime.date, float]:
    """Sum all apps per local calendar day (partial boundary days included)."""
    ts, vol = _series_arrays(series)
    if len(ts) == 0:
        return {}
    days = calendar.local_day_index(ts)
    order = np.argsort(days, kind="stable")
    days, vol = days[order], vol[order]
    uniq, starts = np.unique(days, return_index=True)
    sums = np.add.reduceat(vol, starts)
    return {day_index_to_date(d): float(s) for d, s in zip(uniq, sums)}


def daily_hour_counts(
    series: ZoneTrafficSeries | pd.DataFrame, calendar: LocalCalendar
) -> dict[datetime.date, int]:
    """Distinct hourly timestamps observed per local day."""
    ts, _ = _series_arrays(series)
    if len(ts) == 0:
        return {}
    ts = np.unique(ts)
    days = calendar.local_day_index(ts)
    uniq, counts = np.unique(days, return_counts=True)
    return {day_index_to_date(d): int(c) for d, c in zip(uniq, counts)}


def expected_day_hours(date: datetime.date, calendar: LocalCalendar) -> int:
    """How many UTC hours map onto this local date (23/24/25 around DST)."""
    day_index = (date - datetime.date(1970, 1, 1)).days
    # Scan a generous UTC window around the nominal day.
    start = (day_index - 1) * SECONDS_PER_DAY
    hours = np.arange(start, start + 3 * SECONDS_PER_DAY, SECONDS_PER_HOUR, dtype=np.int64)
    try:
        local_days = calendar.local_day_index(hours)
    except CalendarError:
        hours = hours[hours >= calendar.rules[0][0]]
        local_days = calendar.local_day_index(hours)
    return int(np.sum(local_days == day_index))


def complete_daily_volumes(
    series: ZoneTrafficSeries | pd.DataFrame, calendar: LocalCalendar
) -> dict[datetime.date, float]:
    """Daily volumes with incomplete boundary days dropped.

    The first and last observed local day are removed when the series does
    not cover all of their local hours.
    """
    volumes = daily_volumes(series, calendar)
    if not volumes:
        return volumes
    counts = daily_hour_counts(series, calendar)
    dates = sorted(volumes)
    for boundary in (dates[0], dates[-1]):
        if counts.get(boundary, 0) < expected_day_hours(boundary, calendar):
            volumes.pop(boundary, None)
    return volumes


def wd_we_ratio(
    volumes: Mapping[datetime.date, float],
    exclude_dates: Iterable[datetime.date] = (),
) -> float:
    """median(weekday daily volume) / median(weekend daily volume).

    Weekday is Monday-Friday by local date; pass exclude_dates to drop
    holidays. Raises when either class is empty.
    """
    excluded = set(exclude_dates)
    weekday = [v for d, v in sorted(volumes.items()) if d not in excluded and d.weekday() < 5]
    weekend = [v for d, v in sorted(volumes.items()) if d not in excluded and d.weekday() >= 5]
    if not weekday or not weekend:
        raise ValueError("need at least one weekday and one weekend day")
    return _median(weekday) / _median(weekend)


def traffic_score(totals: Mapping[str, float]) -> dict[str, float]:
    """Min-max normalize total volumes across zones; all-equal maps to 0.5."""
    if len(totals) < 2:
        raise ValueError("traffic score needs at least two zones")
    values = list(totals.values())
    lo, hi = min(values), max(values)
    if hi == lo:
        return {z: 0.5 for z in totals}
    return {z: (v - lo) / (hi - lo) for z, v in totals.items()}


def _median(xs: Sequence[float]) -> float:
    s = sorted(xs)
    n = len(s)
    mid = n // 2
    if n % 2:
        return s[mid]
    return 0.5 * (s[mid - 1] + s[mid])


def _series_arrays(series) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(series, ZoneTrafficSeries):
        keys = sorted(series.entries)
        ts = np.array([k[0] for k in keys], dtype=np.int64)
        vol = np.array([series.entries[k] for k in keys], dtype=np.float64)
        return ts, vol
    ts = series["timestamp"].to_numpy(dtype=np.int64)
    vol = series["bytes"].to_numpy(dtype=np.float64)
    return ts, vol


def write_zone_traffic(path, frame: pd.DataFrame, header_line: str | None = None):
    """Emit zone_traffic.csv (zone_id, timestamp, app_id, bytes)."""
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        fh.write("zone_id,timestamp,app_id,bytes\n")
        cols = frame[["zone_id", "timestamp", "app_id", "bytes"]]
        writer = csv.writer(fh)
        for zone_id, ts, app_id, vol in cols.itertuples(index=False, name=None):
            writer.writerow([zone_id, ts, app_id, format(vol, ".6g")])


def write_zone_daily(path, daily_by_zone: Mapping[str, Mapping[datetime.date, float]], header_line=None):
    """Emit zone_daily.csv (zone_id, date, bytes)."""
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["zone_id", "date", "bytes"])
        for zone_id in sorted(daily_by_zone):
            for date, vol in sorted(daily_by_zone[zone_id].items()):
                writer.writerow([zone_id, date.isoformat(), format(vol, ".6g")])


def write_calendar(path, calendar: LocalCalendar, header_line: str | None = None):
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["from_epoch", "utc_offset_min"])
        for from_epoch, offset in calendar.rules:
            writer.writerow([from_epoch, offset])
