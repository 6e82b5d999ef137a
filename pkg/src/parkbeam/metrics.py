"""App-preference metrics over arbitrary aggregation units.

RCA compares a unit's traffic share of an app against the app's global
share; RSCA maps it through (RCA-1)/(RCA+1) into [-1, 1]. Units can be
antennas, zones, zone groups, or a rest-of-city aggregate; pass explicit
reference app shares to score subsets against the full-network frame.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .traffic import LocalCalendar, ZoneTrafficSeries, is_weekend_day_index

log = logging.getLogger(__name__)

WINDOWS = ("all", "weekday", "weekend")


@dataclass
class UnitAppMatrix:
    """Non-negative unit x app volume matrix with fixed axis orders."""

    units: list[str]
    apps: list[str]
    volumes: np.ndarray  # shape (len(units), len(apps))
    scope: str = "app"

    def __post_init__(self):
        self.volumes = np.asarray(self.volumes, dtype=np.float64)
        if self.volumes.shape != (len(self.units), len(self.apps)):
            raise ValueError("volume matrix shape does not match axis labels")
        if np.any(self.volumes < 0) or not np.all(np.isfinite(self.volumes)):
            raise ValueError("volumes must be finite and non-negative")

    def row(self, unit_id: str) -> np.ndarray:
        return self.volumes[self.units.index(unit_id)]

    def app_shares(self) -> np.ndarray:
        total = self.volumes.sum()
        if total <= 0:
            raise ValueError("matrix has zero total volume")
        return self.volumes.sum(axis=0) / total


@dataclass
class RscaMatrix:
    """RCA and its symmetric transform on shared axes."""

    units: list[str]
    apps: list[str]
    rca: np.ndarray
    rsca: np.ndarray
    scope: str = "app"

    def unit_rsca(self, unit_id: str) -> dict[str, float]:
        i = self.units.index(unit_id)
        return {a: float(v) for a, v in zip(self.apps, self.rsca[i])}


def rca(matrix: UnitAppMatrix, app_share: np.ndarray | None = None) -> tuple[UnitAppMatrix, np.ndarray]:
    """RCA share ratio: (cell / row total) / global app share.

    Returns (possibly reduced matrix, rca array): units with zero traffic
    and apps with zero global share are dropped with a warning. Zero cells
    map to RCA 0. Pass app_share to pin the reference frame to a larger
    network matrix.
    """
    vol = matrix.volumes
    row_ok = vol.sum(axis=1) > 0
    if not row_ok.all():
        dropped = [u for u, ok in zip(matrix.units, row_ok) if not ok]
        log.warning("dropping %d zero-traffic units: %s", len(dropped), dropped[:5])
    if app_share is None:
        share = vol[row_ok].sum(axis=0)
        total = share.sum()
        if total <= 0:
            raise ValueError("matrix has zero total volume")
        share = share / total
    else:
        share = np.asarray(app_share, dtype=np.float64)
        if share.shape != (len(matrix.apps),):
            raise ValueError("app_share length does not match app axis")
    col_ok = share > 0
    if not col_ok.all():
        dropped = [a for a, ok in zip(matrix.apps, col_ok) if not ok]
        log.warning("dropping %d zero-share apps: %s", len(dropped), dropped[:5])
    reduced = UnitAppMatrix(
        [u for u, ok in zip(matrix.units, row_ok) if ok],
        [a for a, ok in zip(matrix.apps, col_ok) if ok],
        vol[np.ix_(row_ok, col_ok)],
        scope=matrix.scope,
    )
    share = share[col_ok]
    row_share = reduced.volumes / reduced.volumes.sum(axis=1, keepdims=True)
    return reduced, row_share / share[None, :]


def rsca(matrix: UnitAppMatrix, app_share: np.ndarray | None = None) -> RscaMatrix:
    """RCA plus the bounded symmetric transform (RCA-1)/(RCA+1)."""
    reduced, rca_values = rca(matrix, app_share)
    rsca_values = (rca_values - 1.0) / (rca_values + 1.0)
    return RscaMatrix(reduced.units, reduced.apps, rca_values, rsca_values, scope=reduced.scope)


def rsca_from_rca(rca_values: np.ndarray) -> np.ndarray:
    rca_values = np.asarray(rca_values, dtype=np.float64)
    if np.any(rca_values < 0):
        raise ValueError("RCA values must be non-negative")
    return (rca_values - 1.0) / (rca_values + 1.0)


def category_matrix(matrix: UnitAppMatrix, catalog: Mapping[str, str]) -> UnitAppMatrix:
    """Aggregate app columns into category columns by summed volume.

    Volumes are summed before any RCA computation so the per-unit
    weighted-mean identity carries over to category level.
    """
    missing = [a for a in matrix.apps if a not in catalog]
    if missing:
        raise ValueError(f"apps missing from catalog: {missing[:5]}")
    categories = sorted({catalog[a] for a in matrix.apps})
    out = np.zeros((len(matrix.units), len(categories)))
    col = {c: i for i, c in enumerate(categories)}
    for j, app in enumerate(matrix.apps):
        out[:, col[catalog[app]]] += matrix.volumes[:, j]
    return UnitAppMatrix(list(matrix.units), categories, out, scope="category")


def windowed_matrix(
    series: Mapping[str, ZoneTrafficSeries] | pd.DataFrame,
    window: str,
    calendar: LocalCalendar,
    apps: Sequence[str] | None = None,
) -> UnitAppMatrix:
    """Unit x app totals restricted to hours whose local date is in the window."""
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}, got {window!r}")
    frame = _as_long_frame(series)
    if len(frame) == 0:
        raise ValueError("empty series")
    all_units = sorted({str(u) for u in frame["unit_id"]})
    ts = frame["timestamp"].to_numpy(dtype=np.int64)
    if window != "all":
        weekend = is_weekend_day_index(calendar.local_day_index(ts))
        mask = weekend if window == "weekend" else ~weekend
        frame = frame[mask]
        if len(frame) == 0:
            raise ValueError(f"window {window!r} selects no hours")
    pivot = (
        frame.groupby(["unit_id", "app_id"], sort=True, observed=True)["bytes"]
        .sum()
        .unstack(fill_value=0.0)
    )
    # Units with no in-window hours stay as all-zero rows (flagged downstream).
    pivot = pivot.reindex(index=all_units, fill_value=0.0)
    if apps is not None:
        pivot = pivot.reindex(columns=list(apps), fill_value=0.0)
    units = [str(u) for u in pivot.index]
    app_ids = [str(a) for a in pivot.columns]
    return UnitAppMatrix(units, app_ids, pivot.to_numpy(dtype=np.float64))


def group_profile(matrix: RscaMatrix, unit_subset: Sequence[str]) -> pd.DataFrame:
    """Per-app mean RSCA over a unit subset with a 95% t-interval.

    Returns columns app, mean, ci_half_width, n; the half-width is NaN for
    singleton subsets.
    """
    from .stats import t_ppf

    idx = [matrix.units.index(u) for u in unit_subset]
    if len(idx) == 0:
        raise ValueError("empty unit subset")
    sub = matrix.rsca[idx]
    n = len(idx)
    means = sub.mean(axis=0)
    if n >= 2:
        sd = sub.std(axis=0, ddof=1)
        half = t_ppf(0.975, n - 1) * sd / np.sqrt(n)
    else:
        half = np.full(len(matrix.apps), np.nan)
    return pd.DataFrame({"app": matrix.apps, "mean": means, "ci_half_width": half, "n": n})


def _as_long_frame(series) -> pd.DataFrame:
    if isinstance(series, pd.DataFrame):
        frame = series
        if "unit_id" not in frame.columns:
            frame = frame.rename(columns={"zone_id": "unit_id"})
        return frame
    parts = [series[k].to_frame() for k in sorted(series)]
    return pd.concat(parts, ignore_index=True)


def write_rsca(path, rows: Sequence[dict], header_line: str | None = None):
    """Emit rsca.csv (unit_id, scope, name, rca, rsca, window)."""
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["unit_id", "scope", "name", "rca", "rsca", "window"])
        for row in rows:
            writer.writerow(
                [
                    row["unit_id"],
                    row["scope"],
                    row["name"],
                    format(row["rca"], ".6g"),
                    format(row["rsca"], ".6g"),
                    row["window"],
                ]
            )
