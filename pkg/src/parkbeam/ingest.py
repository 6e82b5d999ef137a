"""Data model, file parsing and validation for all pipeline inputs.

Interchange formats are plain CSV (UTF-8, comma, '.' decimals, UTC epoch
second timestamps) and GeoJSON for zone polygons. Files written by this
package may start with '# ' provenance lines; all loaders skip them.
"""

from __future__ import annotations

import datetime
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np
import pandas as pd

from .geom import GeometryError, PlanarPoint, SectorSpec, SimplePolygon, project
from .traffic import LocalCalendar

log = logging.getLogger(__name__)

CATEGORIES = (
    "Fitness",
    "Games",
    "Music",
    "News",
    "Productivity",
    "Shopping",
    "Social",
    "Travel",
    "Video",
)

TRAFFIC_HEADER = ["antenna_id", "app_id", "timestamp", "downlink", "uplink"]
SITES_HEADER = ["site_id", "antenna_id", "lon", "lat", "azimuth_deg"]


class IngestError(ValueError):
    """Fatal input problem: bad schema, duplicate ids, invalid values."""


@dataclass(frozen=True)
class TrafficRecord:
    antenna_id: str
    app_id: str
    timestamp: int
    downlink: int
    uplink: int

    @property
    def volume(self) -> int:
        return self.downlink + self.uplink


@dataclass(frozen=True)
class AppCatalogEntry:
    app_id: str
    app_name: str
    category: str


@dataclass
class SocioRecord:
    zone_id: str
    median_income: float
    gini: float
    dist_center: float | None = None


@dataclass(frozen=True)
class EligibilityRecord:
    antenna_id: str
    date: datetime.date
    unique_users: int


@dataclass(frozen=True)
class AntennaSector:
    antenna_id: str
    azimuth_deg: float


@dataclass
class AntennaSite:
    site_id: str
    lon: float
    lat: float
    point: PlanarPoint
    sectors: list[AntennaSector]

    def sector_spec(self) -> SectorSpec:
        return SectorSpec(self.point, tuple(s.azimuth_deg for s in self.sectors))


@dataclass
class ZonePolygon:
    zone_id: str
    name: str
    polygon: SimplePolygon
    lonlat_ring: list[tuple[float, float]]


@dataclass
class LoadReport:
    n_rows: int = 0
    n_ok: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class TrafficTable:
    """Validated hourly traffic as a columnar frame plus its load report."""

    frame: pd.DataFrame
    report: LoadReport

    def __len__(self) -> int:
        return len(self.frame)

    def records(self) -> Iterator[TrafficRecord]:
        for antenna_id, app_id, ts, down, up in self.frame[TRAFFIC_HEADER].itertuples(
            index=False, name=None
        ):
            yield TrafficRecord(str(antenna_id), str(app_id), int(ts), int(down), int(up))


def _read_text_skip_comments(path) -> tuple[str, int]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    skipped = 0
    while skipped < len(lines) and lines[skipped].startswith("#"):
        skipped += 1
    return "".join(lines[skipped:]), skipped


def load_traffic(path, max_bad_fraction: float = 0.01) -> TrafficTable:
    """Load and validate the hourly traffic CSV.

    Malformed rows (bad numbers, negative volumes, unaligned timestamps)
    are reported with their 1-based line numbers and skipped; more than
    max_bad_fraction of bad rows, or a wrong header, is fatal.
    """
    text, skipped = _read_text_skip_comments(path)
    header = text.split("\n", 1)[0].strip()
    if header.split(",") != TRAFFIC_HEADER:
        raise IngestError(
            f"traffic header must be {','.join(TRAFFIC_HEADER)!r}, got {header!r}"
        )
    line_offset = skipped + 2  # 1-based, after comments and the header
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype={
                "antenna_id": str,
                "app_id": str,
                "timestamp": np.int64,
                "downlink": np.int64,
                "uplink": np.int64,
            },
            keep_default_na=False,
        )
        report = LoadReport(n_rows=len(frame))
        bad = _validate_traffic_frame(frame, report, line_offset)
    except (ValueError, TypeError):
        frame, report, bad = _load_traffic_strict(text, line_offset)
    frame = frame[~bad].reset_index(drop=True)
    report.errors.sort()
    report.n_ok = len(frame)
    _finish_report(report, max_bad_fraction, path)
    return TrafficTable(frame, report)


def _load_traffic_strict(text: str, line_offset: int):
    """Row-tolerant reload: everything as strings, coerced column by column."""
    raw = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    report = LoadReport(n_rows=len(raw))
    converted = {}
    bad = np.zeros(len(raw), dtype=bool)
    for col in ("timestamp", "downlink", "uplink"):
        values = pd.to_numeric(raw[col], errors="coerce")
        non_integer = values.notna() & (np.mod(values.fillna(0), 1) != 0)
        mask = (values.isna() | non_integer).to_numpy()
        for idx in np.where(mask & ~bad)[0]:
            report.errors.append(
                (int(idx) + line_offset, f"invalid integer in {col}: {raw[col].iat[idx]!r}")
            )
        bad |= mask
        converted[col] = values.fillna(-1).astype(np.int64)
    frame = pd.DataFrame(
        {
            "antenna_id": raw["antenna_id"],
            "app_id": raw["app_id"],
            "timestamp": converted["timestamp"],
            "downlink": converted["downlink"],
            "uplink": converted["uplink"],
        }
    )
    bad |= _validate_traffic_frame(frame, report, line_offset, skip=bad)
    return frame, report, bad


def _validate_traffic_frame(
    frame: pd.DataFrame, report: LoadReport, line_offset: int, skip: np.ndarray | None = None
) -> np.ndarray:
    bad = np.zeros(len(frame), dtype=bool) if skip is None else skip.copy()
    checks = [
        (frame["antenna_id"].astype(str).str.len() == 0, "empty antenna_id"),
        (frame["app_id"].astype(str).str.len() == 0, "empty app_id"),
        (frame["timestamp"] < 0, "negative timestamp"),
        (frame["timestamp"] % 3600 != 0, "timestamp not hour-aligned"),
        (frame["downlink"] < 0, "negative downlink"),
        (frame["uplink"] < 0, "negative uplink"),
    ]
    for mask, reason in checks:
        mask = np.asarray(mask)
        for pos in np.where(mask & ~bad)[0]:
            report.errors.append((int(pos) + line_offset, reason))
        bad |= mask
    if skip is not None:
        bad &= ~skip
    return bad


def _finish_report(report: LoadReport, max_bad_fraction: float, path):
    n_bad = len(report.errors)
    if report.n_rows > 0 and n_bad / report.n_rows > max_bad_fraction:
        sample = "; ".join(f"line {ln}: {msg}" for ln, msg in report.errors[:5])
        raise IngestError(
            f"{n_bad}/{report.n_rows} malformed rows in {path} "
            f"(limit {max_bad_fraction:.0%}): {sample}"
        )
    if n_bad:
        log.warning("%s: skipped %d malformed rows (first: line %d: %s)",
                    path, n_bad, report.errors[0][0], report.errors[0][1])


def apply_eligibility(
    traffic: TrafficTable | pd.DataFrame,
    eligibility: Mapping[tuple[str, datetime.date], int] | None,
    min_users: int = 10,
    calendar: LocalCalendar | None = None,
) -> pd.DataFrame:
    """Drop rows whose (antenna, local day) served fewer than min_users.

    Without an eligibility table this is a pass-through. Days default to
    UTC when no calendar is given.
    """
    frame = traffic.frame if isinstance(traffic, TrafficTable) else traffic
    if eligibility is None or len(eligibility) == 0:
        return frame
    calendar = calendar or LocalCalendar.utc()
    epoch = datetime.date(1970, 1, 1)
    blocked: dict[str, set[int]] = {}
    for (antenna, date), users in eligibility.items():
        if users < min_users:
            blocked.setdefault(antenna, set()).add((date - epoch).days)
    if not blocked:
        return frame
    # Only rows of blocked antennas need a day-level membership check.
    antennas = frame["antenna_id"].to_numpy()
    candidate = frame["antenna_id"].isin(blocked).to_numpy()
    mask = np.zeros(len(frame), dtype=bool)
    if candidate.any():
        idx = np.where(candidate)[0]
        days = calendar.local_day_index(frame["timestamp"].to_numpy(dtype=np.int64)[idx])
        mask[idx] = [int(d) in blocked[str(a)] for a, d in zip(antennas[idx], days)]
    if mask.any():
        n_days = sum(len(v) for v in blocked.values())
        log.info("eligibility filter removed %d rows over %d antenna-days", int(mask.sum()), n_days)
    return frame[~mask].reset_index(drop=True)


def load_eligibility(path) -> dict[tuple[str, datetime.date], int]:
    text, _ = _read_text_skip_comments(path)
    frame = pd.read_csv(io.StringIO(text), dtype={"antenna_id": str, "date": str}, keep_default_na=False)
    if list(frame.columns) != ["antenna_id", "date", "unique_users"]:
        raise IngestError("eligibility header must be 'antenna_id,date,unique_users'")
    out: dict[tuple[str, datetime.date], int] = {}
    for antenna_id, date_s, users in frame.itertuples(index=False, name=None):
        users = int(users)
        if users < 0:
            raise IngestError(f"negative unique_users for {antenna_id} on {date_s}")
        key = (str(antenna_id), datetime.date.fromisoformat(date_s))
        if key in out:
            raise IngestError(f"duplicate eligibility row for {key}")
        out[key] = users
    return out


def infer_origin(zones_path) -> tuple[float, float]:
    """Midpoint of the zone file's lon/lat bounding box (fallback origin)."""
    with open(zones_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    lons, lats = [], []
    for feature in doc.get("features", []):
        for ring in feature["geometry"]["coordinates"]:
            for lon, lat in ring:
                lons.append(lon)
                lats.append(lat)
    if not lons:
        raise IngestError(f"no coordinates found in {zones_path}")
    return (min(lons) + max(lons)) / 2.0, (min(lats) + max(lats)) / 2.0


def load_zones(path, origin: tuple[float, float]) -> list[ZonePolygon]:
    """Load zone polygons from a GeoJSON FeatureCollection and project them.

    Polygon features only; rings with holes are rejected, as are duplicate
    zone ids.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise IngestError("zones file must be a GeoJSON FeatureCollection")
    zones: list[ZonePolygon] = []
    seen: set[str] = set()
    for i, feature in enumerate(doc.get("features", [])):
        geometry = feature.get("geometry") or {}
        if geometry.get("type") != "Polygon":
            raise IngestError(f"feature {i}: only Polygon geometries are supported")
        rings = geometry.get("coordinates") or []
        if len(rings) != 1:
            raise IngestError(f"feature {i}: polygons with holes are not supported")
        props = feature.get("properties") or {}
        zone_id = props.get("zone_id")
        if not zone_id:
            raise IngestError(f"feature {i}: missing properties.zone_id")
        zone_id = str(zone_id)
        if zone_id in seen:
            raise IngestError(f"duplicate zone_id {zone_id!r}")
        seen.add(zone_id)
        ring = [(float(lon), float(lat)) for lon, lat in rings[0]]
        try:
            poly = SimplePolygon.from_points([project(lon, lat, origin) for lon, lat in ring])
        except GeometryError as exc:
            raise IngestError(f"zone {zone_id}: {exc}") from exc
        zones.append(ZonePolygon(zone_id, str(props.get("name", zone_id)), poly, ring))
    return zones


def load_sites(path, origin: tuple[float, float]) -> list[AntennaSite]:
    """Load antenna sites; one row per antenna, grouped by site."""
    text, _ = _read_text_skip_comments(path)
    frame = pd.read_csv(
        io.StringIO(text),
        dtype={"site_id": str, "antenna_id": str},
        keep_default_na=False,
        float_precision="round_trip",
    )
    if list(frame.columns) != SITES_HEADER:
        raise IngestError(f"sites header must be {','.join(SITES_HEADER)!r}")
    sites: dict[str, AntennaSite] = {}
    seen_antennas: set[str] = set()
    for site_id, antenna_id, lon, lat, azimuth in frame.itertuples(index=False, name=None):
        site_id, antenna_id = str(site_id), str(antenna_id)
        lon, lat, azimuth = float(lon), float(lat), float(azimuth)
        if antenna_id in seen_antennas:
            raise IngestError(f"duplicate antenna_id {antenna_id!r}")
        seen_antennas.add(antenna_id)
        if not 0.0 <= azimuth < 360.0:
            raise IngestError(f"antenna {antenna_id}: azimuth must be in [0, 360), got {azimuth}")
        if site_id in sites:
            site = sites[site_id]
            if abs(site.lon - lon) > 1e-9 or abs(site.lat - lat) > 1e-9:
                raise IngestError(f"site {site_id}: inconsistent coordinates across antennas")
            if any(abs(s.azimuth_deg - azimuth) < 1e-9 for s in site.sectors):
                raise IngestError(f"site {site_id}: duplicate azimuth {azimuth}")
            site.sectors.append(AntennaSector(antenna_id, azimuth))
        else:
            try:
                point = project(lon, lat, origin)
            except GeometryError as exc:
                raise IngestError(f"site {site_id}: {exc}") from exc
            sites[site_id] = AntennaSite(site_id, lon, lat, point, [AntennaSector(antenna_id, azimuth)])
    for site in sites.values():
        site.sectors.sort(key=lambda s: s.azimuth_deg)
    return [sites[k] for k in sorted(sites)]


def load_catalog(path) -> dict[str, AppCatalogEntry]:
    """App catalog keyed by app_id; categories must come from the closed set."""
    text, _ = _read_text_skip_comments(path)
    frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    if list(frame.columns) != ["app_id", "app_name", "category"]:
        raise IngestError("catalog header must be 'app_id,app_name,category'")
    catalog: dict[str, AppCatalogEntry] = {}
    for app_id, app_name, category in frame.itertuples(index=False, name=None):
        if category not in CATEGORIES:
            raise IngestError(
                f"app {app_id}: unknown category {category!r}; must be one of {', '.join(CATEGORIES)}"
            )
        if app_id in catalog:
            raise IngestError(f"duplicate app_id {app_id!r}")
        catalog[app_id] = AppCatalogEntry(app_id, app_name, category)
    return catalog


def load_socio(path) -> dict[str, SocioRecord]:
    text, _ = _read_text_skip_comments(path)
    frame = pd.read_csv(
        io.StringIO(text), dtype={"zone_id": str}, keep_default_na=False, float_precision="round_trip"
    )
    cols = list(frame.columns)
    if cols not in (["zone_id", "median_income", "gini"], ["zone_id", "median_income", "gini", "dist_center"]):
        raise IngestError("socio header must be 'zone_id,median_income,gini[,dist_center]'")
    has_dist = "dist_center" in cols
    out: dict[str, SocioRecord] = {}
    for row in frame.itertuples(index=False, name=None):
        zone_id = str(row[0])
        income, gini = float(row[1]), float(row[2])
        if zone_id in out:
            raise IngestError(f"duplicate socio row for zone {zone_id!r}")
        if income <= 0 or not math.isfinite(income):
            raise IngestError(f"zone {zone_id}: median_income must be positive")
        if not 0.0 <= gini <= 1.0:
            raise IngestError(f"zone {zone_id}: gini must be in [0, 1]")
        dist = float(row[3]) if has_dist and str(row[3]) != "" else None
        out[zone_id] = SocioRecord(zone_id, income, gini, dist)
    return out


def fill_distances(socio: dict[str, SocioRecord], zones: Mapping[str, SimplePolygon]):
    """Compute dist_center (zone centroid to projection origin) where absent."""
    origin = PlanarPoint(0.0, 0.0)
    for record in socio.values():
        if record.dist_center is None and record.zone_id in zones:
            record.dist_center = zones[record.zone_id].centroid().distance_to(origin)
    return socio


def load_tags(path) -> dict[tuple[str, str], int]:
    text, _ = _read_text_skip_comments(path)
    frame = pd.read_csv(io.StringIO(text), dtype={"zone_id": str, "tag": str}, keep_default_na=False)
    if list(frame.columns) != ["zone_id", "tag", "count"]:
        raise IngestError("tags header must be 'zone_id,tag,count'")
    out: dict[tuple[str, str], int] = {}
    for zone_id, tag, count in frame.itertuples(index=False, name=None):
        count = int(count)
        if count < 1:
            raise IngestError(f"tag count must be >= 1 for ({zone_id}, {tag})")
        key = (str(zone_id), str(tag))
        if key in out:
            raise IngestError(f"duplicate tag row for {key}")
        out[key] = count
    return out


def load_calendar(path) -> LocalCalendar:
    text, _ = _read_text_skip_comments(path)
    frame = pd.read_csv(io.StringIO(text))
    if list(frame.columns) != ["from_epoch", "utc_offset_min"]:
        raise IngestError("calendar header must be 'from_epoch,utc_offset_min'")
    rules = tuple((int(a), int(b)) for a, b in frame.itertuples(index=False, name=None))
    try:
        return LocalCalendar(rules)
    except ValueError as exc:
        raise IngestError(str(exc)) from exc
