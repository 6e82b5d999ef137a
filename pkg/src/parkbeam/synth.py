"""Deterministic synthetic scenarios with planted ground truth.

Generates the full input-file set (sites, zones, traffic, catalog,
calendar, eligibility, socio, tags) plus a ground-truth table recording
each zone's archetype, planted selection verdict, and weekday multiplier.
Zone rectangles are constructed against the realized sector-Voronoi
geometry so the selection stage labels are planted exactly, and every
random draw comes from a per-entity seeded stream, so identical configs
produce byte-identical files.
"""

from __future__ import annotations

import datetime
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from . import coverage
from .coverage import CoverageReport, SelectionThresholds
from .geom import PlanarPoint, SimplePolygon, unproject
from .ingest import CATEGORIES, AntennaSector, AntennaSite
from .traffic import LocalCalendar
from .cluster import adjusted_rand

log = logging.getLogger(__name__)

# Hourly shape: night trough, midday and evening peaks.
DIURNAL = np.array(
    [0.25, 0.20, 0.17, 0.15, 0.16, 0.22, 0.35, 0.55, 0.75, 0.85, 0.92, 1.00,
     1.05, 1.00, 0.92, 0.88, 0.90, 0.98, 1.08, 1.12, 1.05, 0.85, 0.60, 0.38]
)

# 41 apps over the nine canonical categories.
APP_CATEGORY_PLAN = (
    ("Fitness", 1),
    ("Games", 2),
    ("Music", 4),
    ("News", 6),
    ("Productivity", 6),
    ("Shopping", 1),
    ("Social", 9),
    ("Travel", 4),
    ("Video", 8),
)

COMMON_TAGS = ("tree", "nature", "garden", "sky", "green", "walk", "bench", "path")
STOPWORD_TAGS = ("the", "and", "le", "la")
LANDMARK_TAG = "grandtower"

FAILURE_VERDICTS = (
    coverage.VERDICT_NO_ANTENNA,
    coverage.VERDICT_LOW_ILLUMINATION,
    coverage.VERDICT_LOW_QUALITY,
)


@dataclass(frozen=True)
class Archetype:
    name: str
    category_weights: Mapping[str, float]
    wd_we_multiplier: float
    base_volume: float
    income_mu: float
    gini_mu: float
    tag_vocab: tuple[str, ...]

    def __post_init__(self):
        if set(self.category_weights) != set(CATEGORIES):
            raise ValueError(f"archetype {self.name}: weights must cover all 9 categories")
        if any(w <= 0 for w in self.category_weights.values()):
            raise ValueError(f"archetype {self.name}: weights must be positive")
        if self.wd_we_multiplier <= 0 or self.base_volume <= 0:
            raise ValueError(f"archetype {self.name}: multiplier and volume must be positive")


def _weights(**kv) -> dict[str, float]:
    w = {c: 1.0 for c in CATEGORIES}
    w.update(kv)
    return w


def default_archetypes() -> list[Archetype]:
    return [
        Archetype(
            "steady",
            _weights(Music=2.6, Social=2.0, Video=1.3, Games=0.5, Productivity=0.6, Fitness=0.4),
            1.07,
            4.0e7,
            38000.0,
            0.48,
            ("sculpture", "festival", "concert", "museum"),
        ),
        Archetype(
            "workday",
            _weights(Productivity=3.0, Social=1.6, Music=1.4, Games=0.4, Fitness=0.4, Travel=0.6),
            1.58,
            6.0e7,
            46000.0,
            0.53,
            ("architecture", "office", "lunch", "fountain"),
        ),
        Archetype(
            "weekend",
            _weights(Fitness=3.2, News=1.8, Travel=1.8, Video=1.2, Social=0.5, Music=0.5, Games=0.8),
            0.82,
            2.5e7,
            27000.0,
            0.36,
            ("forest", "picnic", "lake", "trail"),
        ),
    ]


CITY_PROFILE = {
    "category_weights": _weights(Social=1.9, Video=1.6, Games=1.3, Music=1.1),
    "wd_we_multiplier": 1.19,
    "base_volume": 5.0e7,
}


@dataclass
class ScenarioConfig:
    seed: int = 1025
    n_sites: int = 40
    antennas_per_site: Mapping[int, float] = field(
        default_factory=lambda: {1: 0.1, 2: 0.3, 3: 0.6}
    )
    n_zones: int = 50
    archetypes: list[Archetype] = field(default_factory=default_archetypes)
    span_days: int = 28
    bbox_extent_m: float = 12000.0
    noise_sigma: float = 0.3
    start_epoch: int = 1682899200  # 2023-05-01 00:00 UTC, a Monday
    utc_offset_min: int = 120
    planted_failures: Mapping[str, int] = field(
        default_factory=lambda: {
            coverage.VERDICT_NO_ANTENNA: 2,
            coverage.VERDICT_LOW_ILLUMINATION: 2,
            coverage.VERDICT_LOW_QUALITY: 1,
        }
    )
    n_ineligible_antenna_days: int = 3
    min_users: int = 10
    thresholds: SelectionThresholds = field(default_factory=SelectionThresholds)
    origin: tuple[float, float] = (2.35, 48.85)

    def __post_init__(self):
        if self.span_days < 14:
            raise ValueError("study span must cover at least two full weeks")
        if abs(sum(self.antennas_per_site.values()) - 1.0) > 1e-9:
            raise ValueError("antennas_per_site probabilities must sum to 1")
        unknown = set(self.planted_failures) - set(FAILURE_VERDICTS)
        if unknown:
            raise ValueError(f"unknown planted verdicts: {unknown}")
        n_failures = sum(self.planted_failures.values())
        if self.n_zones - n_failures < len(self.archetypes):
            raise ValueError("not enough selected zones to cover every archetype")
        if not self.archetypes:
            raise ValueError("at least one archetype required")

    @property
    def n_selected(self) -> int:
        return self.n_zones - sum(self.planted_failures.values())

    def calendar(self) -> LocalCalendar:
        return LocalCalendar.fixed(self.utc_offset_min, self.start_epoch - 14 * 86400)


@dataclass
class GroundTruthRow:
    zone_id: str
    archetype: str
    planted_verdict: str
    wd_we_multiplier: float
    n_antennas: int


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, stream))))


def _poisson_disk_sites(
    config: ScenarioConfig, rng: np.random.Generator, max_attempts_per_site: int = 20000
) -> list[PlanarPoint]:
    extent = config.bbox_extent_m
    margin = 0.06 * extent
    min_dist = 0.55 * extent / np.sqrt(config.n_sites)
    points: list[tuple[float, float]] = []
    attempts = 0
    max_attempts = max_attempts_per_site * config.n_sites
    while len(points) < config.n_sites:
        attempts += 1
        if attempts > max_attempts:
            raise ValueError(
                f"infeasible site packing: placed {len(points)}/{config.n_sites} sites "
                f"with min spacing {min_dist:.0f} m in a {extent:.0f} m box"
            )
        x = rng.uniform(margin, extent - margin)
        y = rng.uniform(margin, extent - margin)
        if all((x - px) ** 2 + (y - py) ** 2 >= min_dist * min_dist for px, py in points):
            points.append((x, y))
    return [PlanarPoint(x, y) for x, y in points]


def _make_sites(config: ScenarioConfig, rng: np.random.Generator) -> list[AntennaSite]:
    points = _poisson_disk_sites(config, rng)
    counts = sorted(config.antennas_per_site)
    probs = [config.antennas_per_site[c] for c in counts]
    sites = []
    for i, point in enumerate(points):
        n_ant = int(rng.choice(counts, p=probs))
        base = rng.uniform(0.0, 360.0)
        azimuths = sorted((base + k * 360.0 / n_ant) % 360.0 for k in range(n_ant))
        site_id = f"s{i:03d}"
        lon, lat = unproject(point, config.origin)
        sectors = [AntennaSector(f"{site_id}a{k}", az) for k, az in enumerate(azimuths)]
        sites.append(AntennaSite(site_id, lon, lat, point, sectors))
    return sites


def _rect(cx: float, cy: float, w: float, h: float) -> SimplePolygon:
    return SimplePolygon.from_points(
        [(cx - w / 2, cy - h / 2), (cx + w / 2, cy - h / 2), (cx + w / 2, cy + h / 2), (cx - w / 2, cy + h / 2)]
    )


def _rects_overlap(a: SimplePolygon, b: SimplePolygon) -> bool:
    ax0, ay0, ax1, ay1 = a.bounds()
    bx0, by0, bx1, by1 = b.bounds()
    return not (ax1 <= bx0 or bx1 <= ax0 or ay1 <= by0 or by1 <= ay0)


def _candidate_rects(verdict: str, anchor: SimplePolygon, aspect: float):
    c = anchor.centroid()
    area = anchor.area()
    if verdict == coverage.VERDICT_SELECTED:
        # Mostly single-wedge zones (cp ~ scale, ip ~ 1) with occasional
        # larger multi-antenna variants when the local geometry allows.
        scales = (0.55, 0.42, 1.2, 0.7, 0.3, 1.6)
    elif verdict == coverage.VERDICT_NO_ANTENNA:
        scales = (0.03, 0.05, 0.02)
    elif verdict == coverage.VERDICT_LOW_QUALITY:
        # Inside one wedge: ip = 1 but cp below gamma/(2-gamma).
        scales = (0.16, 0.13, 0.19, 0.11)
    else:  # low-illumination: cover the anchor fully, spill into neighbors
        for s in (2.4, 2.0, 3.0, 3.6):
            target = s * area
            w = np.sqrt(target * aspect)
            h = target / w
            # Offset variants steer the spill toward different neighbors.
            for dx, dy in ((0, 0), (0.2 * w, 0), (-0.2 * w, 0), (0, 0.2 * h), (0, -0.2 * h)):
                yield _rect(c.x + dx, c.y + dy, w, h)
        return
    for s in scales:
        target = s * area
        w = np.sqrt(target * aspect)
        h = target / w
        yield _rect(c.x, c.y, w, h)


def _plant_zones(
    config: ScenarioConfig,
    antenna_polys: dict[str, SimplePolygon],
    bbox: SimplePolygon,
) -> list[tuple[str, SimplePolygon, frozenset[str]]]:
    """Place one rectangle per zone achieving its planted verdict.

    Works against the realized sector geometry: each candidate is scored
    with the actual selection pipeline and accepted only when the verdict
    matches, its selected antennas are unclaimed, and it does not touch
    previously placed rectangles.
    """
    by_area_desc = sorted(antenna_polys, key=lambda a: (-antenna_polys[a].area(), a))
    by_area_asc = list(reversed(by_area_desc))

    targets: list[str] = []
    for verdict in FAILURE_VERDICTS:
        targets += [verdict] * config.planted_failures.get(verdict, 0)
    targets += [coverage.VERDICT_SELECTED] * config.n_selected

    x0, y0, x1, y1 = bbox.bounds()
    claimed: set[str] = set()
    placed: list[tuple[str, SimplePolygon, frozenset[str]]] = []
    for zone_index, verdict in enumerate(targets):
        anchors = by_area_asc if verdict == coverage.VERDICT_LOW_ILLUMINATION else by_area_desc
        accepted = None
        for anchor_id in anchors:
            if accepted:
                break
            if anchor_id in claimed:
                continue
            for aspect in (1.0, 1.5, 0.667):
                if accepted:
                    break
                for rect in _candidate_rects(verdict, antenna_polys[anchor_id], aspect):
                    rx0, ry0, rx1, ry1 = rect.bounds()
                    if rx0 < x0 + 1 or ry0 < y0 + 1 or rx1 > x1 - 1 or ry1 > y1 - 1:
                        continue
                    if any(_rects_overlap(rect, r) for _, r, _ in placed):
                        continue
                    report = coverage.run_selection(
                        {"candidate": rect}, antenna_polys, config.thresholds
                    )[0]
                    v_sel = {a for a, _ in report.selected}
                    if report.verdict != verdict or v_sel & claimed:
                        continue
                    accepted = (verdict, rect, frozenset(v_sel))
                    break
        if not accepted:
            raise ValueError(
                f"could not plant zone {zone_index} with verdict {verdict!r}; "
                "try a larger bbox or fewer zones"
            )
        claimed |= accepted[2]
        placed.append(accepted)
    return placed


def build_app_catalog(rng: np.random.Generator) -> tuple[list[str], dict[str, str], np.ndarray]:
    """App ids, app->category map, and within-category share vector."""
    app_ids: list[str] = []
    app_category: dict[str, str] = {}
    shares = []
    idx = 1
    for category, count in APP_CATEGORY_PLAN:
        raw = rng.gamma(2.0, 1.0, count)
        raw = raw / raw.sum()
        for k in range(count):
            app_id = f"app_{idx:02d}"
            app_ids.append(app_id)
            app_category[app_id] = category
            shares.append(raw[k])
            idx += 1
    return app_ids, app_category, np.array(shares)


def _app_weight_vector(category_weights, app_ids, app_category, within_share) -> np.ndarray:
    cat_total = sum(category_weights[c] for c in CATEGORIES)
    w = np.array(
        [category_weights[app_category[a]] / cat_total * s for a, s in zip(app_ids, within_share)]
    )
    return w / w.sum()


def generate(config: ScenarioConfig, out_dir) -> dict:
    """Generate all scenario files into out_dir; returns bookkeeping."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng_place = _rng(config.seed, 0)
    rng_profiles = _rng(config.seed, 1)
    rng_socio = _rng(config.seed, 2)
    rng_tags = _rng(config.seed, 3)
    rng_elig = _rng(config.seed, 4)

    extent = config.bbox_extent_m
    bbox = _rect(extent / 2, extent / 2, extent, extent)
    sites = _make_sites(config, rng_place)
    antenna_polys = coverage.antenna_polygons(sites, bbox, by_sector=True)
    placed = _plant_zones(config, antenna_polys, bbox)

    # Shuffled zone ids so verdicts are not position-coded in the id.
    perm = rng_place.permutation(len(placed))
    zone_ids = [f"z{int(j):03d}" for j in perm]

    archetypes = config.archetypes
    rows: list[GroundTruthRow] = []
    zone_polys: dict[str, SimplePolygon] = {}
    zone_claims: dict[str, frozenset[str]] = {}
    arch_cycle = 0
    for (verdict, rect, claims), zone_id in zip(placed, zone_ids):
        arch = archetypes[arch_cycle % len(archetypes)]
        arch_cycle += 1
        rows.append(
            GroundTruthRow(zone_id, arch.name, verdict, arch.wd_we_multiplier, len(claims))
        )
        zone_polys[zone_id] = rect
        zone_claims[zone_id] = claims
    rows.sort(key=lambda r: r.zone_id)
    by_zone = {r.zone_id: r for r in rows}

    # Per-antenna generative profile: archetype of the claiming zone or city.
    # Antennas sharing a profile emit identical hourly templates, so at
    # sigma=0 same-archetype zones have bit-equal app shares.
    arch_by_name = {a.name: a for a in archetypes}
    antenna_profile: dict[str, dict] = {}
    for zone_id in sorted(zone_claims):
        arch = arch_by_name[by_zone[zone_id].archetype]
        profile = {
            "category_weights": arch.category_weights,
            "wd_we_multiplier": arch.wd_we_multiplier,
            "base_volume": arch.base_volume,
        }
        for antenna_id in sorted(zone_claims[zone_id]):
            antenna_profile[antenna_id] = profile
    city_antennas = [a for a in sorted(antenna_polys) if a not in antenna_profile]
    for antenna_id in city_antennas:
        antenna_profile[antenna_id] = CITY_PROFILE

    app_ids, app_category, within_share = build_app_catalog(rng_profiles)
    calendar = config.calendar()

    n_hours = 24 * config.span_days
    hours = config.start_epoch + 3600 * np.arange(n_hours, dtype=np.int64)
    local_hour = calendar.local_hour(hours)
    day_index = calendar.local_day_index(hours)
    weekday_mask = (day_index + 3) % 7 < 5
    diurnal = DIURNAL[local_hour]

    antenna_order = sorted(antenna_polys)
    frames = []
    for a_idx, antenna_id in enumerate(antenna_order):
        profile = antenna_profile[antenna_id]
        w_app = _app_weight_vector(profile["category_weights"], app_ids, app_category, within_share)
        hour_factor = diurnal * np.where(weekday_mask, profile["wd_we_multiplier"], 1.0)
        volume = profile["base_volume"] * np.outer(hour_factor, w_app)
        if config.noise_sigma > 0:
            noise_rng = _rng(config.seed, 100 + a_idx)
            volume = volume * np.exp(
                config.noise_sigma * noise_rng.standard_normal((n_hours, len(app_ids)))
            )
        total = np.rint(volume).astype(np.int64)
        downlink = (total * 4) // 5
        uplink = total - downlink
        frames.append(
            pd.DataFrame(
                {
                    "antenna_id": antenna_id,
                    "app_id": np.tile(app_ids, n_hours),
                    "timestamp": np.repeat(hours, len(app_ids)),
                    "downlink": downlink.ravel(),
                    "uplink": uplink.ravel(),
                }
            )
        )
    traffic = pd.concat(frames, ignore_index=True)

    # Eligibility: plant ineligible antenna-days on city antennas only so
    # zone-level metrics stay exactly recoverable.
    all_days = np.unique(day_index)
    interior_days = all_days[1:-1] if len(all_days) > 2 else all_days
    epoch = datetime.date(1970, 1, 1)
    elig_rows = []
    planted_ineligible = []
    n_plant = min(
        config.n_ineligible_antenna_days, len(city_antennas) * max(len(interior_days), 1)
    )
    plant_keys = set()
    if n_plant > 0 and len(city_antennas) > 0:
        choices = rng_elig.choice(len(city_antennas) * len(interior_days), n_plant, replace=False)
        for flat in sorted(int(c) for c in choices):
            antenna_id = city_antennas[flat // len(interior_days)]
            day = int(interior_days[flat % len(interior_days)])
            plant_keys.add((antenna_id, day))
    for antenna_id in antenna_order:
        users = rng_elig.integers(12, 400, size=len(all_days))
        for day, u in zip(all_days, users):
            key = (antenna_id, int(day))
            if key in plant_keys:
                u = int(rng_elig.integers(0, config.min_users))
                planted_ineligible.append(
                    {"antenna_id": antenna_id, "date": (epoch + datetime.timedelta(days=int(day))).isoformat()}
                )
            elig_rows.append((antenna_id, (epoch + datetime.timedelta(days=int(day))).isoformat(), int(u)))

    socio_rows = []
    for row in rows:
        arch = arch_by_name[row.archetype]
        income = float(arch.income_mu * rng_socio.lognormal(0.0, 0.12))
        gini = float(np.clip(rng_socio.normal(arch.gini_mu, 0.04), 0.05, 0.95))
        socio_rows.append((row.zone_id, round(income, 2), round(gini, 4)))

    tag_counts = _make_tags(config, rows, arch_by_name, rng_tags)

    header = f"# parkbeam synthetic scenario seed={config.seed}"
    paths = _write_files(
        out, config, sites, rows, zone_polys, traffic, elig_rows, socio_rows, tag_counts, header
    )

    _verify_planted(config, out, paths, rows)

    bookkeeping = {
        "n_traffic_rows": int(len(traffic)),
        "n_antennas": len(antenna_order),
        "n_sites": len(sites),
        "n_zones": len(rows),
        "n_selected": config.n_selected,
        "planted_ineligible": planted_ineligible,
        "n_apps": len(app_ids),
        "files": sorted(p.name for p in paths.values()),
    }
    with open(out / "bookkeeping.json", "w") as fh:
        json.dump(bookkeeping, fh, indent=2, sort_keys=True)
    return bookkeeping


def _make_tags(config, rows, arch_by_name, rng
               ) -> list[tuple[str, str, int]]:
    selected = [r for r in rows if r.planted_verdict == coverage.VERDICT_SELECTED]
    landmark_zones = {r.zone_id for r in selected if r.archetype == config.archetypes[0].name}
    landmark_zones = set(sorted(landmark_zones)[:2])
    out = []
    for row in selected:
        vocab = arch_by_name[row.archetype].tag_vocab
        weights: list[tuple[str, float]] = [(t, 1.0) for t in COMMON_TAGS]
        weights += [(t, 3.0) for t in vocab]
        weights += [(f"name{row.zone_id}", 2.0)]
        if row.zone_id in landmark_zones:
            weights += [(LANDMARK_TAG, 4.0)]
        weights += [(t, 1.0) for t in STOPWORD_TAGS]
        total_w = sum(w for _, w in weights)
        n_target = int(rng.integers(300, 600))
        for tag, w in weights:
            count = int(rng.poisson(w * n_target / total_w))
            if tag.startswith("name") or tag == LANDMARK_TAG:
                count = max(count, 3)
            if count >= 1:
                out.append((row.zone_id, tag, count))
    return out


def _write_files(out, config, sites, rows, zone_polys, traffic, elig_rows, socio_rows, tag_counts, header):
    from .traffic import write_calendar

    paths = {}

    paths["sites"] = out / "sites.csv"
    with open(paths["sites"], "w") as fh:
        fh.write(header + "\n")
        fh.write("site_id,antenna_id,lon,lat,azimuth_deg\n")
        for site in sites:
            for sector in site.sectors:
                fh.write(f"{site.site_id},{sector.antenna_id},{site.lon!r},{site.lat!r},{sector.azimuth_deg!r}\n")

    paths["zones"] = out / "zones.geojson"
    features = []
    for row in rows:
        ring = [unproject(p, config.origin) for p in zone_polys[row.zone_id].vertices]
        ring.append(ring[0])
        features.append(
            {
                "type": "Feature",
                "properties": {"zone_id": row.zone_id, "name": f"Zone {row.zone_id}"},
                "geometry": {"type": "Polygon", "coordinates": [[[lon, lat] for lon, lat in ring]]},
            }
        )
    doc = {
        "type": "FeatureCollection",
        "parkbeam": {"seed": config.seed},
        "features": features,
    }
    with open(paths["zones"], "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")

    paths["traffic"] = out / "traffic.csv"
    with open(paths["traffic"], "w") as fh:
        fh.write(header + "\n")
        traffic.to_csv(fh, index=False, lineterminator="\n")

    paths["catalog"] = out / "catalog.csv"
    with open(paths["catalog"], "w") as fh:
        fh.write(header + "\n")
        fh.write("app_id,app_name,category\n")
        idx = 1
        for category, count in APP_CATEGORY_PLAN:
            for _ in range(count):
                fh.write(f"app_{idx:02d},App {idx:02d},{category}\n")
                idx += 1

    paths["calendar"] = out / "calendar.csv"
    write_calendar(paths["calendar"], config.calendar(), header_line=header)

    paths["eligibility"] = out / "eligibility.csv"
    with open(paths["eligibility"], "w") as fh:
        fh.write(header + "\n")
        fh.write("antenna_id,date,unique_users\n")
        for antenna_id, date, users in elig_rows:
            fh.write(f"{antenna_id},{date},{users}\n")

    paths["socio"] = out / "socio.csv"
    with open(paths["socio"], "w") as fh:
        fh.write(header + "\n")
        fh.write("zone_id,median_income,gini\n")
        for zone_id, income, gini in socio_rows:
            fh.write(f"{zone_id},{income},{gini}\n")

    paths["tags"] = out / "tags.csv"
    with open(paths["tags"], "w") as fh:
        fh.write(header + "\n")
        fh.write("zone_id,tag,count\n")
        for zone_id, tag, count in tag_counts:
            fh.write(f"{zone_id},{tag},{count}\n")

    paths["ground_truth"] = out / "ground_truth.csv"
    with open(paths["ground_truth"], "w") as fh:
        fh.write(header + "\n")
        fh.write("zone_id,archetype,planted_verdict,wd_we_multiplier,n_antennas\n")
        for r in rows:
            fh.write(
                f"{r.zone_id},{r.archetype},{r.planted_verdict},"
                f"{r.wd_we_multiplier!r},{r.n_antennas}\n"
            )

    paths["config"] = out / "scenario.toml"
    t = config.thresholds
    lines = [
        "# parkbeam pipeline config (generated with the scenario)",
        "[paths]",
        'sites = "sites.csv"',
        'zones = "zones.geojson"',
        'traffic = "traffic.csv"',
        'catalog = "catalog.csv"',
        'calendar = "calendar.csv"',
        'eligibility = "eligibility.csv"',
        'socio = "socio.csv"',
        'tags = "tags.csv"',
        'ground_truth = "ground_truth.csv"',
        'output_dir = "out"',
        "",
        "[study]",
        f"origin_lon = {config.origin[0]!r}",
        f"origin_lat = {config.origin[1]!r}",
        f"bbox = [0.0, 0.0, {config.bbox_extent_m!r}, {config.bbox_extent_m!r}]",
        "",
        "[selection]",
        f"alpha = {t.alpha!r}",
        f"beta = {t.beta!r}",
        f"gamma = {t.gamma!r}",
        "",
        "[traffic]",
        f"min_users = {config.min_users}",
        "",
        "[cluster]",
        "k_range = [2, 8]",
        f"seed = {config.seed}",
        "",
        "[run]",
        "threads = 1",
        "",
    ]
    with open(paths["config"], "w") as fh:
        fh.write("\n".join(lines))
    return paths


def _verify_planted(config, out, paths, rows):
    """Re-run selection from the written files; planted verdicts must hold."""
    from . import ingest

    sites = ingest.load_sites(paths["sites"], config.origin)
    zones = ingest.load_zones(paths["zones"], config.origin)
    extent = config.bbox_extent_m
    bbox = _rect(extent / 2, extent / 2, extent, extent)
    polys = coverage.antenna_polygons(sites, bbox, by_sector=True)
    reports = coverage.run_selection({z.zone_id: z.polygon for z in zones}, polys, config.thresholds)
    realized = {r.zone_id: r.verdict for r in reports}
    mismatch = [
        (r.zone_id, r.planted_verdict, realized[r.zone_id])
        for r in rows
        if realized[r.zone_id] != r.planted_verdict
    ]
    if mismatch:
        raise RuntimeError(f"planted verdicts drifted after file round-trip: {mismatch[:3]}")


def scenario_geometry(config: ScenarioConfig) -> tuple[list[AntennaSite], SimplePolygon]:
    """Sites and bbox only (no zones or traffic), for geometry experiments."""
    sites = _make_sites(config, _rng(config.seed, 0))
    extent = config.bbox_extent_m
    return sites, _rect(extent / 2, extent / 2, extent, extent)


def config_from_dict(doc: Mapping) -> ScenarioConfig:
    """Build a ScenarioConfig from a TOML [synth] table."""
    kwargs: dict = {}
    for key in (
        "seed",
        "n_sites",
        "n_zones",
        "span_days",
        "noise_sigma",
        "bbox_extent_m",
        "start_epoch",
        "utc_offset_min",
        "n_ineligible_antenna_days",
        "min_users",
    ):
        if key in doc:
            kwargs[key] = doc[key]
    if "antennas_per_site" in doc:
        kwargs["antennas_per_site"] = {int(k): float(v) for k, v in doc["antennas_per_site"].items()}
    if "planted_failures" in doc:
        kwargs["planted_failures"] = {str(k): int(v) for k, v in doc["planted_failures"].items()}
    if "archetypes" in doc:
        by_name = {a.name: a for a in default_archetypes()}
        try:
            kwargs["archetypes"] = [by_name[name] for name in doc["archetypes"]]
        except KeyError as exc:
            raise ValueError(f"unknown archetype {exc}; available: {sorted(by_name)}")
    if "origin_lon" in doc and "origin_lat" in doc:
        kwargs["origin"] = (float(doc["origin_lon"]), float(doc["origin_lat"]))
    return ScenarioConfig(**kwargs)


def load_ground_truth(path) -> list[GroundTruthRow]:
    from .ingest import _read_text_skip_comments
    import io

    text, _ = _read_text_skip_comments(path)
    frame = pd.read_csv(io.StringIO(text), dtype={"zone_id": str})
    return [
        GroundTruthRow(
            str(r.zone_id),
            str(r.archetype),
            str(r.planted_verdict),
            float(r.wd_we_multiplier),
            int(r.n_antennas),
        )
        for r in frame.itertuples(index=False)
    ]


@dataclass
class RecoveryReport:
    verdict_confusion: dict[tuple[str, str], int]
    verdicts_exact: bool
    ari: float | None
    ratio_max_rel_err: float | None
    ratio_mean_rel_err: float | None
    n_zones: int


def evaluate_recovery(
    reports: Sequence[CoverageReport],
    ground_truth: Sequence[GroundTruthRow],
    cluster_labels: Mapping[str, int] | None = None,
    ratios: Mapping[str, float] | None = None,
) -> RecoveryReport:
    """Score the pipeline output against the planted ground truth."""
    realized = {r.zone_id: r.verdict for r in reports}
    missing = [g.zone_id for g in ground_truth if g.zone_id not in realized]
    if missing:
        raise ValueError(f"pipeline output missing zones from ground truth: {missing[:5]}")
    confusion: dict[tuple[str, str], int] = {}
    for g in ground_truth:
        key = (g.planted_verdict, realized[g.zone_id])
        confusion[key] = confusion.get(key, 0) + 1
    exact = all(p == r for p, r in confusion)

    ari = None
    if cluster_labels:
        gt_selected = [g for g in ground_truth if g.zone_id in cluster_labels]
        if gt_selected:
            planted = [g.archetype for g in gt_selected]
            recovered = [cluster_labels[g.zone_id] for g in gt_selected]
            ari = adjusted_rand(planted, recovered)

    max_err = mean_err = None
    if ratios:
        errs = [
            abs(ratios[g.zone_id] - g.wd_we_multiplier) / g.wd_we_multiplier
            for g in ground_truth
            if g.zone_id in ratios
        ]
        if errs:
            max_err = max(errs)
            mean_err = sum(errs) / len(errs)
    return RecoveryReport(confusion, exact, ari, max_err, mean_err, len(ground_truth))
