"""Three-step zone selection from antenna coverage geometry.

An antenna illuminates a zone when enough of its (sector) Voronoi cell
overlaps it. Zones are kept only when the selected antennas' combined
coverage is both precise and nearly complete:

  Step 1  keep antennas with illumination ratio i_pv >= alpha
  Step 2  keep zones whose covered fraction ip > beta (strict)
  Step 3  keep zones whose coverage quality qp >= gamma

qp is the harmonic mean of coverage precision (cp, the sum of selected
illumination ratios) and zone illumination (ip).
"""

from __future__ import annotations

import csv
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .geom import GeometryError, SimplePolygon, intersection_area, sector_split, voronoi_cells

VERDICT_NO_ANTENNA = "no-antenna"
VERDICT_LOW_ILLUMINATION = "low-illumination"
VERDICT_LOW_QUALITY = "low-quality"
VERDICT_SELECTED = "selected"


@dataclass(frozen=True)
class SelectionThresholds:
    alpha: float = 0.1
    beta: float = 0.8
    gamma: float = 0.4

    def __post_init__(self):
        for name, v in (("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)):
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name} must be in (0, 1], got {v}")


@dataclass
class CoverageReport:
    """Per-zone selection outcome with the stage that decided it."""

    zone_id: str
    selected: list[tuple[str, float]] = field(default_factory=list)
    cp: float = 0.0
    ip: float = 0.0
    qp: float = 0.0
    verdict: str = VERDICT_NO_ANTENNA

    @property
    def weights(self) -> dict[str, float]:
        return dict(self.selected)


def illumination_ratio(antenna_poly: SimplePolygon, zone_poly: SimplePolygon) -> float:
    """Fraction of the antenna's cell area overlapping the zone, in [0, 1]."""
    a_v = antenna_poly.area()
    if a_v <= 0:
        raise GeometryError("zero-area antenna polygon")
    ratio = intersection_area(antenna_poly, zone_poly) / a_v
    return min(ratio, 1.0)


def select_antennas(
    zones: Mapping[str, SimplePolygon],
    antenna_polys: Mapping[str, SimplePolygon],
    alpha: float = 0.1,
) -> dict[str, list[tuple[str, float]]]:
    """Step 1: per zone, antennas whose illumination ratio is >= alpha."""
    return {
        zone_id: _select_for_zone(zone_poly, antenna_polys, alpha)
        for zone_id, zone_poly in zones.items()
    }


def _select_for_zone(
    zone_poly: SimplePolygon,
    antenna_polys: Mapping[str, SimplePolygon],
    alpha: float,
) -> list[tuple[str, float]]:
    zx0, zy0, zx1, zy1 = zone_poly.bounds()
    picked = []
    for antenna_id, poly in antenna_polys.items():
        x0, y0, x1, y1 = poly.bounds()
        if x1 < zx0 or zx1 < x0 or y1 < zy0 or zy1 < y0:
            continue
        i_pv = illumination_ratio(poly, zone_poly)
        if i_pv >= alpha:
            picked.append((antenna_id, i_pv))
    picked.sort(key=lambda kv: kv[0])
    return picked


def coverage_precision(i_pv_values: Sequence[float]) -> float:
    """Sum of selected illumination ratios (can exceed 1 by design)."""
    if len(i_pv_values) == 0:
        raise ValueError("coverage precision undefined for an empty antenna set")
    return float(sum(i_pv_values))


def zone_illumination(
    zone_poly: SimplePolygon, selected_polys: Sequence[SimplePolygon]
) -> float:
    """Fraction of the zone covered by the selected antennas' cells.

    Selected cells are disjoint Voronoi pieces, so the value stays in
    [0, 1]; tiny float excess from clipping is capped.
    """
    if len(selected_polys) == 0:
        raise ValueError("zone illumination undefined for an empty antenna set")
    a_p = zone_poly.area()
    covered = sum(intersection_area(poly, zone_poly) for poly in selected_polys)
    ip = covered / a_p
    assert ip <= 1.0 + 1e-9, f"disjoint cells overflow zone area: ip={ip}"
    return min(ip, 1.0)


def coverage_quality(cp: float, ip: float) -> float:
    """Harmonic mean of coverage precision and zone illumination."""
    if cp < 0 or ip < 0:
        raise ValueError("coverage quality needs non-negative inputs")
    if cp + ip == 0:
        raise ValueError("coverage quality undefined when cp + ip == 0")
    return 2.0 * cp * ip / (cp + ip)


def _evaluate_zone(
    zone_id: str,
    zone_poly: SimplePolygon,
    antenna_polys: Mapping[str, SimplePolygon],
    thresholds: SelectionThresholds,
) -> CoverageReport:
    selected = _select_for_zone(zone_poly, antenna_polys, thresholds.alpha)
    if not selected:
        return CoverageReport(zone_id=zone_id)
    cp = coverage_precision([w for _, w in selected])
    ip = zone_illumination(zone_poly, [antenna_polys[a] for a, _ in selected])
    qp = coverage_quality(cp, ip)
    if ip <= thresholds.beta:
        verdict = VERDICT_LOW_ILLUMINATION
    elif qp < thresholds.gamma:
        verdict = VERDICT_LOW_QUALITY
    else:
        verdict = VERDICT_SELECTED
    return CoverageReport(zone_id, selected, cp, ip, qp, verdict)


def run_selection(
    zones: Mapping[str, SimplePolygon],
    antenna_polys: Mapping[str, SimplePolygon],
    thresholds: SelectionThresholds = SelectionThresholds(),
    threads: int = 1,
) -> list[CoverageReport]:
    """Run the three-step pipeline; reports sorted by zone_id.

    Zones are labeled with the first failing stage: no-antenna, then
    low-illumination (ip <= beta), then low-quality (qp < gamma).
    """
    items = sorted(zones.items())
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(
                pool.map(
                    lambda kv: _evaluate_zone(kv[0], kv[1], antenna_polys, thresholds),
                    items,
                )
            )
    else:
        reports = [_evaluate_zone(z, p, antenna_polys, thresholds) for z, p in items]
    reports.sort(key=lambda r: r.zone_id)
    return reports


def antenna_polygons(sites, bbox: SimplePolygon, by_sector: bool = True) -> dict[str, SimplePolygon]:
    """Coverage polygons for a site list: sector wedges or whole site cells.

    sites need .site_id, .point and .sectors (with .antenna_id, .azimuth_deg);
    with by_sector=False the unsplit cell is attributed to the site id.
    """
    cells = voronoi_cells([s.point for s in sites], bbox)
    polys: dict[str, SimplePolygon] = {}
    for site, cell in zip(sites, cells):
        if not by_sector:
            polys[site.site_id] = cell
            continue
        spec = site.sector_spec()
        wedges = sector_split(cell, spec)
        by_azimuth = {round(a % 360.0, 6): poly for a, poly in wedges}
        for sector in site.sectors:
            polys[sector.antenna_id] = by_azimuth[round(sector.azimuth_deg % 360.0, 6)]
    return polys


@dataclass
class AttributionRow:
    method: str
    n_selected: int
    median_cp: float
    median_ip: float
    median_qp: float


@dataclass
class AttributionComparison:
    rows: list[AttributionRow]
    reports: dict[str, list[CoverageReport]]

    def row(self, method: str) -> AttributionRow:
        return next(r for r in self.rows if r.method == method)


def compare_attribution(
    zones: Mapping[str, SimplePolygon],
    sites,
    bbox: SimplePolygon,
    thresholds: SelectionThresholds = SelectionThresholds(),
    threads: int = 1,
) -> AttributionComparison:
    """Run selection on whole-site cells vs sector-split cells.

    Reports per-method medians of cp/ip/qp over the selected zones and the
    number of zones each attribution method can retain.
    """
    rows = []
    all_reports = {}
    for method, by_sector in (("base-station", False), ("antenna", True)):
        polys = antenna_polygons(sites, bbox, by_sector=by_sector)
        reports = run_selection(zones, polys, thresholds, threads=threads)
        kept = [r for r in reports if r.verdict == VERDICT_SELECTED]
        if kept:
            row = AttributionRow(
                method,
                len(kept),
                statistics.median(r.cp for r in kept),
                statistics.median(r.ip for r in kept),
                statistics.median(r.qp for r in kept),
            )
        else:
            row = AttributionRow(method, 0, float("nan"), float("nan"), float("nan"))
        rows.append(row)
        all_reports[method] = reports
    return AttributionComparison(rows, all_reports)


def write_coverage_report(path, reports: Sequence[CoverageReport], header_line: str | None = None):
    """Emit coverage_report.csv (zone_id, n_selected, cp, ip, qp, verdict)."""
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["zone_id", "n_selected", "cp", "ip", "qp", "verdict"])
        for r in reports:
            writer.writerow(
                [r.zone_id, len(r.selected), _fmt(r.cp), _fmt(r.ip), _fmt(r.qp), r.verdict]
            )


def write_selection_weights(path, reports: Sequence[CoverageReport], header_line: str | None = None):
    """Emit selection_weights.csv (zone_id, antenna_id, i_pv) for conversion.

    Only zones that survived all three stages are written: failed zones are
    not analyzed, so their step-1 antennas stay on the city side.
    """
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["zone_id", "antenna_id", "i_pv"])
        for r in reports:
            if r.verdict != VERDICT_SELECTED:
                continue
            for antenna_id, w in r.selected:
                writer.writerow([r.zone_id, antenna_id, _fmt(w)])


def _fmt(x: float) -> str:
    return format(x, ".6g")
