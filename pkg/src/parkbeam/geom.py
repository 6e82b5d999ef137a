"""Planar geometry kernel: local projection, simple polygons, bounded
Voronoi tessellation and azimuth-sector splitting of cells.

Everything works on projected metric coordinates; polygons are plain
vertex rings (no holes). Boolean intersection is delegated to shapely,
all other constructions are done directly here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from shapely.geometry import MultiPolygon, Polygon as _ShapelyPolygon

EARTH_RADIUS_M = 6371008.8

# Pieces below this area (m^2) are numerical slivers, not real overlap.
MIN_PIECE_AREA = 1e-9

COORD_LIMIT = 1e7


class GeometryError(ValueError):
    """Invalid geometric input or degenerate construction."""


@dataclass(frozen=True)
class PlanarPoint:
    """Point in the local projected frame, meters east/north of the origin."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError("non-finite coordinate")
        if abs(self.x) >= COORD_LIMIT or abs(self.y) >= COORD_LIMIT:
            raise GeometryError(f"coordinate out of range: ({self.x}, {self.y})")

    def distance_to(self, other: "PlanarPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def project(lon: float, lat: float, origin: tuple[float, float]) -> PlanarPoint:
    """Equirectangular projection about a study-area origin (lon, lat).

    x = R * dlon * cos(lat0), y = R * dlat, with R the mean Earth radius.
    Accurate to <0.1% over metropolitan extents; invertible via unproject.
    """
    lon0, lat0 = origin
    for name, lat_v in (("origin", lat0), ("input", lat)):
        if not abs(lat_v) < 85.0:
            raise GeometryError(f"{name} latitude out of range (|lat| < 85): {lat_v}")
    if abs(lon) > 180.0 or abs(lon0) > 180.0:
        raise GeometryError("longitude out of range")
    x = EARTH_RADIUS_M * math.radians(lon - lon0) * math.cos(math.radians(lat0))
    y = EARTH_RADIUS_M * math.radians(lat - lat0)
    return PlanarPoint(x, y)


def unproject(point: PlanarPoint, origin: tuple[float, float]) -> tuple[float, float]:
    """Inverse of project for points near the origin."""
    lon0, lat0 = origin
    lon = lon0 + math.degrees(point.x / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
    lat = lat0 + math.degrees(point.y / EARTH_RADIUS_M)
    return lon, lat


def _signed_area(xs: np.ndarray, ys: np.ndarray) -> float:
    # Shoelace with a fixed summation order for reproducibility.
    x2 = np.roll(xs, -1)
    y2 = np.roll(ys, -1)
    return 0.5 * float(np.sum(xs * y2 - x2 * ys))


def _has_self_intersection(xs: np.ndarray, ys: np.ndarray) -> bool:
    """Detect proper crossings between non-adjacent edges.

    Touch-within-epsilon is tolerated: clipped polygons routinely carry
    nearly collinear vertices that must not be rejected.
    """
    n = len(xs)
    if n < 4:
        return False
    a0 = np.stack([xs, ys], axis=1)
    a1 = np.stack([np.roll(xs, -1), np.roll(ys, -1)], axis=1)

    scale = max(xs.max() - xs.min(), ys.max() - ys.min(), 1e-12)
    eps = 1e-12 * scale * scale

    i_idx, j_idx = np.triu_indices(n, k=2)
    # The closing edge (n-1, 0) is adjacent to edge 0.
    keep = ~((i_idx == 0) & (j_idx == n - 1))
    i_idx, j_idx = i_idx[keep], j_idx[keep]
    if len(i_idx) == 0:
        return False

    p, r = a0[i_idx], a1[i_idx] - a0[i_idx]
    q, s = a0[j_idx], a1[j_idx] - a0[j_idx]

    def cross(u, v):
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    o1 = cross(r, q - p)
    o2 = cross(r, q + s - p)
    o3 = cross(s, p - q)
    o4 = cross(s, p + r - q)
    proper = (o1 * o2 < -eps * eps) & (o3 * o4 < -eps * eps)
    return bool(proper.any())


@dataclass(frozen=True)
class SimplePolygon:
    """Simple polygon as a counter-clockwise ring of vertices, area > 0."""

    vertices: tuple[PlanarPoint, ...]

    @classmethod
    def from_points(cls, points: Iterable) -> "SimplePolygon":
        """Build and validate a polygon from (x, y) pairs or PlanarPoints.

        A closing vertex equal to the first is dropped; clockwise rings are
        reversed. Degenerate rings (collinear collapse, self-intersection)
        raise GeometryError.
        """
        pts = []
        for p in points:
            if isinstance(p, PlanarPoint):
                pts.append((p.x, p.y))
            else:
                pts.append((float(p[0]), float(p[1])))
        if len(pts) >= 2 and _close(pts[0], pts[-1]):
            pts = pts[:-1]
        # Collapse consecutive near-duplicates left behind by clipping.
        cleaned = []
        for p in pts:
            if not cleaned or not _close(cleaned[-1], p):
                cleaned.append(p)
        if len(cleaned) >= 2 and _close(cleaned[0], cleaned[-1]):
            cleaned.pop()
        if len(cleaned) < 3:
            raise GeometryError("polygon needs at least 3 distinct vertices")

        xs = np.array([p[0] for p in cleaned])
        ys = np.array([p[1] for p in cleaned])
        area = _signed_area(xs, ys)
        span = max(xs.max() - xs.min(), ys.max() - ys.min(), 1e-12)
        if abs(area) <= 1e-12 * span * span:
            raise GeometryError("degenerate polygon (zero area)")
        if area < 0:
            cleaned.reverse()
            xs, ys = xs[::-1].copy(), ys[::-1].copy()
        if _has_self_intersection(xs, ys):
            raise GeometryError("self-intersecting ring")
        return cls(tuple(PlanarPoint(x, y) for x, y in cleaned))

    @property
    def xy(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.vertices])

    def area(self) -> float:
        arr = self.xy
        return _signed_area(arr[:, 0], arr[:, 1])

    def bounds(self) -> tuple[float, float, float, float]:
        arr = self.xy
        return (
            float(arr[:, 0].min()),
            float(arr[:, 1].min()),
            float(arr[:, 0].max()),
            float(arr[:, 1].max()),
        )

    def centroid(self) -> PlanarPoint:
        arr = self.xy
        x, y = arr[:, 0], arr[:, 1]
        x2, y2 = np.roll(x, -1), np.roll(y, -1)
        w = x * y2 - x2 * y
        a = 0.5 * float(np.sum(w))
        cx = float(np.sum((x + x2) * w)) / (6.0 * a)
        cy = float(np.sum((y + y2) * w)) / (6.0 * a)
        return PlanarPoint(cx, cy)

    def contains(self, point: PlanarPoint, include_boundary: bool = True) -> bool:
        """Ray-casting containment test; boundary points per the flag."""
        arr = self.xy
        x, y = point.x, point.y
        n = len(arr)
        inside = False
        for i in range(n):
            x1, y1 = arr[i]
            x2, y2 = arr[(i + 1) % n]
            if _on_segment(x, y, x1, y1, x2, y2):
                return include_boundary
            if (y1 > y) != (y2 > y):
                xi = (x2 - x1) * (y - y1) / (y2 - y1) + x1
                if x < xi:
                    inside = not inside
        return inside

    def to_shapely(self) -> _ShapelyPolygon:
        return _ShapelyPolygon([(p.x, p.y) for p in self.vertices])


def _close(a, b, tol: float = 1e-9) -> bool:
    return abs(a[0] - b[0]) <= tol and abs(a[1] - b[1]) <= tol


def _on_segment(px, py, x1, y1, x2, y2, eps: float = 1e-9) -> bool:
    cross = (py - y1) * (x2 - x1) - (px - x1) * (y2 - y1)
    seg_len = math.hypot(x2 - x1, y2 - y1)
    if seg_len == 0.0:
        return math.hypot(px - x1, py - y1) <= eps
    if abs(cross) > eps * seg_len:
        return False
    dot = (px - x1) * (x2 - x1) + (py - y1) * (y2 - y1)
    return -eps * seg_len <= dot <= seg_len * seg_len + eps * seg_len


@dataclass(frozen=True)
class SectorSpec:
    """Antenna azimuths (degrees clockwise from north) at one site."""

    site: PlanarPoint
    azimuths: tuple[float, ...]

    def __post_init__(self):
        az = tuple(sorted(a % 360.0 for a in self.azimuths))
        if len(az) == 0:
            raise GeometryError("at least one azimuth required")
        for a, b in zip(az, az[1:]):
            if abs(a - b) < 1e-9:
                raise GeometryError("duplicate azimuths")
        object.__setattr__(self, "azimuths", az)


def polygon_area(polygon: SimplePolygon) -> float:
    """Shoelace area in square meters (positive for valid polygons)."""
    area = polygon.area()
    if area <= 0:
        raise GeometryError("degenerate polygon ring")
    return area


def _from_shapely(geom) -> list[SimplePolygon]:
    pieces: list[SimplePolygon] = []
    if geom.is_empty:
        return pieces
    if isinstance(geom, _ShapelyPolygon):
        polys = [geom]
    elif isinstance(geom, MultiPolygon):
        polys = list(geom.geoms)
    else:
        # GeometryCollection from degenerate touching: keep polygonal parts.
        polys = [g for g in getattr(geom, "geoms", []) if isinstance(g, _ShapelyPolygon)]
    for poly in polys:
        if poly.area < MIN_PIECE_AREA:
            continue
        pieces.append(SimplePolygon.from_points(list(poly.exterior.coords)))
    return pieces


def polygon_intersection(a: SimplePolygon, b: SimplePolygon) -> list[SimplePolygon]:
    """Intersection a∩b as disjoint simple pieces; empty list when disjoint."""
    # Cheap reject on bounding boxes before touching GEOS.
    ax0, ay0, ax1, ay1 = a.bounds()
    bx0, by0, bx1, by1 = b.bounds()
    if ax1 < bx0 or bx1 < ax0 or ay1 < by0 or by1 < ay0:
        return []
    inter = a.to_shapely().intersection(b.to_shapely())
    return _from_shapely(inter)


def intersection_area(a: SimplePolygon, b: SimplePolygon) -> float:
    """Total area of a∩b (0.0 when disjoint)."""
    return sum(p.area() for p in polygon_intersection(a, b))


def _clip_halfplane(verts: list[tuple[float, float]], a: float, b: float, c: float):
    """Sutherland-Hodgman clip of a ring against a*x + b*y <= c."""
    out: list[tuple[float, float]] = []
    n = len(verts)
    for i in range(n):
        cur = verts[i]
        nxt = verts[(i + 1) % n]
        f_cur = a * cur[0] + b * cur[1] - c
        f_nxt = a * nxt[0] + b * nxt[1] - c
        if f_cur <= 0:
            out.append(cur)
            if f_nxt > 0:
                t = f_cur / (f_cur - f_nxt)
                out.append((cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])))
        elif f_nxt <= 0:
            t = f_cur / (f_cur - f_nxt)
            out.append((cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])))
    return out


def voronoi_cells(sites: Sequence[PlanarPoint], bbox: SimplePolygon) -> list[SimplePolygon]:
    """Bounded Voronoi cells, one per site, tiling bbox.

    Each cell is the bbox clipped by the perpendicular-bisector half-plane
    toward every other site (O(n^2), fine for desk-scale site counts).
    bbox must be convex for the clipping to stay exact.
    """
    if len(sites) == 0:
        raise GeometryError("at least one site required")
    for i, s in enumerate(sites):
        if not bbox.contains(s):
            raise GeometryError(f"site {i} outside bbox: ({s.x}, {s.y})")
    for i in range(len(sites)):
        for j in range(i + 1, len(sites)):
            if sites[i].distance_to(sites[j]) < 1e-9:
                raise GeometryError(f"duplicate sites at index {i} and {j}")

    bbox_verts = [(p.x, p.y) for p in bbox.vertices]
    cells = []
    for i, s in enumerate(sites):
        verts = bbox_verts
        for j, t in enumerate(sites):
            if j == i:
                continue
            # Keep the side closer to s: 2*(t-s)·x <= |t|^2 - |s|^2
            a = 2.0 * (t.x - s.x)
            b = 2.0 * (t.y - s.y)
            c = (t.x * t.x + t.y * t.y) - (s.x * s.x + s.y * s.y)
            verts = _clip_halfplane(verts, a, b, c)
            if len(verts) < 3:
                raise GeometryError(f"site {i} produced an empty Voronoi cell")
        cells.append(SimplePolygon.from_points(verts))
    return cells


def _compass_dir(angle_deg: float) -> tuple[float, float]:
    # Degrees clockwise from north -> unit (east, north) vector.
    rad = math.radians(angle_deg)
    return math.sin(rad), math.cos(rad)


def _sector_fan(
    site: PlanarPoint, start_deg: float, span_deg: float, radius: float, step_deg: float
) -> SimplePolygon:
    """Polygonal fan from site sweeping clockwise from start over span degrees."""
    n_steps = max(2, int(math.ceil(span_deg / step_deg)))
    pts = [(site.x, site.y)]
    for k in range(n_steps + 1):
        ang = start_deg + span_deg * k / n_steps
        dx, dy = _compass_dir(ang)
        pts.append((site.x + radius * dx, site.y + radius * dy))
    return SimplePolygon.from_points(pts)


def sector_split(
    cell: SimplePolygon,
    spec: SectorSpec,
    arc_step_deg: float = 1.0,
    boundaries: Sequence[float] | None = None,
) -> list[tuple[float, SimplePolygon]]:
    """Split a cell into per-azimuth wedges along sector boundaries.

    Boundaries default to the angular bisectors between adjacent azimuths
    (wrap-around included); pass explicit boundary angles to override. A
    single azimuth returns the whole cell. Wedges are realized as 1-degree
    polygonal fans clipped to the cell, so they partition it exactly up to
    float noise.
    """
    if not cell.contains(spec.site):
        raise GeometryError("sector site outside cell")
    az = spec.azimuths
    m = len(az)
    if m == 1:
        return [(az[0], cell)]

    if boundaries is None:
        bounds = []
        for i in range(m):
            a, b = az[i], az[(i + 1) % m]
            gap = (b - a) % 360.0
            bounds.append((a + gap / 2.0) % 360.0)
    else:
        if len(boundaries) != m:
            raise GeometryError("need one boundary per azimuth")
        bounds = [b % 360.0 for b in boundaries]

    radius = 2.0 * max(spec.site.distance_to(v) for v in cell.vertices)
    wedges = []
    for i in range(m):
        start = bounds[(i - 1) % m]
        span = (bounds[i] - start) % 360.0
        if span == 0.0:
            span = 360.0
        fan = _sector_fan(spec.site, start, span, radius, arc_step_deg)
        pieces = polygon_intersection(cell, fan)
        if len(pieces) != 1:
            raise GeometryError(
                f"sector wedge for azimuth {az[i]} split into {len(pieces)} pieces"
            )
        wedges.append((az[i], pieces[0]))
    return wedges
