import math

import numpy as np
import pytest

from parkbeam.geom import SimplePolygon


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew monotone chain; returns CCW hull vertices."""
    pts = sorted(map(tuple, points))
    if len(pts) < 3:
        raise ValueError("need at least 3 points")

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1])


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def random_convex_polygon(rng: np.random.Generator, n_points: int = 20, scale: float = 100.0):
    while True:
        pts = rng.uniform(0.0, scale, (n_points, 2))
        try:
            hull = convex_hull(pts)
        except ValueError:
            continue
        if len(hull) >= 5:
            return SimplePolygon.from_points(hull)


def points_in_convex(points: np.ndarray, poly: SimplePolygon) -> np.ndarray:
    """Vectorized inside test for convex CCW polygons via half-plane signs.

    Edge-by-edge accumulation keeps the working set at one (N,) buffer,
    which is much faster than materializing the (N, E) cross matrix.
    """
    v = poly.xy
    nxt = np.roll(v, -1, axis=0)
    x, y = points[:, 0], points[:, 1]
    inside = np.ones(len(points), dtype=bool)
    for (vx, vy), (ex, ey) in zip(v, nxt - v):
        np.logical_and(inside, ex * (y - vy) >= ey * (x - vx), out=inside)
    return inside


def mc_area(poly: SimplePolygon, n_samples: int, rng: np.random.Generator) -> float:
    x0, y0, x1, y1 = poly.bounds()
    pts = rng.uniform((x0, y0), (x1, y1), (n_samples, 2))
    hits = points_in_convex(pts, poly).mean()
    return hits * (x1 - x0) * (y1 - y0)


def mc_intersection_area(a: SimplePolygon, b: SimplePolygon, n_samples: int,
                         rng: np.random.Generator) -> float:
    ax0, ay0, ax1, ay1 = a.bounds()
    bx0, by0, bx1, by1 = b.bounds()
    x0, y0 = max(ax0, bx0), max(ay0, by0)
    x1, y1 = min(ax1, bx1), min(ay1, by1)
    if x1 <= x0 or y1 <= y0:
        return 0.0
    pts = rng.uniform((x0, y0), (x1, y1), (n_samples, 2))
    hits = (points_in_convex(pts, a) & points_in_convex(pts, b)).mean()
    return hits * (x1 - x0) * (y1 - y0)


def compass_deg(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Angle in degrees clockwise from north for (east, north) offsets."""
    return np.degrees(np.arctan2(dx, dy)) % 360.0


@pytest.fixture(scope="session")
def small_scenario(tmp_path_factory):
    """Compact planted scenario shared by ingest/traffic/CLI tests."""
    from parkbeam import synth

    out = tmp_path_factory.mktemp("small_scenario")
    config = synth.ScenarioConfig(
        seed=1001,
        n_sites=12,
        n_zones=12,
        span_days=14,
        bbox_extent_m=8000.0,
        antennas_per_site={1: 0.25, 2: 0.25, 3: 0.5},
        planted_failures={"no-antenna": 1, "low-illumination": 1, "low-quality": 1},
    )
    bookkeeping = synth.generate(config, out)
    return {"config": config, "dir": out, "bookkeeping": bookkeeping}


def approx_rel(actual: float, expected: float, rel: float) -> bool:
    return math.isclose(actual, expected, rel_tol=rel, abs_tol=0.0)
