import math

import numpy as np
import pytest

from parkbeam import geom
from parkbeam.geom import GeometryError, PlanarPoint, SectorSpec, SimplePolygon

from conftest import compass_deg, mc_area, mc_intersection_area, points_in_convex, random_convex_polygon


def square(x0, y0, side):
    return SimplePolygon.from_points(
        [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)]
    )


class TestProjection:
    ORIGIN = (2.35, 48.85)

    def test_origin_maps_to_zero(self):
        p = geom.project(2.35, 48.85, self.ORIGIN)
        assert p.x == 0.0 and p.y == 0.0

    def test_latitude_arc_length(self):
        # Independent closed form: y = R * dlat(rad).
        expected = geom.EARTH_RADIUS_M * math.radians(0.01)
        p = geom.project(2.35, 48.86, self.ORIGIN)
        assert p.x == 0.0
        assert p.y == pytest.approx(expected, abs=1e-9)
        assert p.y == pytest.approx(1111.9508, abs=1e-3)

    def test_longitude_arc_length(self):
        expected = geom.EARTH_RADIUS_M * math.radians(0.01) * math.cos(math.radians(48.85))
        p = geom.project(2.36, 48.85, self.ORIGIN)
        assert p.y == 0.0
        assert p.x == pytest.approx(expected, abs=1e-9)
        assert p.x == pytest.approx(731.69988, abs=1e-3)

    def test_round_trip_near_origin(self):
        p = geom.project(2.41, 48.79, self.ORIGIN)
        lon, lat = geom.unproject(p, self.ORIGIN)
        assert lon == pytest.approx(2.41, abs=1e-12)
        assert lat == pytest.approx(48.79, abs=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(GeometryError):
            geom.project(2.35, 86.0, self.ORIGIN)
        with pytest.raises(GeometryError):
            geom.project(200.0, 10.0, self.ORIGIN)
        with pytest.raises(GeometryError):
            PlanarPoint(1e8, 0.0)


class TestPolygonBasics:
    def test_unit_square_area(self):
        assert geom.polygon_area(square(0, 0, 1)) == 1.0

    def test_right_triangle_area(self):
        tri = SimplePolygon.from_points([(0, 0), (3, 0), (0, 4)])
        assert geom.polygon_area(tri) == pytest.approx(6.0)

    def test_clockwise_ring_is_normalized(self):
        cw = SimplePolygon.from_points([(0, 0), (0, 1), (1, 1), (1, 0)])
        assert cw.area() > 0

    def test_degenerate_ring_rejected(self):
        with pytest.raises(GeometryError):
            SimplePolygon.from_points([(0, 0), (1, 1), (2, 2)])
        with pytest.raises(GeometryError):
            SimplePolygon.from_points([(0, 0), (1, 0)])

    def test_self_intersection_rejected(self):
        with pytest.raises(GeometryError):
            SimplePolygon.from_points([(0, 0), (2, 2), (2, 0), (0, 2)])

    def test_area_matches_monte_carlo(self):
        rng = np.random.default_rng(42)
        poly = random_convex_polygon(rng, 8)
        estimate = mc_area(poly, 10**6, rng)
        assert abs(poly.area() - estimate) / estimate < 0.01


class TestIntersection:
    def test_idempotence(self):
        sq = square(0, 0, 1)
        pieces = geom.polygon_intersection(sq, sq)
        assert sum(p.area() for p in pieces) == pytest.approx(sq.area())

    def test_disjoint(self):
        assert geom.polygon_intersection(square(0, 0, 1), square(5, 5, 1)) == []

    def test_shifted_square_overlap(self):
        sq = square(0, 0, 1)
        shifted = square(0.5, 0, 1)
        area = geom.intersection_area(sq, shifted)
        assert area == pytest.approx(0.5, abs=1e-12)
        rng = np.random.default_rng(7)
        estimate = mc_intersection_area(sq, shifted, 10**6, rng)
        assert abs(area - estimate) / estimate < 0.01

    def test_commutative_and_monotone(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = random_convex_polygon(rng, 10)
            b = random_convex_polygon(rng, 10)
            ab = geom.intersection_area(a, b)
            ba = geom.intersection_area(b, a)
            assert abs(ab - ba) < 1e-9
            assert ab <= min(a.area(), b.area()) + 1e-9


class TestVoronoi:
    BBOX = SimplePolygon.from_points([(0, 0), (1000, 0), (1000, 1000), (0, 1000)])

    def test_single_site_gets_bbox(self):
        cells = geom.voronoi_cells([PlanarPoint(400, 500)], self.BBOX)
        assert len(cells) == 1
        assert cells[0].area() == pytest.approx(self.BBOX.area())

    def test_two_symmetric_sites(self):
        cells = geom.voronoi_cells([PlanarPoint(250, 500), PlanarPoint(750, 500)], self.BBOX)
        assert cells[0].area() == pytest.approx(cells[1].area())
        assert cells[0].area() == pytest.approx(500_000.0)

    def test_tessellation_and_nearest_site(self):
        rng = np.random.default_rng(11)
        sites = [PlanarPoint(x, y) for x, y in rng.uniform(50, 950, (20, 2))]
        cells = geom.voronoi_cells(sites, self.BBOX)
        total = sum(c.area() for c in cells)
        assert abs(total - self.BBOX.area()) / self.BBOX.area() < 1e-6

        pts = rng.uniform(0, 1000, (10**5, 2))
        coords = np.array([(s.x, s.y) for s in sites])
        d = np.sqrt(((pts[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2))
        order = np.argsort(d, axis=1)
        nearest = order[:, 0]
        clear = d[np.arange(len(pts)), order[:, 1]] - d[np.arange(len(pts)), nearest] > 1e-9
        inside = np.zeros(len(pts), dtype=bool)
        for idx, cell in enumerate(cells):
            mask = clear & (nearest == idx)
            inside[mask] = points_in_convex(pts[mask], cell)
        agreement = inside[clear].mean()
        assert agreement >= 0.999

    def test_duplicate_sites_rejected(self):
        with pytest.raises(GeometryError):
            geom.voronoi_cells([PlanarPoint(10, 10), PlanarPoint(10, 10)], self.BBOX)

    def test_site_outside_bbox_rejected(self):
        with pytest.raises(GeometryError):
            geom.voronoi_cells([PlanarPoint(-5, 10)], self.BBOX)


class TestSectorSplit:
    def test_three_sectors_on_disk(self):
        center = PlanarPoint(0, 0)
        ring = [(300 * math.sin(t), 300 * math.cos(t)) for t in np.linspace(0, 2 * math.pi, 361)[:-1]]
        disk = SimplePolygon.from_points(ring)
        wedges = geom.sector_split(disk, SectorSpec(center, (0, 120, 240)))
        areas = [w.area() for _, w in wedges]
        assert areas[0] == pytest.approx(areas[1], rel=1e-3)
        assert areas[1] == pytest.approx(areas[2], rel=1e-3)
        assert sum(areas) == pytest.approx(disk.area(), rel=1e-6)
        # Boundary rays at the bisectors 60/180/300: sample membership angles.
        rng = np.random.default_rng(5)
        pts = rng.uniform(-200, 200, (4000, 2))
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) > 10]
        ang = compass_deg(pts[:, 0], pts[:, 1])
        for (azimuth, wedge), (lo, hi) in zip(wedges, ((300, 60), (60, 180), (180, 300))):
            in_range = ((ang - lo) % 360.0) < ((hi - lo) % 360.0)
            got = np.array([wedge.contains(PlanarPoint(*p)) for p in pts])
            margin = np.minimum((ang - lo) % 360.0, (hi - ang) % 360.0) > 1.5
            assert (got[margin] == in_range[margin]).mean() > 0.995

    def test_single_azimuth_is_identity(self):
        sq = square(0, 0, 10)
        wedges = geom.sector_split(sq, SectorSpec(PlanarPoint(5, 5), (37.0,)))
        assert wedges == [(37.0, sq)]

    def test_two_sectors_square_monte_carlo(self):
        sq = square(0, 0, 1000)
        site = PlanarPoint(500, 500)
        wedges = geom.sector_split(sq, SectorSpec(site, (0, 90)))
        assert sum(w.area() for _, w in wedges) == pytest.approx(sq.area(), rel=1e-6)
        # Angular-membership oracle: wedge of azimuth 0 spans 225..45 deg.
        rng = np.random.default_rng(17)
        pts = rng.uniform(0, 1000, (10**5, 2))
        ang = compass_deg(pts[:, 0] - site.x, pts[:, 1] - site.y)
        north = ((ang - 225.0) % 360.0) < 180.0
        expected = {0: north.mean() * 1e6, 90: (~north).mean() * 1e6}
        for azimuth, wedge in wedges:
            assert abs(wedge.area() - expected[azimuth]) / expected[azimuth] < 0.01

    def test_site_outside_cell_rejected(self):
        with pytest.raises(GeometryError):
            geom.sector_split(square(0, 0, 1), SectorSpec(PlanarPoint(5, 5), (0, 180)))

    def test_wedge_partition_random_cells(self):
        rng = np.random.default_rng(23)
        bbox = SimplePolygon.from_points([(0, 0), (2000, 0), (2000, 2000), (0, 2000)])
        sites = [PlanarPoint(x, y) for x, y in rng.uniform(100, 1900, (6, 2))]
        cells = geom.voronoi_cells(sites, bbox)
        for site, cell in zip(sites, cells):
            azimuths = tuple(sorted(rng.uniform(0, 360, rng.integers(2, 5)) % 360))
            wedges = geom.sector_split(cell, SectorSpec(site, azimuths))
            total = sum(w.area() for _, w in wedges)
            assert abs(total - cell.area()) / cell.area() < 1e-6
