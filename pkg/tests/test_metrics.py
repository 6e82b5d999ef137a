import numpy as np
import pandas as pd
import pytest

from parkbeam import metrics
from parkbeam.metrics import UnitAppMatrix
from parkbeam.traffic import LocalCalendar


def matrix(volumes, units=None, apps=None):
    volumes = np.asarray(volumes, dtype=float)
    units = units or [f"u{i}" for i in range(volumes.shape[0])]
    apps = apps or [f"a{j}" for j in range(volumes.shape[1])]
    return UnitAppMatrix(units, apps, volumes)


class TestRca:
    def test_uniform_matrix_is_all_ones(self):
        _, r = metrics.rca(matrix(np.full((4, 5), 7.0)))
        assert np.allclose(r, 1.0, atol=1e-12)

    def test_hand_fixture(self):
        _, r = metrics.rca(matrix([[30.0, 10.0], [10.0, 50.0]]))
        expected = np.array([[1.875, 10 / 24], [10 / 24, 25 / 18]])
        assert np.allclose(r, expected, atol=1e-9)
        assert r[0, 0] == pytest.approx(1.875, abs=1e-3)
        assert r[0, 1] == pytest.approx(0.417, abs=1e-3)
        assert r[1, 1] == pytest.approx(1.389, abs=1e-3)

    def test_global_scaling_binary_exact(self):
        rng = np.random.default_rng(4)
        t = rng.uniform(0, 100, (6, 9))
        _, r1 = metrics.rca(matrix(t))
        _, r2 = metrics.rca(matrix(2.0 * t))
        assert np.array_equal(r1, r2)

    def test_global_scaling_general(self):
        rng = np.random.default_rng(5)
        t = rng.uniform(0, 100, (6, 9))
        _, r1 = metrics.rca(matrix(t))
        _, r2 = metrics.rca(matrix(3.0 * t))
        assert np.allclose(r1, r2, atol=1e-12)

    def test_zero_cell_maps_to_zero(self):
        _, r = metrics.rca(matrix([[0.0, 10.0], [5.0, 5.0]]))
        assert r[0, 0] == 0.0

    def test_zero_unit_dropped_with_warning(self, caplog):
        with caplog.at_level("WARNING"):
            reduced, r = metrics.rca(matrix([[0.0, 0.0], [5.0, 5.0]]))
        assert reduced.units == ["u1"]
        assert "zero-traffic" in caplog.text

    def test_weighted_mean_identity_random(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            t = rng.uniform(0, 50, (rng.integers(2, 8), rng.integers(2, 12)))
            t[t < 5] = 0.0
            m = matrix(t)
            try:
                reduced, r = metrics.rca(m)
            except ValueError:
                continue
            w = reduced.volumes.sum(axis=0) / reduced.volumes.sum()
            assert np.max(np.abs((w * r).sum(axis=1) - 1.0)) < 1e-9

    def test_external_reference_frame(self):
        net = matrix([[10.0, 30.0], [50.0, 10.0]])
        share = net.app_shares()
        sub = matrix([[10.0, 30.0]], units=["u0"])
        _, r = metrics.rca(sub, app_share=share)
        assert r[0, 0] == pytest.approx((10 / 40) / 0.6)
        assert r[0, 1] == pytest.approx((30 / 40) / 0.4)


class TestRsca:
    def test_fixed_points(self):
        assert metrics.rsca_from_rca(np.array([1.0]))[0] == 0.0
        assert metrics.rsca_from_rca(np.array([0.0]))[0] == -1.0
        assert metrics.rsca_from_rca(np.array([3.0]))[0] == 0.5

    def test_bounded_and_monotone(self):
        rng = np.random.default_rng(8)
        values = np.sort(rng.uniform(0, 1000, 300))
        out = metrics.rsca_from_rca(values)
        assert np.all(out >= -1.0) and np.all(out <= 1.0)
        assert np.all(np.diff(out) >= 0)

    def test_full_pipeline_bounds(self):
        rng = np.random.default_rng(9)
        m = matrix(rng.uniform(0, 10, (5, 7)))
        result = metrics.rsca(m)
        assert np.all(result.rsca >= -1.0) and np.all(result.rsca <= 1.0)
        assert np.allclose(result.rsca, (result.rca - 1) / (result.rca + 1))


class TestCategoryMatrix:
    CATALOG = {"a0": "Music", "a1": "Music", "a2": "Social", "a3": "Video"}

    def test_single_app_categories_identity(self):
        m = matrix([[1.0, 2.0], [3.0, 4.0]], apps=["a2", "a3"])
        cat = metrics.category_matrix(m, self.CATALOG)
        assert cat.apps == ["Social", "Video"]
        assert np.array_equal(cat.volumes, m.volumes)

    def test_member_sum(self):
        m = matrix([[10.0, 20.0, 5.0, 1.0]], apps=["a0", "a1", "a2", "a3"])
        cat = metrics.category_matrix(m, self.CATALOG)
        assert cat.apps == ["Music", "Social", "Video"]
        assert cat.volumes.tolist() == [[30.0, 5.0, 1.0]]

    def test_category_rca_matches_brute_force(self):
        rng = np.random.default_rng(10)
        m = matrix(rng.uniform(0, 20, (4, 4)), apps=["a0", "a1", "a2", "a3"])
        cat = metrics.category_matrix(m, self.CATALOG)
        _, got = metrics.rca(cat)
        # Brute force: sum member columns, then apply the share ratio by hand.
        summed = np.stack(
            [m.volumes[:, 0] + m.volumes[:, 1], m.volumes[:, 2], m.volumes[:, 3]], axis=1
        )
        share = summed.sum(axis=0) / summed.sum()
        expected = (summed / summed.sum(axis=1, keepdims=True)) / share
        assert np.allclose(got, expected, atol=1e-12)

    def test_uncataloged_app_fatal(self):
        with pytest.raises(ValueError):
            metrics.category_matrix(matrix([[1.0]], apps=["mystery"]), self.CATALOG)


def hourly_frame(unit_id, start, hours, apps, value):
    rows = []
    for h in range(hours):
        for a in apps:
            rows.append((unit_id, start + 3600 * h, a, value))
    return pd.DataFrame(rows, columns=["unit_id", "timestamp", "app_id", "bytes"])


class TestWindowedMatrix:
    CAL = LocalCalendar.utc()

    def test_all_equals_unfiltered(self):
        frame = hourly_frame("z", 0, 48, ["a", "b"], 2.0)
        m = metrics.windowed_matrix(frame, "all", self.CAL)
        assert m.volumes.tolist() == [[96.0, 96.0]]

    def test_weekday_weekend_partition_exact(self):
        # 1970-01-01 is a Thursday; 14 days cover both classes.
        frame = hourly_frame("z", 0, 14 * 24, ["a"], 3.0)
        total = metrics.windowed_matrix(frame, "all", self.CAL).volumes
        wd = metrics.windowed_matrix(frame, "weekday", self.CAL).volumes
        we = metrics.windowed_matrix(frame, "weekend", self.CAL).volumes
        assert (wd + we).tolist() == total.tolist()
        assert wd[0, 0] == 10 * 24 * 3.0
        assert we[0, 0] == 4 * 24 * 3.0

    def test_weekend_only_traffic_flags_weekday_zeros(self, caplog):
        # Saturday 1970-01-03 starts at epoch 172800; zone "w" has traffic
        # only then, so its weekday row is all-zero and gets dropped with a
        # warning at RCA time.
        frame = pd.concat(
            [hourly_frame("z", 0, 24, ["a", "b"], 1.0), hourly_frame("w", 172800, 24, ["a", "b"], 1.0)],
            ignore_index=True,
        )
        m = metrics.windowed_matrix(frame, "weekday", self.CAL, apps=["a", "b"])
        assert m.units == ["w", "z"]
        assert np.all(m.volumes[0] == 0.0)
        with caplog.at_level("WARNING"):
            reduced, _ = metrics.rca(m)
        assert reduced.units == ["z"]
        assert "zero-traffic" in caplog.text

    def test_empty_window_fatal(self):
        frame = hourly_frame("z", 0, 5, ["a"], 1.0)  # Thursday morning only
        with pytest.raises(ValueError):
            metrics.windowed_matrix(frame, "weekend", self.CAL)

    def test_unknown_window_rejected(self):
        frame = hourly_frame("z", 0, 5, ["a"], 1.0)
        with pytest.raises(ValueError):
            metrics.windowed_matrix(frame, "fortnight", self.CAL)


class TestGroupProfile:
    def test_identical_rows_zero_width(self):
        m = metrics.RscaMatrix(["u0", "u1"], ["a"], np.array([[2.0], [2.0]]), np.array([[0.5], [0.5]]))
        prof = metrics.group_profile(m, ["u0", "u1"])
        assert prof["mean"].iloc[0] == 0.5
        assert prof["ci_half_width"].iloc[0] == pytest.approx(0.0, abs=1e-12)

    def test_two_row_interval(self):
        m = metrics.RscaMatrix(["u0", "u1"], ["a"], np.ones((2, 1)), np.array([[0.2], [0.4]]))
        prof = metrics.group_profile(m, ["u0", "u1"])
        assert prof["mean"].iloc[0] == pytest.approx(0.3)
        assert prof["ci_half_width"].iloc[0] == pytest.approx(1.2706, abs=1e-3)

    def test_full_subset_is_column_mean(self):
        rng = np.random.default_rng(12)
        rsca = rng.uniform(-1, 1, (6, 3))
        m = metrics.RscaMatrix([f"u{i}" for i in range(6)], ["a", "b", "c"], np.ones((6, 3)), rsca)
        prof = metrics.group_profile(m, m.units)
        assert np.allclose(prof["mean"].to_numpy(), rsca.mean(axis=0))

    def test_singleton_flagged(self):
        m = metrics.RscaMatrix(["u0"], ["a"], np.ones((1, 1)), np.array([[0.1]]))
        prof = metrics.group_profile(m, ["u0"])
        assert np.isnan(prof["ci_half_width"].iloc[0])


class TestOrderInsensitivity:
    def test_permuting_axes_permutes_output(self):
        rng = np.random.default_rng(13)
        t = rng.uniform(1, 10, (4, 5))
        m = matrix(t)
        result = metrics.rsca(m)
        perm_u = rng.permutation(4)
        perm_a = rng.permutation(5)
        m2 = UnitAppMatrix(
            [m.units[i] for i in perm_u], [m.apps[j] for j in perm_a], t[np.ix_(perm_u, perm_a)]
        )
        result2 = metrics.rsca(m2)
        assert np.allclose(result2.rsca, result.rsca[np.ix_(perm_u, perm_a)], atol=1e-12)
