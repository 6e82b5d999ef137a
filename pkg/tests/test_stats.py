import csv
import math
from pathlib import Path

import numpy as np
import pytest

from parkbeam import stats

FIXTURES = Path(__file__).parent / "data" / "stats_oracle_cases.csv"


def series_reg_inc_beta(a: float, b: float, x: float, tol: float = 1e-16) -> float:
    """Independent power-series oracle for I_x(a, b).

    Uses I_x = x^a (1-x)^b / (a B(a,b)) * 2F1(a+b, 1; a+1; x) with the
    symmetry reduction for the upper half so the series converges fast.
    """
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x > a / (a + b):
        return 1.0 - series_reg_inc_beta(b, a, 1.0 - x, tol)
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    term = 1.0
    total = 1.0
    n = 0
    while abs(term) > tol * abs(total):
        term *= (a + b + n) / (a + 1.0 + n) * x
        total += term
        n += 1
        if n > 100_000:
            raise ArithmeticError("series oracle failed to converge")
    return math.exp(ln_front) * total / a


def load_cases():
    with open(FIXTURES) as fh:
        return list(csv.DictReader(fh))


def parse(row):
    x = [float(v) for v in row["x"].split(";")]
    y = [float(v) for v in row["y"].split(";")]
    return x, y, float(row["statistic"]), float(row["p"]), float(row["df"])


class TestRegIncBeta:
    def test_endpoints(self):
        for a, b in ((0.5, 0.5), (2.0, 7.0), (10.0, 1.5)):
            assert stats.reg_inc_beta(a, b, 0.0) == 0.0
            assert stats.reg_inc_beta(a, b, 1.0) == 1.0

    @pytest.mark.parametrize("x", [0.25, 0.5, 0.9])
    def test_uniform_case(self, x):
        assert stats.reg_inc_beta(1.0, 1.0, x) == pytest.approx(x, abs=1e-14)

    @pytest.mark.parametrize("a", [0.5, 2.0, 7.0])
    def test_symmetry_at_half(self, a):
        assert stats.reg_inc_beta(a, a, 0.5) == pytest.approx(0.5, abs=1e-13)

    def test_against_series_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            a = float(rng.uniform(0.2, 30.0))
            b = float(rng.uniform(0.2, 30.0))
            x = float(rng.uniform(0.001, 0.999))
            assert abs(stats.reg_inc_beta(a, b, x) - series_reg_inc_beta(a, b, x)) < 1e-12

    def test_domain_violations(self):
        with pytest.raises(ValueError):
            stats.reg_inc_beta(-1.0, 2.0, 0.5)
        with pytest.raises(ValueError):
            stats.reg_inc_beta(1.0, 2.0, 1.5)


class TestStoredOracles:
    """The library must match the independent reference implementation
    (fixtures produced once by tools/make_stats_fixtures.py)."""

    def test_student_cases(self):
        for row in load_cases():
            if row["kind"] != "student":
                continue
            x, y, stat, p, df = parse(row)
            report = stats.student_t(x, y)
            assert report.statistic == pytest.approx(stat, abs=1e-9)
            assert report.p_value == pytest.approx(p, abs=1e-9)
            assert report.df == df

    def test_welch_cases(self):
        for row in load_cases():
            if row["kind"] != "welch":
                continue
            x, y, stat, p, df = parse(row)
            report = stats.welch_t(x, y)
            assert report.statistic == pytest.approx(stat, abs=1e-9)
            assert report.p_value == pytest.approx(p, abs=1e-9)
            assert report.df == pytest.approx(df, abs=1e-9)

    def test_levene_cases(self):
        for row in load_cases():
            if not row["kind"].startswith("levene"):
                continue
            x, y, stat, p, _ = parse(row)
            center = row["kind"].split("_")[1]
            report = stats.levene(x, y, center=center)
            assert report.statistic == pytest.approx(stat, abs=1e-9)
            assert report.p_value == pytest.approx(p, abs=1e-9)

    def test_pearson_cases(self):
        for row in load_cases():
            if row["kind"] != "pearson":
                continue
            x, y, stat, p, _ = parse(row)
            rho, got_p = stats.pearson(x, y)
            assert rho == pytest.approx(stat, abs=1e-9)
            assert got_p == pytest.approx(p, abs=1e-9)


class TestStudentWelchEdges:
    def test_identical_samples(self):
        x = [1.0, 2.0, 3.0]
        for fn in (stats.student_t, stats.welch_t):
            report = fn(x, list(x))
            assert report.statistic == 0.0
            assert report.p_value == 1.0

    def test_swap_negates_t(self):
        x = [1.0, 2.0, 3.0, 4.0, 5.0]
        y = [2.0, 3.0, 4.0, 5.0, 6.0]
        a = stats.student_t(x, y)
        b = stats.student_t(y, x)
        assert a.statistic == pytest.approx(-b.statistic, abs=1e-15)
        assert a.p_value == pytest.approx(b.p_value, abs=1e-15)

    def test_zero_variance_distinct_means_flagged(self):
        report = stats.student_t([1.0, 1.0], [2.0, 2.0])
        assert report.p_value == 0.0
        assert report.note

    def test_welch_reduces_to_student(self):
        # Equal sizes and exactly equal sample variances: same t, df = 2n-2.
        x = [1.0, 2.0, 3.0, 4.0]
        y = [10.5, 11.5, 12.5, 13.5]  # shifted copy: identical variance
        w = stats.welch_t(x, y)
        s = stats.student_t(x, y)
        assert w.statistic == pytest.approx(s.statistic, abs=1e-12)
        assert w.df == pytest.approx(2 * len(x) - 2, abs=1e-9)
        assert w.p_value == pytest.approx(s.p_value, abs=1e-12)

    def test_too_small_samples(self):
        with pytest.raises(ValueError):
            stats.student_t([1.0], [2.0, 3.0])


class TestLevene:
    def test_shift_invariance(self):
        x = [1.0, 3.0, 2.5, 4.0, 0.5]
        y = [v + 10.0 for v in x]
        report = stats.levene(x, y)
        assert report.statistic == pytest.approx(0.0, abs=1e-12)
        assert report.p_value == pytest.approx(1.0, abs=1e-12)

    def test_all_deviations_zero(self):
        report = stats.levene([5.0, 5.0, 5.0], [7.0, 7.0])
        assert report.p_value == 1.0
        assert report.note

    def test_median_equals_mean_on_symmetric_data(self):
        x = [1.0, 2.0, 3.0, 4.0, 5.0]
        y = [0.0, 5.0, 10.0]
        mean_rep = stats.levene(x, y, center="mean")
        median_rep = stats.levene(x, y, center="median")
        assert mean_rep.statistic == pytest.approx(median_rep.statistic, abs=1e-12)


class TestGatedTTest:
    def test_homoscedastic_chooses_student(self):
        rng = np.random.default_rng(31)
        x = rng.normal(0.0, 1.0, 40).tolist()
        y = rng.normal(0.5, 1.0, 40).tolist()
        report = stats.gated_ttest(x, y)
        assert report.gate["chosen_test"] == "student"
        assert report.gate["levene_p"] >= 0.05

    def test_variance_ratio_ten_chooses_welch(self):
        chose_welch = 0
        n_trials = 200
        for seed in range(n_trials):
            rng = np.random.default_rng(1000 + seed)
            x = rng.normal(0.0, 1.0, 50).tolist()
            y = rng.normal(0.0, math.sqrt(10.0), 50).tolist()
            if stats.gated_ttest(x, y).gate["chosen_test"] == "welch":
                chose_welch += 1
        assert chose_welch / n_trials >= 0.99

    def test_identical_samples_full_path(self):
        x = [1.0, 2.0, 3.0, 4.0]
        report = stats.gated_ttest(x, list(x))
        assert report.gate["levene_p"] == 1.0
        assert report.test_name == "student"
        assert report.p_value == 1.0


class TestPearson:
    def test_affine_dependence(self):
        x = [1.0, 2.0, 3.0, 4.0, 5.0]
        rho, p = stats.pearson(x, [2 * v + 1 for v in x])
        assert rho == 1.0
        assert p < 1e-12

    def test_negation(self):
        x = [1.0, 2.0, 3.0, 5.0]
        rho, _ = stats.pearson(x, [-v for v in x])
        assert rho == -1.0

    def test_constant_rejected(self):
        with pytest.raises(ValueError):
            stats.pearson([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])

    def test_published_pair_large_sample(self):
        # A published (rho, n) pair must reproduce its tabulated p-value.
        rho, n = 0.396, 45
        t = rho * math.sqrt((n - 2) / (1 - rho * rho))
        p = stats.t_two_sided_p(t, n - 2)
        assert p == pytest.approx(0.007, abs=0.001)

    def test_published_pair_small_sample(self):
        rho, n = 0.608, 17
        t = rho * math.sqrt((n - 2) / (1 - rho * rho))
        p = stats.t_two_sided_p(t, n - 2)
        assert p == pytest.approx(0.010, abs=0.002)


class TestDistributionProperties:
    def test_cdf_center_and_monotone(self):
        for df in (1, 2.5, 10, 120):
            assert stats.t_cdf(0.0, df) == 0.5
            values = [stats.t_cdf(t, df) for t in np.linspace(-6, 6, 41)]
            assert all(b >= a for a, b in zip(values, values[1:]))

    def test_p_values_in_unit_interval(self):
        rng = np.random.default_rng(77)
        for _ in range(500):
            t = float(rng.normal(0, 5))
            df = float(rng.uniform(1, 60))
            p = stats.t_two_sided_p(t, df)
            assert 0.0 <= p <= 1.0

    def test_t_quantile_round_trip(self):
        for df in (1, 4, 29):
            for q in (0.6, 0.9, 0.975, 0.999):
                t = stats.t_ppf(q, df)
                assert stats.t_cdf(t, df) == pytest.approx(q, abs=1e-10)
        assert stats.t_ppf(0.975, 1) == pytest.approx(12.7062047, abs=1e-5)
