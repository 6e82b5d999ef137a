"""Two-sample test battery and the special functions backing it.

Implements the regularized incomplete beta function (continued fraction),
t and F tail probabilities built on it, Student's and Welch's t-tests,
Levene's variance test, the Levene-gated test chooser, and Pearson
correlation with two-sided p-values. All tests are two-sided.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence


@dataclass
class TestReport:
    test_name: str
    statistic: float
    df: float
    p_value: float
    gate: dict = field(default_factory=dict)
    note: str = ""


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].

    Continued-fraction evaluation (modified Lentz), switching to the
    symmetric form 1 - I_{1-x}(b, a) for fast convergence on either side.
    """
    if a <= 0 or b <= 0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _betacf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 1e-16) -> float:
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction stalled after {max_iter} iterations")


def t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError(f"df must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    return reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    p = t_two_sided_p(t, df)
    return 1.0 - 0.5 * p if t >= 0 else 0.5 * p


def t_ppf(q: float, df: float) -> float:
    """Student's t quantile by bisection on the CDF (monotone, exact at 0.5)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must be in (0, 1), got {q}")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -t_ppf(1.0 - q, df)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < q:
        hi *= 2.0
        if hi > 1e18:
            raise ArithmeticError("t quantile bracket expansion failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def f_sf(w: float, d1: float, d2: float) -> float:
    """Upper-tail probability of the F distribution, P(F >= w)."""
    if w < 0:
        return 1.0
    if d1 <= 0 or d2 <= 0:
        raise ValueError("F degrees of freedom must be positive")
    return reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * w))


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def _sample_var(xs: Sequence[float], mean: float) -> float:
    return math.fsum((x - mean) ** 2 for x in xs) / (len(xs) - 1)


def _check_samples(x: Sequence[float], y: Sequence[float], min_n: int = 2):
    if len(x) < min_n or len(y) < min_n:
        raise ValueError(f"both samples need at least {min_n} observations")


def student_t(x: Sequence[float], y: Sequence[float]) -> TestReport:
    """Pooled-variance two-sample t-test, df = n1 + n2 - 2."""
    _check_samples(x, y)
    n1, n2 = len(x), len(y)
    m1, m2 = _mean(x), _mean(y)
    df = n1 + n2 - 2
    sp2 = ((n1 - 1) * _sample_var(x, m1) + (n2 - 1) * _sample_var(y, m2)) / df
    if sp2 == 0.0:
        if m1 == m2:
            return TestReport("student", 0.0, df, 1.0, note="zero pooled variance")
        t = math.inf if m1 > m2 else -math.inf
        return TestReport("student", t, df, 0.0, note="zero pooled variance, distinct means")
    t = (m1 - m2) / math.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))
    return TestReport("student", t, df, t_two_sided_p(t, df))


def welch_t(x: Sequence[float], y: Sequence[float]) -> TestReport:
    """Welch's unequal-variance t-test with Welch-Satterthwaite df."""
    _check_samples(x, y)
    n1, n2 = len(x), len(y)
    m1, m2 = _mean(x), _mean(y)
    v1, v2 = _sample_var(x, m1), _sample_var(y, m2)
    if v1 == 0.0 and v2 == 0.0:
        if m1 == m2:
            return TestReport("welch", 0.0, n1 + n2 - 2, 1.0, note="zero variances")
        t = math.inf if m1 > m2 else -math.inf
        return TestReport("welch", t, n1 + n2 - 2, 0.0, note="zero variances, distinct means")
    se2 = v1 / n1 + v2 / n2
    t = (m1 - m2) / math.sqrt(se2)
    df = se2 * se2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
    return TestReport("welch", t, df, t_two_sided_p(t, df))


def levene(x: Sequence[float], y: Sequence[float], center: str = "mean") -> TestReport:
    """Levene's equality-of-variance test (Brown-Forsythe with center='median')."""
    _check_samples(x, y)
    if center == "mean":
        c1, c2 = _mean(x), _mean(y)
    elif center == "median":
        c1, c2 = _median(x), _median(y)
    else:
        raise ValueError(f"center must be 'mean' or 'median', got {center!r}")
    z1 = [abs(v - c1) for v in x]
    z2 = [abs(v - c2) for v in y]
    n1, n2 = len(z1), len(z2)
    n = n1 + n2
    zb1, zb2 = _mean(z1), _mean(z2)
    zbar = math.fsum(z1 + z2) / n
    num = n1 * (zb1 - zbar) ** 2 + n2 * (zb2 - zbar) ** 2
    den = math.fsum((z - zb1) ** 2 for z in z1) + math.fsum((z - zb2) ** 2 for z in z2)
    df = n - 2
    if den == 0.0:
        if num == 0.0:
            return TestReport("levene", 0.0, df, 1.0, note="all deviations zero")
        return TestReport("levene", math.inf, df, 0.0, note="zero within-group deviation spread")
    w = (n - 2) * num / den
    return TestReport("levene", w, df, f_sf(w, 1, n - 2))


def gated_ttest(x: Sequence[float], y: Sequence[float], gate_alpha: float = 0.05) -> TestReport:
    """Levene-gated t-test: Welch when variances differ, Student otherwise."""
    gate = levene(x, y, center="mean")
    if gate.p_value < gate_alpha:
        report = welch_t(x, y)
    else:
        report = student_t(x, y)
    report.gate = {"levene_p": gate.p_value, "chosen_test": report.test_name}
    return report


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson correlation and its two-sided p-value (df = n - 2)."""
    if len(x) != len(y):
        raise ValueError("samples must have equal length")
    n = len(x)
    if n < 3:
        raise ValueError("pearson needs at least 3 paired observations")
    mx, my = _mean(x), _mean(y)
    sxx = math.fsum((v - mx) ** 2 for v in x)
    syy = math.fsum((v - my) ** 2 for v in y)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("pearson undefined for constant input")
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    rho = sxy / math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, rho))
    df = n - 2
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * math.sqrt(df / (1.0 - rho * rho))
    return rho, t_two_sided_p(t, df)


def significance_stars(p: float) -> str:
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def _median(xs: Sequence[float]) -> float:
    s = sorted(xs)
    n = len(s)
    mid = n // 2
    if n % 2:
        return s[mid]
    return 0.5 * (s[mid - 1] + s[mid])


def write_stats_report(path, rows: Sequence[dict], header_line: str | None = None):
    """Emit stats_report.csv mirroring the per-category test tables."""
    columns = ["scope", "group", "category", "n_x", "n_y", "levene_p", "test", "statistic", "p", "stars"]
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})
