"""One-time generator for the stored statistical oracle fixtures.

Computes reference statistics with scipy (an independent, widely validated
implementation) and freezes them into tests/data/stats_oracle_cases.csv.
The library and its tests never import scipy; they only read the CSV.

Run from the repo root:  python tools/make_stats_fixtures.py
"""

import csv
from pathlib import Path

import numpy as np
from scipy import stats as sps

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "stats_oracle_cases.csv"


def main():
    rng = np.random.default_rng(20230531)
    cases = []

    def add(case_id, kind, x, y, stat, p, df):
        cases.append(
            {
                "case_id": case_id,
                "kind": kind,
                "x": ";".join(repr(float(v)) for v in x),
                "y": ";".join(repr(float(v)) for v in y),
                "statistic": repr(float(stat)),
                "p": repr(float(p)),
                "df": repr(float(df)),
            }
        )

    x = [1.0, 2.0, 3.0, 4.0, 5.0]
    y = [2.0, 3.0, 4.0, 5.0, 6.0]
    r = sps.ttest_ind(x, y, equal_var=True)
    add("student_shifted", "student", x, y, r.statistic, r.pvalue, r.df)

    x = rng.normal(0.0, 1.0, 12)
    y = rng.normal(0.4, 1.0, 17)
    r = sps.ttest_ind(x, y, equal_var=True)
    add("student_random", "student", x, y, r.statistic, r.pvalue, r.df)

    x = rng.normal(0.0, 1.0, 10)
    y = rng.normal(0.8, 3.0, 25)
    r = sps.ttest_ind(x, y, equal_var=False)
    add("welch_hetero", "welch", x, y, r.statistic, r.pvalue, r.df)

    x = rng.normal(5.0, 0.5, 8)
    y = rng.normal(4.2, 2.5, 9)
    r = sps.ttest_ind(x, y, equal_var=False)
    add("welch_small", "welch", x, y, r.statistic, r.pvalue, r.df)

    x = rng.normal(0.0, 1.0, 30)
    y = rng.normal(0.0, 2.0, 28)  # variance ratio 4
    w, p = sps.levene(x, y, center="mean")
    add("levene_ratio4_mean", "levene_mean", x, y, w, p, len(x) + len(y) - 2)
    w, p = sps.levene(x, y, center="median")
    add("levene_ratio4_median", "levene_median", x, y, w, p, len(x) + len(y) - 2)

    x = rng.normal(0.0, 1.0, 40)
    y = 0.6 * x + rng.normal(0.0, 0.8, 40)
    r = sps.pearsonr(x, y)
    add("pearson_correlated", "pearson", x, y, r.statistic, r.pvalue, len(x) - 2)

    x = rng.normal(0.0, 1.0, 25)
    y = rng.normal(0.0, 1.0, 25)
    r = sps.pearsonr(x, y)
    add("pearson_null", "pearson", x, y, r.statistic, r.pvalue, len(x) - 2)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["case_id", "kind", "x", "y", "statistic", "p", "df"])
        writer.writeheader()
        writer.writerows(cases)
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
