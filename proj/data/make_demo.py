"""Regenerates data/demo.csv: n=200 rows, p=40 features, binary outcome.

Features f01..f39 are standard normal with a correlated block (f01-f05);
"site" is a 3-level categorical coded 0, 1, 2. The outcome follows a logistic
model on f01, f02, f10, f20 and site; about 2% of feature cells are blank.
"""
import csv
import pathlib

import numpy as np

N, P_CONT = 200, 39
SEED = 20240517


def main() -> None:
    rng = np.random.default_rng(SEED)
    x = rng.standard_normal((N, P_CONT))
    shared = rng.standard_normal(N)
    x[:, :5] = 0.6 * shared[:, None] + 0.8 * x[:, :5]
    site = rng.integers(0, 3, N)
    lp = -0.2 + 1.2 * x[:, 0] - 1.0 * x[:, 1] + 0.9 * x[:, 9] + 0.8 * x[:, 19] + 0.5 * (site == 2)
    y = (rng.uniform(size=N) < 1.0 / (1.0 + np.exp(-lp))).astype(int)
    missing = rng.uniform(size=(N, P_CONT)) < 0.02

    out = pathlib.Path(__file__).with_name("demo.csv")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j + 1:02d}" for j in range(P_CONT)] + ["site", "response"])
        for i in range(N):
            row = ["" if missing[i, j] else f"{x[i, j]:.6f}" for j in range(P_CONT)]
            w.writerow(row + [str(site[i]), "yes" if y[i] else "no"])


if __name__ == "__main__":
    main()
