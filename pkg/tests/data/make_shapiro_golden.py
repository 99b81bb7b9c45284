"""Regenerate the Shapiro-Wilk golden file from scipy's reference implementation.

The golden file freezes both the input samples and the (W, p) values so the
check stays valid even if the random-stream internals of numpy change.

Run from the repository root:

    python3 tests/data/make_shapiro_golden.py
"""

import numpy as np
from scipy import stats

OUT = "tests/data/shapiro_golden.npz"

SIZES = [10, 50, 500, 4999]
SHAPES = ["normal", "uniform", "exponential", "bimodal", "lognormal"]


def make_sample(rng, shape, n):
    if shape == "normal":
        return rng.normal(size=n)
    if shape == "uniform":
        return rng.uniform(-1.0, 1.0, size=n)
    if shape == "exponential":
        return rng.exponential(1.0, size=n)
    if shape == "bimodal":
        half = n // 2
        return np.concatenate(
            [rng.normal(-3.0, 0.5, size=half), rng.normal(3.0, 0.5, size=n - half)]
        )
    if shape == "lognormal":
        return rng.lognormal(0.0, 1.0, size=n)
    raise ValueError(shape)


def main():
    rng = np.random.default_rng(815)
    arrays = {}
    names, ws, ps = [], [], []
    for n in SIZES:
        for shape in SHAPES:
            name = f"{shape}_{n}"
            x = make_sample(rng, shape, n)
            res = stats.shapiro(x)
            arrays[f"x_{name}"] = x
            names.append(name)
            ws.append(float(res.statistic))
            ps.append(float(res.pvalue))
    arrays["names"] = np.array(names)
    arrays["w"] = np.array(ws)
    arrays["p"] = np.array(ps)
    np.savez(OUT, **arrays)
    print(f"wrote {OUT}: {len(names)} samples")


if __name__ == "__main__":
    main()
