"""Compare the Coef_1..4 polynomials with coefficients extracted numerically.

The reference is a least-squares fit in q near 0 of I/C^2 built from the
kernel and its q-derivative.  Printed orders 1 and 2 disagree with it; the
corrected forms and printed orders 3 and 4 agree.

Example: python scripts/coef_audit.py --samples 10
"""

import argparse

import numpy as np
from numpy.polynomial import polynomial as P

from apsis import series


def fit_coeffs(alpha: float, s: float, n_nodes: int = 12, qmax: float = 0.12) -> np.ndarray:
    def i_over_c2(q):
        e_s, e_r = series.kernel(alpha, s, q), series.kernel(alpha, 1 - s, q)
        d_s, d_r = series.kernel_dq(alpha, s, q), series.kernel_dq(alpha, 1 - s, q)
        return (d_s * (1 + e_r) ** 2 + d_r * (1 + e_s) ** 2) / series.c_alpha(alpha, q) ** 2

    x = np.cos(np.pi * (np.arange(n_nodes) + 0.5) / n_nodes)
    qs = qmax * (x + 1) / 2 + 1e-4
    y = np.array([i_over_c2(q) for q in qs])
    return P.polyfit(qs / qmax, y, n_nodes - 1) / qmax ** np.arange(n_nodes)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--seed", type=int, default=12)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'alpha':>7} {'s':>7} {'p':>2} {'fit':>14} {'printed':>14} {'corrected':>14}")
    for _ in range(args.samples):
        a, s = rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)
        fit = fit_coeffs(a, s)
        for p in range(1, 5):
            corr = series.coef_poly(a, s, p, corrected=True) if p <= 2 else float("nan")
            print(f"{a:7.4f} {s:7.4f} {p:2d} {fit[p]:14.8f} {series.coef_poly(a, s, p):14.8f} {corr:14.8f}")


if __name__ == "__main__":
    main()
