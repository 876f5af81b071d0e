"""Fitted exponent k against q on both sides of q = 0.5.

50 values of q in (0.5, 1) use the boundary value and 50 in (0, 0.5) the
boundary slope. Each curve is fitted on the grid [1e-4, 1] and
on the asymptotic window [1e-6, 1e-3], where k should follow |q - 0.5|.
"""
import argparse
from pathlib import Path

import numpy as np

from hetdiff.analysis import ASYMPTOTIC_WINDOW, exponent_curve, linear_trend
from hetdiff.io import OutputTable, atomic_write


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results", help="output directory")
    ap.add_argument("--n-q", type=int, default=50, help="q values per side")
    args = ap.parse_args()
    out = Path(args.out_dir)
    for side, (lo, hi) in (("dirichlet", (0.5, 1.0)), ("neumann", (0.0, 0.5))):
        q = np.linspace(lo, hi, args.n_q + 2)[1:-1]
        q = q[np.abs(q - 0.5) >= 0.02]
        for label, window in (("full", (1e-4, 1.0)), ("asymptotic", ASYMPTOTIC_WINDOW)):
            curve = exponent_curve(q, window=window)
            slope, icpt = linear_trend(curve)
            rows = [[p.q, abs(p.q - 0.5), p.k] for p in curve if p.fit is not None]
            tab = OutputTable(("q", "abs_q_minus_half", "k"), (), rows,
                              {"window": f"{window[0]:g}:{window[1]:g}", "trend_slope": slope})
            atomic_write(out / f"exponent_curve_{side}_{label}.csv", tab.to_csv())
            print(f"{side:9s} {label:10s}: k = {slope:.3f} * |q - 0.5| {icpt:+.3f}")


if __name__ == "__main__":
    main()
