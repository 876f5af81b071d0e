"""Snapshots of u(t, x) and p(t, y) for unit-step data, q = 0.9, eps = 2^-k.

Solves the x-form and the y-form with finite volumes at dx = 0.002 and
t = 0.01 and writes one long table per form. On x > 0 the two agree.
"""
import argparse
from pathlib import Path

import numpy as np

from hetdiff.fd import Scheme, boundary_readouts, default_grid, solve
from hetdiff.io import OutputTable, atomic_write
from hetdiff.model import ModelParams, Step


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results", help="output directory")
    ap.add_argument("--dx", type=float, default=0.002, help="right-side cell width")
    ap.add_argument("--t", type=float, default=0.01, help="snapshot time")
    ap.add_argument("--q", type=float, default=0.9, help="diffusion-law exponent")
    args = ap.parse_args()
    out = Path(args.out_dir)
    init = Step(1.0, 1.0)
    for form, coord, qty in (("x", "x", "u"), ("y", "y", "p")):
        rows = []
        for k in (1, 2, 3, 4):
            p = ModelParams(2.0 ** -k, args.q)
            grid = default_grid(p, form, args.dx, args.t)
            f = solve(init, p, Scheme(form, 1.0, args.dx ** 2), args.t, grid)
            c = f.x_coordinates() if coord == "x" else f.y_coordinates()
            v = f.density()[0] if qty == "u" else f.pressure()[0]
            keep = (c > -1) & (c < 1)
            rows.append(np.column_stack([np.full(keep.sum(), p.eps), c[keep], v[keep]]))
            if form == "x":
                print(f"eps=2^-{k}: u(t,0+) = {boundary_readouts(f, p)[0]:.6f}")
        tab = OutputTable(("eps", coord, qty), ("", "", ""), np.vstack(rows),
                          {"init": "step:1:1", "q": args.q, "t": args.t, "dx": args.dx})
        path = out / f"step_snapshots_{form}.csv"
        atomic_write(path, tab.to_csv())
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
