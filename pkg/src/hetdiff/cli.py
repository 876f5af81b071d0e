"""Command-line front end: ``solve``, ``sweep``, ``walk`` and ``rerun``.

Every run writes its table atomically together with a ``.manifest.json``
that records argv, parameters, seeds, version and output digests. Exit
codes: 0 success, 2 usage, 3 numerical accuracy, 4 I/O.
"""
from __future__ import annotations

import argparse
import ast
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analysis, fd, walker
from .closedform import ClosedFormSolution
from .errors import AccuracyError
from .io import FORMATS, OutputTable, RunManifest, atomic_write, load_table, manifest_path
from .model import Dirac, ModelParams, Sampled, Step, x_to_y, y_to_x

EXIT_OK, EXIT_USAGE, EXIT_ACCURACY, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


# -- argument parsing helpers --------------------------------------------------

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs,
          "tanh": np.tanh, "log": np.log, "cosh": np.cosh, "sinh": np.sinh}
_CONSTS = {"pi": math.pi, "e": math.e}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
          ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def compile_expr(src: str):
    """Vectorised ``f(x)`` from an arithmetic expression over a small whitelist."""
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise UsageError(f"bad expression {src!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise UsageError(f"expression may not contain {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS \
                and node.id != "x":
            raise UsageError(f"unknown name {node.id!r} in expression")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name)
                                               and node.func.id in _FUNCS):
            raise UsageError("only whitelisted functions may be called")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise UsageError("only numeric constants are allowed")
    code = compile(tree, "<expr>", "eval")

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(eval(code, {"__builtins__": {}}, {**_FUNCS, **_CONSTS, "x": x}),
                               x.shape).astype(float)
    return f


def parse_init(text: str, window: float = 10.0):
    """``dirac:x0``, ``step:a:b`` or ``expr:<f(x)>``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "dirac":
            return Dirac(float(rest))
        if kind == "step":
            a, b = rest.split(":")
            return Step(float(a), float(b))
    except ValueError as exc:
        raise UsageError(f"bad initial data {text!r}: {exc}") from None
    if kind == "expr":
        f = compile_expr(rest)
        probe = np.linspace(-window, window, 200_001)
        probe = probe[probe != 0]
        vals = f(probe)
        if not np.all(np.isfinite(vals)) or vals.min() < 0:
            raise UsageError("expression must be finite and nonnegative")
        # dense-sample maximum with headroom as the bound
        return Sampled(left=f, right=f, bound=float(vals.max()) * 1.01)
    raise UsageError(f"unknown initial data kind {kind!r}")


def parse_range(text: str, n_default: int | None = None):
    parts = text.split(":")
    try:
        if len(parts) == 2 and n_default is not None:
            return float(parts[0]), float(parts[1]), n_default
        if len(parts) == 3 and n_default is not None:
            return float(parts[0]), float(parts[1]), int(parts[2])
        if len(parts) == 2:
            return float(parts[0]), float(parts[1])
    except ValueError:
        pass
    raise UsageError(f"bad range {text!r}")


def make_params(eps: float, q: float) -> ModelParams:
    try:
        return ModelParams(eps, q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- commands --------------------------------------------------------------------

def cmd_solve(args) -> tuple:
    params = make_params(args.eps, args.q)
    init = parse_init(args.init)
    times = sorted(args.t)
    lo, hi = parse_range(args.range)
    if args.source == "closed":
        sol = ClosedFormSolution.from_density(init, params)
        coord = np.linspace(lo, hi, args.points)
        # u jumps at the interface; p takes the interface value there
        coord = coord[coord != 0] if args.quantity == "u" else coord
        x = coord if args.space == "x" else y_to_x(coord, params)
        y = x_to_y(coord, params) if args.space == "x" else coord
        off = y != 0
        blocks = []
        for t in times:
            if args.quantity == "u":
                vals = sol.density(t, x)
            else:
                vals = np.full(coord.size, sol.interface(t))
                vals[off] = sol.pressure(t, y[off])
            blocks.append(np.column_stack([np.full(coord.size, t), coord, vals]))
    else:
        form = args.source.split("-")[1]
        dt = args.dt if args.dt else args.dx ** 2
        try:
            scheme = fd.Scheme(form=form, theta=args.theta, dt=dt)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        x0 = init.x0 if isinstance(init, Dirac) else 0.0
        grid = fd.default_grid(params, form, args.dx, times[-1], x0=x0)
        field = fd.solve(init, params, scheme, times, grid)
        coord = field.x_coordinates() if args.space == "x" else field.y_coordinates()
        vals = field.density() if args.quantity == "u" else field.pressure()
        keep = (coord >= lo) & (coord <= hi)
        blocks = [np.column_stack([np.full(keep.sum(), t), coord[keep], v[keep]])
                  for t, v in zip(times, vals)]
    table = OutputTable(("t", args.space, args.quantity), ("", "", ""), np.vstack(blocks),
                        meta={"command": "solve", "source": args.source, "init": args.init,
                              "eps": args.eps, "q": args.q})
    return [(args.out, table)], []


def _q_grid(text: str):
    lo, hi, n = parse_range(text, 50)
    # open interval, staying 0.02 away from the neutral exponent
    q = np.linspace(lo, hi, n + 2)[1:-1]
    return q[np.abs(q - 0.5) >= 0.02]


def cmd_sweep(args) -> tuple:
    if args.curve:
        return _cmd_curve(args)
    if args.q is None:
        raise UsageError("sweep needs --q (or --curve with --q-range)")
    lo, hi, n = parse_range(args.eps_range, 50)
    try:
        spec = analysis.SweepSpec(
            q=args.q, eps=tuple(analysis.log_grid(lo, hi, n)),
            source=analysis.Source(args.source), observable=analysis.Observable(args.observable),
            t_obs=args.t_obs, init=parse_init(args.init) if args.init else None,
            dx=args.dx, delta=args.delta, n_particles=args.n, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tab = analysis.run_sweep(spec)
    ok = tab.ok & (tab.values > 0)
    if not ok.any():
        raise AccuracyError("no eps point produced a positive value")
    data = {"eps": tab.eps[ok], "log10_eps": np.log10(tab.eps[ok]),
            "value": tab.values[ok], "log10_value": np.log10(tab.values[ok])}
    windows = [("full", None)]
    if abs(args.q - 0.5) < analysis.NEAR_NEUTRAL:
        windows.append(("sub", analysis.sub_window(args.q)))
    if args.window:
        windows.append(("user", parse_range(args.window)))
    fits, lines = [], []
    for name, win in windows:
        try:
            f = analysis.fit_table(tab, win)
        except ValueError as exc:
            lines.append(f"{name}: fit failed ({exc})")
            continue
        fits.append([f.window[0], f.window[1], f.k, f.c, f.residual, f.n_points])
        lines.append(f"{name:4s} [{f.window[0]:.3g}, {f.window[1]:.3g}]: "
                     f"k={f.k:.4f} c={f.c:.4f} rms={f.residual:.2e} n={f.n_points}")
    meta = {"command": "sweep", "q": args.q, "source": args.source,
            "observable": args.observable, "t_obs": spec.t_obs,
            "failed_points": int((~tab.ok).sum())}
    if spec.low_precision:
        meta["precision"] = "low"
    table = OutputTable.from_columns(data, meta=meta)
    fit_cols = ("eps_lo", "eps_hi", "k", "c", "rms_residual", "n_points")
    fit_table = OutputTable(fit_cols, ("",) * 6, np.array(fits).reshape(-1, 6), meta)
    return [(args.out, table), (_sibling(args.out, "fit"), fit_table)], lines


def _cmd_curve(args) -> tuple:
    lo, hi, n = parse_range(args.eps_range, 50)
    window = parse_range(args.window) if args.window else analysis.ASYMPTOTIC_WINDOW
    if args.eps_range == DEFAULT_EPS_RANGE:
        lo, hi = window
    qs = _q_grid(args.q_range)
    if qs.size == 0:
        raise UsageError("empty q grid")
    try:
        curve = analysis.exponent_curve(
            qs, analysis.Source(args.source), window=(lo, hi), n_eps=n, dx=args.dx,
            delta=args.delta, n_particles=args.n, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    good = [p for p in curve if p.fit is not None]
    if not good:
        raise AccuracyError("no exponent could be fitted")
    data = {"q": [p.q for p in good], "abs_q_minus_half": [abs(p.q - 0.5) for p in good],
            "k": [p.k for p in good], "c": [p.fit.c for p in good],
            "rms_residual": [p.fit.residual for p in good]}
    meta = {"command": "sweep --curve", "source": args.source, "eps_lo": lo, "eps_hi": hi,
            "failed_q": len(curve) - len(good)}
    lines = []
    if len(good) >= 2:
        slope, icpt = analysis.linear_trend(good)
        meta["trend_slope"] = slope
        lines.append(f"k vs |q-0.5|: slope={slope:.4f} intercept={icpt:.4f}")
    return [(args.out, OutputTable.from_columns(data, meta=meta))], lines


def cmd_walk(args) -> tuple:
    params = make_params(args.eps, args.q)
    init = parse_init(args.init)
    try:
        rule = walker.walk_rule_from_params(params, args.delta)
        lo, hi = parse_range(args.bins)
        edges = walker.default_bins(rule, lo, hi, args.per_bin)
        ens = walker.simulate(rule, init, args.n, args.t, args.seed)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    est = walker.density(ens, edges)
    sol = ClosedFormSolution.from_density(init, params)
    mass = ens.mass if not isinstance(init, Dirac) else 1.0

    def exact(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        nz = x != 0
        out[nz] = sol.density(args.t, x[nz])
        return out

    l1 = walker.l1_distance(est, exact, exact_mass=mass)
    left = walker.left_mass_fraction(ens)
    xg, wg = np.polynomial.legendre.leggauss(8)
    a, b = edges[:-1, None], edges[1:, None]
    cell_exact = (0.5 * (exact(a + 0.5 * (b - a) * (xg + 1)) * wg).sum(axis=1, keepdims=True))[:, 0]
    n = est.values.size
    data = {"x_lo": edges[:-1], "x_hi": edges[1:], "x_mid": est.centers, "density": est.values,
            "exact": cell_exact, "abs_diff": np.abs(est.values - cell_exact),
            "l1_distance": np.full(n, l1), "left_mass_fraction": np.full(n, left)}
    meta = {"command": "walk", "eps": args.eps, "q": args.q, "delta": args.delta,
            "n": args.n, "t": args.t, "seed": args.seed, "init": args.init}
    lines = [f"L1 distance to closed form: {l1:.4f}", f"left mass fraction: {left:.6f}"]
    return [(args.out, OutputTable.from_columns(data, meta=meta))], lines


def cmd_rerun(args) -> tuple:
    try:
        man = RunManifest.load(args.manifest)
    except (OSError, ValueError, TypeError) as exc:
        raise OSError(f"cannot read manifest {args.manifest}: {exc}") from None
    argv = list(man.command)
    out_dir = Path(args.out_dir)
    originals = list(man.outputs)
    new_out = out_dir / Path(_out_of(argv)).name
    argv = _replace_out(argv, str(new_out))
    code = main(argv, _quiet=True)
    if code != EXIT_OK:
        return [], [f"rerun exited with code {code}"], code
    base = Path(args.manifest).parent
    lines, same = [], True
    for name in originals:
        old, new = base / name, out_dir / name
        if not old.exists():
            lines.append(f"{name}: original missing, skipped")
            continue
        eq = load_table(old) == load_table(new)
        same &= eq
        lines.append(f"{name}: {'identical' if eq else 'DIFFERENT'}")
    return [], lines, EXIT_OK if same else EXIT_ACCURACY


def _out_of(argv):
    for i, a in enumerate(argv):
        if a == "--out":
            return argv[i + 1]
        if a.startswith("--out="):
            return a.split("=", 1)[1]
    return _default_out(argv[0], _fmt_of(argv) or "csv")


def _fmt_of(argv):
    for i, a in enumerate(argv):
        if a == "--format":
            return argv[i + 1]
        if a.startswith("--format="):
            return a.split("=", 1)[1]
    return None


def _replace_out(argv, out):
    res, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        res.append(a)
    return res + ["--out", out]


def _sibling(path: str, tag: str) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{tag}{p.suffix}"))


def _default_out(cmd: str, fmt_tag: str) -> str:
    return f"{cmd}.{fmt_tag}"


# -- parser ----------------------------------------------------------------------

DEFAULT_EPS_RANGE = "1e-4:1:50"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hetdiff",
        description="Diffusion across a diffusivity jump: closed form, finite volumes, "
                    "random walks and eps-sweeps. HETDIFF_THREADS caps worker threads.")
    p.add_argument("--version", action="version", version=f"hetdiff {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, seed=False):
        sp.add_argument("--out", help="output file (default: <command>.<format>)")
        sp.add_argument("--format", choices=FORMATS, default=None,
                        help="table format (default: from the --out suffix, else csv)")
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="random seed")

    s = sub.add_parser("solve", help="snapshot tables of u or p")
    s.add_argument("--source", choices=("closed", "fd-y", "fd-x"), default="closed",
                   help="closed form or finite volumes in y or x")
    s.add_argument("--init", required=True, help="dirac:X0 | step:A:B | expr:F(x)")
    s.add_argument("--eps", type=float, required=True, help="left diffusivity")
    s.add_argument("--q", type=float, required=True, help="diffusion-law exponent")
    s.add_argument("--t", type=float, nargs="+", required=True, help="snapshot times")
    s.add_argument("--space", choices=("x", "y"), default="x", help="output coordinate")
    s.add_argument("--quantity", choices=("u", "p"), default="u", help="density or pressure")
    s.add_argument("--range", default="-1:2", help="coordinate range LO:HI of the output")
    s.add_argument("--points", type=int, default=301, help="closed-form sample points")
    s.add_argument("--dx", type=float, default=0.002, help="FD right-side cell width")
    s.add_argument("--dt", type=float, default=None, help="FD time step (default dx**2)")
    s.add_argument("--theta", type=float, default=1.0, help="time weighting in [0.5, 1]")
    common(s)

    w = sub.add_parser("sweep", help="eps-sweep of a boundary observable with power-law fits")
    w.add_argument("--q", type=float, help="diffusion-law exponent")
    w.add_argument("--observable", choices=("value", "slope"), default="value",
                   help="u(t,0+) or du/dx(t,0+)")
    w.add_argument("--source", choices=[s_.value for s_ in analysis.Source], default="closed",
                   help="where values come from")
    w.add_argument("--eps-range", default=DEFAULT_EPS_RANGE,
                   help="LO:HI[:N] log-spaced eps grid (curve default: the fit window)")
    w.add_argument("--t-obs", type=float, default=None,
                   help="observation time (default 0.01 for value, 0.1 for slope)")
    w.add_argument("--init", default=None,
                   help="initial data (default step:1:1 for value, dirac:1 for slope)")
    w.add_argument("--window", default=None, help="extra fit window LO:HI")
    w.add_argument("--curve", action="store_true", help="fit k for every q in --q-range")
    w.add_argument("--q-range", default="0.5:1:50", help="LO:HI:N open q grid for --curve")
    w.add_argument("--dx", type=float, default=0.002, help="FD right-side cell width")
    w.add_argument("--delta", type=float, default=0.01, help="walker scale")
    w.add_argument("--n", type=int, default=200_000, help="walker particles")
    common(w, seed=True)

    k = sub.add_parser("walk", help="random-walk density against the closed form")
    k.add_argument("--eps", type=float, required=True, help="left diffusivity")
    k.add_argument("--q", type=float, required=True, help="diffusion-law exponent")
    k.add_argument("--delta", type=float, default=0.01, help="walk scale")
    k.add_argument("--n", type=int, default=1_000_000, help="particles")
    k.add_argument("--t", type=float, default=0.1, help="horizon")
    k.add_argument("--init", default="dirac:0.5", help="dirac:X0 | step:A:B | expr:F(x)")
    k.add_argument("--bins", default="-3:3", help="histogram range LO:HI")
    k.add_argument("--per-bin", type=int, default=4, help="lattice sites per bin")
    common(k, seed=True)

    r = sub.add_parser("rerun", help="repeat a run from its manifest and compare tables")
    r.add_argument("manifest", help="path to a .manifest.json")
    r.add_argument("--out-dir", required=True, help="directory for the repeated outputs")
    return p


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "walk": cmd_walk, "rerun": cmd_rerun}


def _jsonable(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return str(v)


def main(argv=None, _quiet: bool = False) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    say = (lambda *_: None) if _quiet else print
    start = time.perf_counter()
    try:
        if args.cmd != "rerun":
            if args.format is None:
                args.format = "json" if str(args.out).endswith(".json") else "csv"
            if args.out is None:
                args.out = _default_out(args.cmd, args.format)
        result = COMMANDS[args.cmd](args)
        outputs, lines = result[0], result[1]
        code = result[2] if len(result) > 2 else EXIT_OK
        params = {k_: _jsonable(v) for k_, v in sorted(vars(args).items())}
        man = RunManifest(command=argv, params=params,
                          seeds=[args.seed] if hasattr(args, "seed") else [],
                          version=__version__)
        digests = {}
        for path, table in outputs:
            if args.format == "json":
                table_text = table.to_json(man.to_dict() | {"outputs": {}, "wall_time": 0.0})
            else:
                table_text = table.to_csv()
            digests[Path(path).name] = atomic_write(path, table_text)
        if outputs:
            man.wall_time = time.perf_counter() - start
            man.outputs = digests
            atomic_write(manifest_path(outputs[0][0]), man.to_json())
        for line in lines:
            say(line)
        for path, _ in outputs:
            say(f"wrote {path}")
        return code
    except UsageError as exc:
        print(f"hetdiff: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"hetdiff: numerical failure: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except OSError as exc:
        print(f"hetdiff: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
