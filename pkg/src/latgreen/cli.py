"""Command-line interface: ``latgreen {constants,green,asymptote,oracle,verify}``.

Data goes to ``--output`` (or stdout), diagnostics to stderr.  Every float
is written with 12 significant digits and rows are ordered by ``|x|``, so
a fixed configuration always produces the same bytes.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .asymptotics import SCHEMA_VERSION, build_report, fmt
from .lattice import (ModelSpecError, StepDistribution, as_point, builtin_model,
                      green_mc_oracle, green_series_oracle_many, load_model_spec,
                      mc_step_cap, visit_sequence)
from .quadrature import QuadratureGrid
from .smoothing import DEFAULT_INNER, DEFAULT_OUTER, make_bump
from .symbols import constants, green_symbol, h_at_zero
from .transform import (I1_BASE, I2_BASE, AliasingError, ConvergenceError, decompose,
                        default_grid)

GREEN_COLUMNS = ["L", "x", "i1", "i2", "f", "method_tag", "error_estimate"]
ORACLE_COLUMNS = ["L", "x", "series", "tail_estimate", "mc_mean", "mc_stderr",
                  "mc_steps", "series_at_mc_depth"]
CONSTANT_COLUMNS = ["d", "model", "a_d", "n_d", "p_d", "q_d", "h0"]


class CLIError(Exception):
    """A user-facing failure; the message is printed without a traceback."""


# -- configuration --------------------------------------------------------

def _parse_point(text: str, d: int) -> tuple[int, ...]:
    try:
        parts = [int(c) for c in text.replace(" ", "").split(",") if c != ""]
    except ValueError:
        raise CLIError(f"bad lattice point {text!r}; expected comma-separated integers") from None
    if len(parts) != d:
        raise CLIError(f"lattice point {text!r} has {len(parts)} coordinates, need {d}")
    return as_point(parts, d)


def load_model(name: str, dim: int | None) -> StepDistribution:
    """Built-in name (``srw``, ``spread-out-R``) or a model-spec JSON path."""
    if name == "srw" or name.startswith("spread-out-"):
        if dim is None:
            raise CLIError("--dim is required for built-in models")
        return builtin_model(name, dim)
    D = load_model_spec(name)
    if dim is not None and D.dim != dim:
        raise CLIError(f"model file has dim {D.dim} but --dim is {dim}")
    return D


def sweep_points(args, d: int) -> list[tuple[int, ...]]:
    pts = [_parse_point(t, d) for t in (args.x or [])]
    if args.L_min is not None or args.L_max is not None:
        if args.L_min is None or args.L_max is None:
            raise CLIError("an axis sweep needs both --L-min and --L-max")
        if args.L_step <= 0 or args.L_min < 0 or args.L_max < args.L_min:
            raise CLIError("need 0 <= L-min <= L-max and L-step > 0")
        pts += [(L,) + (0,) * (d - 1) for L in range(args.L_min, args.L_max + 1, args.L_step)]
    return sorted(set(pts), key=lambda p: (sum(c * c for c in p), p))


def run_config(args, d: int, model_id: str) -> dict:
    """The configuration echo written to every output."""
    cfg = {"command": args.command, "dim": d, "model": model_id, "version": __version__}
    for key in ("grid_n", "bump_inner", "bump_outer", "epsilon", "L_min", "L_max", "L_step",
                "seed", "domain_radius", "method", "walks", "n_max", "jobs"):
        if hasattr(args, key) and getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if getattr(args, "L_min", None) is None:
        cfg.pop("L_step", None)
    if getattr(args, "x", None):
        cfg["x"] = list(args.x)
    return cfg


def _bump(args, d):
    try:
        return make_bump(d, args.bump_inner, args.bump_outer)
    except ValueError as exc:
        raise CLIError(str(exc)) from None


def _check_grid(args, pts):
    if args.grid_n is None or not pts:
        return None
    ext = max(max(abs(c) for c in p) for p in pts)
    if 8 * ext > args.grid_n:
        raise AliasingError(f"--grid-n {args.grid_n} is too small for |x|_inf = {ext}; "
                            f"need at least {8 * ext} nodes per axis")
    return args.grid_n


# -- output ---------------------------------------------------------------

def _header(cfg: dict) -> str:
    return (f"# schema_version={SCHEMA_VERSION} config="
            + json.dumps(cfg, sort_keys=True, separators=(",", ":")) + "\n")


def render(rows: list[dict], columns: list[str], cfg: dict, fmt_name: str,
           extra: dict | None = None) -> str:
    if fmt_name == "json":
        doc = {"schema_version": SCHEMA_VERSION, "config": cfg,
               "rows": [{k: _json_value(r[k]) for k in columns} for r in rows]}
        doc.update(extra or {})
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(_header(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_value(r[k]) for k in columns])
    return buf.getvalue()


def _csv_value(v):
    if isinstance(v, tuple):
        return " ".join(str(c) for c in v)
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return "" if v is None else str(v)


def _json_value(v):
    if isinstance(v, tuple):
        return list(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(fmt(v)) if math.isfinite(v) else str(v)
    return v


def emit(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _norm(p) -> float:
    return math.sqrt(sum(c * c for c in p))


# -- commands -------------------------------------------------------------

def cmd_constants(args) -> int:
    if args.dim is not None and args.dim < 3:
        raise CLIError(f"dimension must be >= 3, got {args.dim}")
    D = load_model(args.model, args.dim)
    d = D.dim
    if d < 3:
        raise CLIError(f"dimension must be >= 3, got {d}")
    c = constants(d) if args.p is None else constants(d, args.p)
    row = {"d": d, "model": args.model, "a_d": c.a_d, "n_d": c.n_d, "p_d": c.p_d,
           "q_d": c.q_d, "h0": h_at_zero(D)}
    emit(render([row], CONSTANT_COLUMNS, run_config(args, d, args.model), args.format),
         args.output)
    return 0


def _green_chunk(job):
    # worker entry point: rebuilds everything from plain data so it can be pickled
    model, dim, inner, outer, method, i1, i2, radius, pts = job
    D = load_model(model, dim)
    f = green_symbol(D)
    chi = make_bump(D.dim, inner, outer)
    return decompose(f, chi, pts, method=method, i1_grid=i1, i2_grid=i2, domain_radius=radius)


def _chunks(pts, jobs):
    jobs = max(1, min(jobs, len(pts)))
    return [pts[i::jobs] for i in range(jobs)]


def cmd_green(args) -> int:
    D = load_model(args.model, args.dim)
    d = D.dim
    pts = sweep_points(args, d)
    chi = _bump(args, d)
    green_symbol(D)  # model checks before any quadrature
    grid_n = _check_grid(args, pts)
    cfg = run_config(args, d, args.model)
    results = []
    if pts:
        # grids depend on the whole sweep, not on how it is split across workers
        i2 = QuadratureGrid(d, grid_n) if grid_n else default_grid(I2_BASE, d, pts)
        i1 = default_grid(I1_BASE, d, pts, chi.r_outer) if args.method == "subtraction" else None
        base = (args.model, d, args.bump_inner, args.bump_outer, args.method, i1, i2,
                args.domain_radius)
        jobs = [base + (chunk,) for chunk in _chunks(pts, args.jobs)]
        if len(jobs) == 1:
            results = _green_chunk(jobs[0])
        else:
            with ProcessPoolExecutor(len(jobs)) as pool:
                for part in pool.map(_green_chunk, jobs):
                    results.extend(part)
    results.sort(key=lambda r: (sum(c * c for c in r.x), r.x))
    rows, failed = [], 0
    for r in results:
        val = float(np.real(r.f_total))
        err = float(r.error_estimate)
        if not math.isfinite(err) or err > args.rtol * max(abs(val), 1e-300):
            failed += 1
            print(f"error estimate {err:.3g} at {r.x} exceeds rtol {args.rtol:g}", file=sys.stderr)
        rows.append({"L": _norm(r.x), "x": r.x, "i1": float(np.real(r.i1)),
                     "i2": float(np.real(r.i2)), "f": val, "method_tag": r.method_tag,
                     "error_estimate": err})
    emit(render(rows, GREEN_COLUMNS, cfg, args.format), args.output)
    return 3 if failed else 0


def cmd_asymptote(args) -> int:
    D = load_model(args.model, args.dim)
    d = D.dim
    if args.L_min is None or args.L_max is None:
        raise CLIError("asymptote needs an axis sweep (--L-min, --L-max)")
    pts = sweep_points(args, d)
    if not any(_norm(p) > 0 for p in pts):
        raise CLIError("the sweep contains no nonzero points")
    chi = _bump(args, d)
    f = green_symbol(D)
    grid_n = _check_grid(args, pts)
    cfg = run_config(args, d, args.model)
    report = build_report(f, chi, [p for p in pts if _norm(p) > 0], model_id=args.model,
                          config=cfg, method=args.method, epsilon=args.epsilon,
                          domain_radius=args.domain_radius,
                          i2_grid=QuadratureGrid(d, grid_n) if grid_n else None)
    if args.format == "json":
        text = report.to_json()
    else:
        text = _header(cfg) + report.to_csv().split("\n", 1)[1]
    emit(text, args.output)
    bad = [r for r in report.rows
           if not math.isfinite(r.error_estimate) or r.error_estimate > args.rtol * abs(r.f)]
    for r in bad:
        print(f"error estimate {r.error_estimate:.3g} at {r.x} exceeds rtol {args.rtol:g}",
              file=sys.stderr)
    if report.fit_absolute:
        print("f changes sign along the sweep; the exponent was fitted to |f|", file=sys.stderr)
    return 3 if bad else 0


def cmd_oracle(args) -> int:
    D = load_model(args.model, args.dim)
    d = D.dim
    pts = sweep_points(args, d)
    cfg = run_config(args, d, args.model)
    use_mc = D.nonnegative and args.walks > 0
    if not D.nonnegative:
        print("step weights are not all nonnegative; Monte Carlo columns are left empty",
              file=sys.stderr)
    rows, failed = [], 0
    if pts:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            series = green_series_oracle_many(D, pts, args.n_max, args.tail_tol)
        for w in caught:
            print(str(w.message), file=sys.stderr)
        failed += len(caught)
        caps = [mc_step_cap(D, p) for p in pts] if use_mc else []
        depth_sums = []
        if use_mc:
            seq = visit_sequence(D, pts, max(caps))
            depth_sums = [math.fsum(row[:c + 1]) for row, c in zip(seq, caps)]
        for i, (p, s) in enumerate(zip(pts, series)):
            row = {"L": _norm(p), "x": p, "series": float(s.value),
                   "tail_estimate": float(s.tail_estimate), "mc_mean": None,
                   "mc_stderr": None, "mc_steps": None, "series_at_mc_depth": None}
            if use_mc:
                mc = green_mc_oracle(D, p, args.walks, args.seed, max_steps=caps[i])
                row.update(mc_mean=float(mc.mean), mc_stderr=float(mc.stderr), mc_steps=caps[i],
                           series_at_mc_depth=depth_sums[i])
            rows.append(row)
    emit(render(rows, ORACLE_COLUMNS, cfg, args.format), args.output)
    return 3 if failed else 0


def cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(only=args.only, log=lambda s: print(s, file=sys.stderr))
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
    emit("\n".join(lines) + "\n", args.output)
    return 0 if all(r.passed for r in results) else 1


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latgreen", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        p.add_argument("--dim", type=int, help="lattice dimension (>= 3)")
        if model:
            p.add_argument("--model", default="srw",
                           help="srw, spread-out-R, or a model-spec JSON file")
        p.add_argument("--output", "-o", help="output file (default stdout)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")

    def points(p):
        p.add_argument("--x", action="append", metavar="X1,X2,...",
                       help="lattice point; repeat for several")
        p.add_argument("--L-min", dest="L_min", type=int)
        p.add_argument("--L-max", dest="L_max", type=int)
        p.add_argument("--L-step", dest="L_step", type=int, default=10)

    def pipeline(p):
        p.add_argument("--grid-n", dest="grid_n", type=int,
                       help="nodes per axis of the smooth-part grid (fixed, not adapted)")
        p.add_argument("--bump-inner", dest="bump_inner", type=float, default=DEFAULT_INNER)
        p.add_argument("--bump-outer", dest="bump_outer", type=float, default=DEFAULT_OUTER)
        p.add_argument("--epsilon", type=float,
                       help="also report |x|^(d-2) J2(x) for this outer-region fraction")
        p.add_argument("--domain-radius", dest="domain_radius", type=float)
        p.add_argument("--method", choices=["subtraction", "polar", "riesz"],
                       default="subtraction", help="route for the singular part")
        p.add_argument("--rtol", type=float, default=1e-3,
                       help="relative error estimate above which the exit status is 3")

    p = sub.add_parser("constants", help="a_d, n_d, p_d and h(0) for a model")
    common(p)
    p.add_argument("--p", type=float, help="integrability exponent (d > 4)")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("green", help="f(x) by the cutoff decomposition")
    common(p)
    points(p)
    pipeline(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the sweep")
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("asymptote", help="decay report along an axis sweep")
    common(p)
    points(p)
    pipeline(p)
    p.set_defaults(func=cmd_asymptote)

    p = sub.add_parser("oracle", help="series and Monte Carlo reference values")
    common(p)
    points(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--walks", type=int, default=100_000)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--tail-tol", dest="tail_tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--output", "-o")
    p.add_argument("--only", action="append", metavar="AC",
                   help="restrict to the named checks (e.g. AC1); repeatable")
    p.set_defaults(func=cmd_verify, format="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AliasingError as exc:
        print(f"latgreen: aliasing: {exc}", file=sys.stderr)
        return 4
    except (CLIError, ModelSpecError, ConvergenceError, ValueError, OSError) as exc:
        print(f"latgreen: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
