"""Remainders, decay fits, Sobolev norms and the error-bound diagnostic.

With ``f(x) = a_d |x|^{2-d} (h0 + R(x))`` the remainder ``R`` tends to 0,
and ``max |R|`` is controlled by

    ||f^||_{W^{d-2,1}(T^d minus V)} + ||h^||_{W^{n_d,p_d}(U)}

up to an unknown constant.  Only the uniformity of the ratio is checked.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .finite_diff import fd_levels, mixed_stencil, multi_indices
from .quadrature import QuadratureGrid, ball_cell_fractions, sphere_rule
from .smoothing import BumpFunction
from .symbols import Symbol, constants, h_symbol
from .transform import ConvergenceError, decompose, j2_tail, s_eval

__all__ = [
    "ReportRow",
    "DecayFit",
    "AsymptoticsReport",
    "remainder",
    "fit_decay_exponent",
    "sobolev_norm",
    "verify_bound",
    "u_decay_check",
    "build_report",
    "SCHEMA_VERSION",
    "CSV_COLUMNS",
]

SCHEMA_VERSION = 1
CSV_COLUMNS = ["L", "x", "f", "scaled", "remainder", "error_estimate", "log_L", "log_abs_f",
               "j2_scaled"]
# Sobolev grid sizes per dimension
SOBOLEV_BASE = {3: 64, 4: 32, 5: 16}


def remainder(f_val: float, x, h0: float, d: int) -> float:
    """``|x|^{d-2} f(x) / a_d - h0``."""
    r = math.sqrt(sum(float(c) ** 2 for c in x))
    if r == 0:
        raise ValueError("remainder is undefined at x = 0")
    return r ** (d - 2) * f_val / constants(d).a_d - h0


class DecayFit(NamedTuple):
    slope: float
    intercept: float
    r2: float
    absolute: bool  # True if |f| was fitted because f changes sign


def fit_decay_exponent(rows: Sequence[tuple[float, float]]) -> DecayFit:
    """Least-squares line through ``(log |x|, log f)``.

    Nonpositive values trigger a warning and ``|f|`` is fitted instead
    (``absolute`` is set); a zero value cannot be fitted at all.
    """
    if len(rows) < 3:
        raise ValueError("need at least three rows")
    r = np.array([float(a) for a, _ in rows])
    f = np.array([float(b) for _, b in rows])
    if len(np.unique(r)) != len(r):
        raise ValueError("radii must be distinct")
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    absolute = bool(np.any(f <= 0))
    if absolute:
        if np.any(f == 0):
            raise ValueError("cannot fit a decay exponent through f = 0")
        warnings.warn("f changes sign; fitting |f|", RuntimeWarning, stacklevel=2)
        f = np.abs(f)
    X, Y = np.log(r), np.log(f)
    A = np.stack([X, np.ones_like(X)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ np.array([slope, intercept])
    ss = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return DecayFit(float(slope), float(intercept), r2, absolute)


def _region_weights(axes, region, chi, reach):
    spacing = axes[0][1] - axes[0][0] if len(axes[0]) > 1 else 1.0
    if region == "U":
        return ball_cell_fractions(axes, chi.r_outer - reach, spacing)
    if region in ("torus-minus-V", "T-V"):
        return 1.0 - ball_cell_fractions(axes, chi.r_inner + reach, spacing)
    raise ValueError(f"region must be 'U' or 'torus-minus-V', got {region!r}")


def sobolev_norm(f: Symbol, region: str, n: int, p: float, chi: BumpFunction,
                 grid: QuadratureGrid | int | None = None, *, h_fd: float | None = None,
                 blowup_tol: float = 0.1) -> float:
    """``sum_{|alpha| <= n} || d^alpha f ||_{L^p(region)}`` for the measure ``dk/(2pi)^d``.

    ``region`` is ``"U"`` (``|k| < r_outer``) or ``"torus-minus-V"``
    (``|k| > r_inner``), shrunk by the finite-difference reach.  Derivatives
    are Richardson-extrapolated central differences with step
    ``1e-3 (r_outer - r_inner)``; if the norm of some derivative changes by
    more than ``blowup_tol`` (relative) between steps ``h`` and ``h/2`` a
    :class:`ConvergenceError` is raised.  Nodes come from an offset grid
    (only ``k >= 0`` for even symbols) and boundary cells get their volume
    fraction inside the region.
    """
    d = f.dim
    if p < 1:
        raise ValueError("p must be >= 1")
    if grid is None:
        grid = QuadratureGrid(d, SOBOLEV_BASE.get(d, 16))
    elif isinstance(grid, (int, np.integer)):
        grid = QuadratureGrid(d, int(grid))
    h = chi.fd_step if h_fd is None else h_fd
    reach = h * n / 2 * math.sqrt(d)
    axes, mult = [], []
    for j in range(d):
        if f.even:
            k, w = grid.half_nodes(j)
        else:
            k = grid.nodes(j)
            w = np.ones_like(k)
        if region == "U":
            keep = np.abs(k) < chi.r_outer + np.pi / grid.shape[j]
            k, w = k[keep], w[keep]
        axes.append(k)
        mult.append(w / grid.shape[j])
    weights = _region_weights(axes, region, chi, reach)
    for j, w in enumerate(mult):
        shape = [1] * d
        shape[j] = len(w)
        weights = weights * w.reshape(shape)
    mask = weights > 0
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m[mask] for m in mesh], axis=1)
    wts = weights[mask]

    def lp(vals):
        return float(np.sum(wts * np.abs(vals) ** p) ** (1.0 / p))

    total = 0.0
    for alpha in multi_indices(d, n):
        if sum(alpha) == 0:
            total += lp(f(pts))
            continue
        coarse, fine = fd_levels(f, pts, alpha, h)
        nc, nf = lp(coarse), lp(fine)
        if abs(nc - nf) > blowup_tol * max(nc, nf) and max(nc, nf) > 1e-12:
            raise ConvergenceError(f"derivative {alpha} does not settle under step refinement "
                                   f"({nc:.4g} vs {nf:.4g}); symbol not in W^{{{n},{p}}}?")
        total += lp((4 * fine - coarse) / 3)
    return total


def chamber_directions(d: int, n: int = 8) -> np.ndarray:
    """Fixed unit vectors with ``y_1 >= ... >= y_d >= 0``.

    Folding a product sphere rule into the fundamental chamber of the
    signed-permutation group; enough for symmetric ``s``.
    """
    dirs, _ = sphere_rule(d, n)
    folded = -np.sort(-np.abs(dirs), axis=1)
    folded = np.unique(np.round(folded, 12), axis=0)
    axes = np.eye(d)[:1]
    diag = np.full((1, d), 1 / math.sqrt(d))
    return np.concatenate([axes, diag, folded])


def u_decay_check(h: Symbol, chi: BumpFunction, radii: Sequence[float],
                  grid: int | None = None, *, directions: np.ndarray | None = None):
    """``[(r, max_dir r^{n_d} |s(r dir)|)]`` over fixed chamber directions."""
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    d = h.dim
    n_d = constants(d).n_d
    dirs = chamber_directions(d) if directions is None else np.asarray(directions, float)
    out = []
    for r in radii:
        vals = s_eval(h, chi, r * dirs, grid).value
        out.append((r, float(r**n_d * np.max(np.abs(vals)))))
    return out


@dataclass
class ReportRow:
    x: tuple[int, ...]
    L: float
    f: float
    scaled: float
    remainder: float
    error_estimate: float
    j2_scaled: float | None = None


@dataclass
class AsymptoticsReport:
    d: int
    model_id: str
    rows: list[ReportRow]
    h0: float
    fitted_exponent: float | None = None
    fit_intercept: float | None = None
    fit_r2: float | None = None
    fit_absolute: bool = False
    norm_f: float | None = None
    norm_h: float | None = None
    bound_ratio: float | None = None
    r_inner: float | None = None
    r_outer: float | None = None
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: (r.L, r.x))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema_version"] = SCHEMA_VERSION
        for row in out["rows"]:
            row["x"] = list(row["x"])
        return out

    def to_json(self) -> str:
        return json.dumps(_round_floats(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema_version={SCHEMA_VERSION} model={self.model_id} d={self.d} "
                  f"h0={fmt(self.h0)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([fmt(r.L), " ".join(str(c) for c in r.x), fmt(r.f), fmt(r.scaled),
                        fmt(r.remainder), fmt(r.error_estimate), fmt(math.log(r.L)),
                        fmt(math.log(abs(r.f))) if r.f != 0 else "nan", fmt(r.j2_scaled)])
        return buf.getvalue()


def fmt(v) -> str:
    """12 significant digits."""
    if v is None:
        return ""
    return f"{float(v):.12g}"


def _round_floats(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def verify_bound(report: AsymptoticsReport) -> float:
    """``max |R(x)| / (||f^||_{W^{d-2,1}(T minus V)} + ||h^||_{W^{n_d,p_d}(U)})``."""
    if report.norm_f is None or report.norm_h is None:
        raise ValueError("report has no norms")
    denom = report.norm_f + report.norm_h
    if not denom > 0:
        raise ValueError("norms must be positive")
    if not report.rows:
        raise ValueError("report has no rows")
    ratio = max(abs(r.remainder) for r in report.rows) / denom
    report.bound_ratio = ratio
    return ratio


def build_report(f: Symbol, chi: BumpFunction, points, *, h0: float | None = None,
                 model_id: str = "custom", norms: bool = True, p: float | None = None,
                 sobolev_grid: int | None = None, config: dict | None = None,
                 epsilon: float | None = None, **decompose_kw) -> AsymptoticsReport:
    """Run the pipeline over ``points`` and assemble the report.

    With ``epsilon`` set, each nonzero row also carries ``|x|^{d-2} J2(x)``.
    """
    d = f.dim
    c = constants(d) if p is None else constants(d, p)
    h = h_symbol(f, h0)
    h0 = h.limit_at_zero
    res = decompose(f, chi, points, h=h, h0=h0, **decompose_kw)
    rows = []
    for r in res:
        L = math.sqrt(sum(v * v for v in r.x))
        val = float(np.real(r.f_total))
        rows.append(ReportRow(r.x, L, val, L ** (d - 2) * val / c.a_d,
                              remainder(val, r.x, h0, d), r.error_estimate))
    if epsilon is not None:
        nz = [i for i, r in enumerate(rows) if r.L > 0]
        if nz:
            j2 = j2_tail(h, chi, [rows[i].x for i in nz], epsilon,
                         domain_radius=decompose_kw.get("domain_radius"))
            for i, v in zip(nz, np.atleast_1d(j2.value)):
                rows[i].j2_scaled = float(np.real(v))
    report = AsymptoticsReport(d, model_id, rows, float(h0), r_inner=chi.r_inner,
                               r_outer=chi.r_outer, config=dict(config or {}))
    fit_rows = [(r.L, r.f) for r in report.rows if r.L > 0]
    if len(fit_rows) >= 3:
        fit = fit_decay_exponent(fit_rows)
        report.fitted_exponent, report.fit_intercept = fit.slope, fit.intercept
        report.fit_r2, report.fit_absolute = fit.r2, fit.absolute
    if norms:
        report.norm_f = sobolev_norm(f, "torus-minus-V", d - 2, 1.0, chi, sobolev_grid)
        report.norm_h = sobolev_norm(h, "U", c.n_d, c.p_d, chi, sobolev_grid)
        if any(r.L > 0 for r in report.rows):
            report.rows, keep = [r for r in report.rows if r.L > 0], report.rows
            verify_bound(report)
            report.rows = keep
    return report
