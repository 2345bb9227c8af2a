"""Quadrature building blocks.

Tensor grids on the torus (with the contraction engine used by every
k-space integral in the package), Gauss rules on intervals and spheres,
Epstein zeta values for singularity-corrected lattice sums, and cell
volume fractions for balls.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

__all__ = [
    "QuadratureGrid",
    "grid_transform",
    "gauss_panels",
    "sphere_rule",
    "epstein_zeta",
    "ball_cell_fractions",
]

# number of float64 values evaluated per chunk in grid_transform
CHUNK_SIZE = 1 << 21


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform tensor grid on (-pi, pi]^d.

    With ``offset=True`` (the default) the nodes sit at half-integer
    multiples of ``2*pi/n`` so that ``k = 0`` is never sampled.  Each node
    carries weight ``1/n`` per axis, i.e. the normalised measure
    ``dk/(2*pi)^d``.  ``n_per_axis`` may be a single even integer or one
    per axis.
    """

    dim: int
    n_per_axis: int | tuple[int, ...]
    offset: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        n = self.n_per_axis
        if isinstance(n, (int, np.integer)):
            n = (int(n),) * self.dim
        n = tuple(int(v) for v in n)
        if len(n) != self.dim:
            raise ValueError(f"need {self.dim} axis sizes, got {len(n)}")
        for v in n:
            if v < 8 or v % 2:
                raise ValueError(f"axis sizes must be even and >= 8, got {v}")
        object.__setattr__(self, "n_per_axis", n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_per_axis

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2 * np.pi / n for n in self.shape)

    def nodes(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        j = np.arange(n)
        if self.offset:
            return -np.pi + (j + 0.5) * (2 * np.pi / n)
        return -np.pi + (j + 1) * (2 * np.pi / n)

    def half_nodes(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes with k >= 0 and the multiplicities folding in k < 0."""
        k = self.nodes(axis)
        keep = k >= 0
        k = k[keep]
        w = np.where((k == 0) | np.isclose(k, np.pi), 1.0, 2.0)
        return k, w

    def scaled(self, factor: float) -> "QuadratureGrid":
        n = tuple(max(8, 2 * int(round(v * factor / 2))) for v in self.shape)
        return QuadratureGrid(self.dim, n, self.offset)

    def doubled(self) -> "QuadratureGrid":
        return self.scaled(2.0)

    def halved(self) -> "QuadratureGrid":
        return self.scaled(0.5)

    @classmethod
    def for_points(
        cls,
        dim: int,
        points,
        base_n: int,
        support_radius: float = np.pi,
        nodes_per_oscillation: float = 8.0,
    ) -> "QuadratureGrid":
        """Grid resolving ``exp(-i k.y)`` for every ``y`` in ``points``.

        Axis ``j`` gets at least ``nodes_per_oscillation * |y_j| *
        support_radius / pi`` nodes (and never fewer than ``base_n``).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.size == 0:
            return cls(dim, base_n)
        ymax = np.abs(pts).max(axis=0)
        need = np.ceil(nodes_per_oscillation * ymax * support_radius / np.pi)
        n = [int(max(base_n, v + (v % 2))) for v in need]
        return cls(dim, tuple(n))


def _axis_tables(k, w, n, coords, even):
    # (m, P) phase table with quadrature weights folded in
    arg = np.multiply.outer(k, coords)
    if even:
        return (w / n)[:, None] * np.cos(arg)
    return (w / n)[:, None] * np.exp(-1j * arg)


def grid_transform(
    values: Callable[[Sequence[np.ndarray]], np.ndarray],
    grid: QuadratureGrid,
    points,
    *,
    even: bool = False,
    support_radius: float | None = None,
) -> np.ndarray:
    """Trapezoidal approximation of ``int F(k) exp(-i k.y) dk/(2pi)^d``.

    Parameters
    ----------
    values : callable
        ``values(axes)`` returns ``F`` on the tensor product of the 1-D
        node arrays ``axes`` (shape ``tuple(len(a) for a in axes)``).
    grid : QuadratureGrid
    points : array_like, shape (P, d) or (d,)
        Real evaluation points ``y``.
    even : bool
        Declare ``F`` even in every coordinate separately.  Only the
        half grid ``k_j >= 0`` is evaluated and the phases become cosines.
    support_radius : float, optional
        ``F`` vanishes for ``|k| > support_radius``; nodes outside the
        enclosing cube are skipped.

    Returns
    -------
    ndarray, shape (P,)
        Real if ``even`` else complex.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    d = grid.dim
    if pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, grid has {d}")

    axes, tables = [], []
    for j in range(d):
        if even:
            k, w = grid.half_nodes(j)
        else:
            k = grid.nodes(j)
            w = np.ones_like(k)
        if support_radius is not None:
            keep = np.abs(k) <= support_radius
            k, w = k[keep], w[keep]
        axes.append(k)
        tables.append(_axis_tables(k, w, grid.shape[j], pts[:, j], even))

    dtype = float if even else complex
    out = np.zeros(len(pts), dtype=dtype)
    if any(len(a) == 0 for a in axes):
        return out[0] if single else out

    slab = int(np.prod([len(a) for a in axes[1:]]))
    step = max(1, CHUNK_SIZE // max(slab, 1))
    for start in range(0, len(axes[0]), step):
        sub = [axes[0][start:start + step]] + axes[1:]
        F = np.asarray(values(sub))
        v = F @ tables[-1] if d > 1 else None
        if d == 1:
            out += F @ tables[0][start:start + step]
            continue
        for j in range(d - 2, 0, -1):
            v = np.einsum("...jp,jp->...p", v, tables[j])
        out += np.einsum("jp,jp->p", v, tables[0][start:start + step])
    return out[0] if single else out


def gauss_panels(a: float, b: float, panels: int, order: int = 32):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    return (mid + half * x).ravel(), (half * w).ravel()


def _hyperspherical(d, n):
    """Direction cosines and weights of a product rule on S^{d-1}."""
    if d == 2:
        phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(2 * n, np.pi / n)
    # first polar angle: weight sin^{d-2}(theta) dtheta = (1-t^2)^{(d-3)/2} dt
    alpha = (d - 3) / 2
    t, wt = special.roots_jacobi(n, alpha, alpha)
    sub, wsub = _hyperspherical(d - 1, n)
    s = np.sqrt(1 - t**2)
    dirs = np.concatenate(
        [t[:, None, None] * np.ones((1, len(sub), 1)), s[:, None, None] * sub[None]], axis=2
    ).reshape(-1, d)
    return dirs, np.outer(wt, wsub).ravel()


def sphere_rule(d: int, n: int, n_polar: int | None = None, axis=None):
    """Product quadrature on the unit sphere S^{d-1}.

    The first polar angle uses ``n_polar`` Gauss-Jacobi nodes in its
    cosine (measured from ``axis`` when given) and every other angle uses
    ``n``.  Weights sum to the surface area ``2 pi^{d/2} / Gamma(d/2)``.
    """
    if d < 2:
        raise ValueError("sphere_rule needs d >= 2")
    n_polar = n if n_polar is None else n_polar
    if d == 2:
        dirs, w = _hyperspherical(2, max(n, n_polar))
    else:
        alpha = (d - 3) / 2
        t, wt = special.roots_jacobi(n_polar, alpha, alpha)
        sub, wsub = _hyperspherical(d - 1, n)
        s = np.sqrt(1 - t**2)
        dirs = np.concatenate(
            [np.repeat(t, len(sub))[:, None], (s[:, None, None] * sub[None]).reshape(-1, d - 1)],
            axis=1,
        )
        w = np.outer(wt, wsub).ravel()
    if axis is not None:
        axis = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm > 0:
            dirs = dirs @ _frame(axis / norm)
    return dirs, w


def _frame(u):
    """Orthogonal matrix whose first row is the unit vector ``u``."""
    d = len(u)
    e = np.zeros(d)
    e[0] = 1.0
    v = u - e
    if np.linalg.norm(v) < 1e-14:
        return np.eye(d)
    v /= np.linalg.norm(v)
    H = np.eye(d) - 2 * np.outer(v, v)  # Householder reflection e -> u
    return H.T


def _upper_gamma(a, x):
    """Upper incomplete gamma Gamma(a, x) for any real a and x > 0."""
    if a > 0:
        return special.gamma(a) * special.gammaincc(a, x)
    if a == 0:
        return special.exp1(x)
    return (_upper_gamma(a + 1, x) - x**a * np.exp(-x)) / a


def epstein_zeta(d: int, s: float, cutoff: int = 6) -> float:
    """Analytically continued ``sum'_{j in Z^d} |j|^{-s}``.

    Evaluated with the theta-function splitting at t = 1; both halves
    converge like ``exp(-pi |j|^2)``, so a cube of half-width ``cutoff``
    is far beyond double precision.
    """
    if s == 0:
        return -1.0
    if s < 0 and float(s / 2).is_integer():
        return 0.0
    total = 2.0 / (s - d) - 2.0 / s
    rng = range(-cutoff, cutoff + 1)
    r2 = np.array([sum(c * c for c in j) for j in itertools.product(rng, repeat=d)], float)
    r2 = np.unique(r2[r2 > 0], return_counts=True)
    for val, mult in zip(*r2):
        x = np.pi * val
        total += mult * (x ** (-s / 2) * _upper_gamma(s / 2, x)
                         + x ** (-(d - s) / 2) * _upper_gamma((d - s) / 2, x))
    return float(total * np.pi ** (s / 2) / math.gamma(s / 2))


def ball_cell_fractions(coords: Sequence[np.ndarray], radius: float, spacing: float,
                        subsamples: int = 8) -> np.ndarray:
    """Fraction of each grid cell lying inside the ball ``|y| <= radius``.

    ``coords`` are 1-D arrays of cell centres per axis (cells are cubes of
    side ``spacing``).  Cells cut by the sphere are resolved by midpoint
    subsampling.
    """
    mesh = np.meshgrid(*coords, indexing="ij")
    r = np.sqrt(sum(m**2 for m in mesh))
    d = len(coords)
    half_diag = 0.5 * spacing * math.sqrt(d)
    frac = (r <= radius).astype(float)
    cut = np.abs(r - radius) < half_diag
    if not cut.any():
        return frac
    q = (np.arange(subsamples) + 0.5) / subsamples - 0.5
    offs = np.stack(np.meshgrid(*([q * spacing] * d), indexing="ij"), axis=-1).reshape(-1, d)
    centres = np.stack([m[cut] for m in mesh], axis=1)
    step = max(1, (1 << 24) // (len(offs) * d))
    out = np.empty(len(centres))
    for i in range(0, len(centres), step):
        c = centres[i:i + step]
        out[i:i + step] = (((c[:, None, :] + offs[None]) ** 2).sum(axis=2) <= radius**2).mean(axis=1)
    frac[cut] = out
    return frac
