"""Symbols on the torus ``T^d = (-pi, pi]^d`` and the dimension constants.

A :class:`Symbol` is a vectorised function of ``k`` (shape ``(..., d)``).
Symbols that know a faster evaluation on tensor grids also carry a
``grid_func`` taking the 1-D node arrays of each axis.

``1 - D^(k)`` is evaluated through the telescoped identity

    1 - prod_j c_j = sum_j (1 - c_j) prod_{i<j} c_i,   1 - cos t = 2 sin^2(t/2),

which keeps full relative precision near ``k = 0`` (the naive form loses
about ``log10(1/|k|^2)`` digits, which finite differences then amplify).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .lattice import ModelSpecError, StepDistribution

__all__ = [
    "Symbol",
    "DimensionConstants",
    "UnsupportedModelError",
    "reduce_torus",
    "d_hat",
    "one_minus_d_hat",
    "step_symbol",
    "green_symbol",
    "zero_scan",
    "h_symbol",
    "h_at_zero",
    "constant_symbol",
    "constants",
]

ZERO_TOL = 1e-10
# grid values below this (away from k = 0) are refined by local minimisation
NEAR_MISS_TOL = 1e-3


class UnsupportedModelError(ValueError):
    """``1 - D^`` vanishes somewhere other than ``k = 0``."""


def reduce_torus(k) -> np.ndarray:
    """Map coordinates to the representative in ``(-pi, pi]``."""
    k = np.asarray(k, dtype=float)
    return np.pi - np.mod(np.pi - k, 2 * np.pi)


@dataclass(frozen=True)
class Symbol:
    """A function on the torus with metadata about ``k = 0``.

    ``singular_at_zero`` marks a pole at the origin; ``limit_at_zero`` is
    the continuous extension for removable singularities.  ``h0`` records
    the limit of ``|k|^2 f(k)`` when it is known exactly (Green symbols).
    ``even`` declares evenness in each coordinate separately.
    """

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    singular_at_zero: bool = False
    limit_at_zero: complex | None = None
    even: bool = False
    grid_func: Callable[[Sequence[np.ndarray]], np.ndarray] | None = None
    h0: float | None = None
    name: str = "symbol"

    def __call__(self, k):
        k = reduce_torus(k)
        if k.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {k.shape[-1]}")
        return self.func(k)

    def on_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Values on the tensor product of the node arrays ``axes``."""
        if len(axes) != self.dim:
            raise ValueError(f"need {self.dim} axes, got {len(axes)}")
        if self.grid_func is not None:
            return self.grid_func(axes)
        mesh = np.meshgrid(*axes, indexing="ij")
        return self.__call__(np.stack(mesh, axis=-1))


class DimensionConstants(NamedTuple):
    d: int
    a_d: float
    n_d: int
    p_d: float
    q_d: float


def constants(d: int, p: float = 2.0) -> DimensionConstants:
    """``a_d = Gamma((d-2)/2) / (4 pi^{d/2})``, the smoothness index ``n_d``
    and the integrability exponent ``p_d`` with its dual."""
    if int(d) != d or d < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {d}")
    d = int(d)
    a_d = math.gamma((d - 2) / 2) / (4 * math.pi ** (d / 2))
    n_d = d - 2 if d > 4 else d - 1
    p = float(p)
    if d <= 4 and p != 2.0:
        raise ValueError(f"p_d must be 2 for d = {d}")
    if d > 4 and not (d / (d - 2) < p <= 2):
        raise ValueError(f"p_d must lie in ({d}/{d - 2}, 2], got {p}")
    return DimensionConstants(d, a_d, n_d, p, p / (p - 1))


# -- step distributions ---------------------------------------------------

def _folded(D: StepDistribution):
    W = D.folded_weights()
    idx = np.argwhere(W != 0)
    return W, idx, W[tuple(idx.T)]


def _check_dim(D, k):
    k = np.asarray(k, dtype=float)
    if k.shape[-1] != D.dim:
        raise ValueError(f"point of dimension {k.shape[-1]} for a {D.dim}-dimensional walk")
    return k


def d_hat(D: StepDistribution, k):
    """``sum_x D(x) exp(i k.x)``; real by symmetry."""
    k = _check_dim(D, k)
    _, idx, w = _folded(D)
    out = np.zeros(k.shape[:-1])
    for m, wm in zip(idx, w):
        term = np.full(k.shape[:-1], wm)
        for j, mj in enumerate(m):
            if mj:
                term = term * np.cos(k[..., j] * mj)
        out = out + term
    return out if out.ndim else float(out)


def one_minus_d_hat(D: StepDistribution, k):
    """``1 - D^(k)`` without cancellation near ``k = 0``."""
    k = _check_dim(D, k)
    _, idx, w = _folded(D)
    out = np.zeros(k.shape[:-1])
    for m, wm in zip(idx, w):
        prod = np.ones(k.shape[:-1])
        acc = np.zeros(k.shape[:-1])
        for j, mj in enumerate(m):
            if mj:
                t = k[..., j] * mj
                acc = acc + 2 * np.sin(t / 2) ** 2 * prod
                prod = prod * np.cos(t)
        out = out + wm * acc
    return out if out.ndim else float(out)


def _contract(W, tables):
    # sum_m W[m] prod_j tables[j][:, m_j], axis by axis
    v = W
    for T in tables:
        v = np.tensordot(v, T, axes=([0], [1]))
    return v


def _grid_one_minus(D: StepDistribution, axes):
    W = D.folded_weights()
    R = W.shape[0] - 1
    m = np.arange(R + 1)
    cos_t = [np.cos(np.multiply.outer(a, m)) for a in axes]
    sin_t = [2 * np.sin(np.multiply.outer(a, m) / 2) ** 2 for a in axes]
    out = 0.0
    d = D.dim
    for j in range(d):
        # axes after j: W summed over their index (table of ones)
        tables = cos_t[:j] + [sin_t[j]] + [np.ones((len(a), R + 1)) for a in axes[j + 1:]]
        out = out + _contract(W, tables)
    return out


def step_symbol(D: StepDistribution) -> Symbol:
    """``D^`` as a :class:`Symbol`."""
    W = D.folded_weights()

    def grid(axes):
        m = np.arange(W.shape[0])
        return _contract(W, [np.cos(np.multiply.outer(a, m)) for a in axes])

    return Symbol(D.dim, lambda k: d_hat(D, k), even=True, grid_func=grid,
                  limit_at_zero=1.0, name=f"D^[{D.name}]")


def zero_scan(D: StepDistribution, grid_n: int = 32) -> list[tuple[float, ...]]:
    """Nonzero points ``k`` with ``|1 - D^(k)| < 1e-10``.

    Scans the grid ``-pi + j 2pi/n`` (which contains ``0`` and ``pi``) and
    refines every near miss by local minimisation, so zeros between grid
    nodes are also found.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be >= 8")
    d = D.dim
    ax = -np.pi + (np.arange(grid_n) + 1) * (2 * np.pi / grid_n)
    vals = np.abs(_grid_one_minus(D, [ax] * d))
    spacing = 2 * np.pi / grid_n
    found: list[np.ndarray] = []

    def add(k):
        k = reduce_torus(k)
        if np.linalg.norm(k) < 1e-6:
            return
        for f in found:
            if np.max(np.abs(reduce_torus(f - k))) < 1e-6:
                return
        found.append(k)

    origin = np.array(d * [grid_n // 2 - 1])
    near_origin = lambda idx: np.all(np.abs(idx - origin) <= 1, axis=-1)  # noqa: E731
    # grid nodes are distinct, so exact hits need no deduplication
    hits = np.argwhere(vals < ZERO_TOL)
    found.extend(ax[hits[~near_origin(hits)]])
    for ijk in np.argwhere((vals >= ZERO_TOL) & (vals < NEAR_MISS_TOL)):
        if near_origin(ijk):
            continue
        k0 = ax[ijk]
        res = optimize.minimize(lambda k: abs(one_minus_d_hat(D, k)), k0, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
        if res.fun < ZERO_TOL and np.max(np.abs(res.x - k0)) < 2 * spacing:
            add(res.x)
    return [tuple(float(c) for c in k) for k in sorted(found, key=lambda v: tuple(v))]


def h_at_zero(D: StepDistribution) -> float:
    """``2d / sigma^2``, the limit of ``|k|^2 / (1 - D^(k))`` at the origin."""
    s2 = D.sigma2
    if s2 <= 0:
        raise ValueError(f"second moment must be positive, got {s2}")
    return 2 * D.dim / s2


def green_symbol(D: StepDistribution, grid_n: int | None = None) -> Symbol:
    """``1 / (1 - D^(k))``; raises if ``1 - D^`` has a zero other than ``0``."""
    if D.dim < 3:
        raise ModelSpecError("Green function needs d >= 3")
    if grid_n is None:
        grid_n = 32 if D.dim <= 4 else 16
    zeros = zero_scan(D, grid_n)
    if zeros:
        raise UnsupportedModelError(
            f"1 - D^ vanishes at {zeros[0]} (and {len(zeros) - 1} other points)")
    h0 = h_at_zero(D)

    def func(k):
        with np.errstate(divide="ignore"):
            return 1.0 / np.asarray(one_minus_d_hat(D, k))

    def grid(axes):
        with np.errstate(divide="ignore"):
            return 1.0 / _grid_one_minus(D, axes)

    return Symbol(D.dim, func, singular_at_zero=True, even=True, grid_func=grid,
                  h0=h0, name=f"green[{D.name}]")


def h_symbol(f: Symbol, h0: complex | None = None) -> Symbol:
    """``|k|^2 f(k)`` with the value ``h0`` at ``k = 0``.

    ``h0`` defaults to ``f.h0`` when the symbol records it.
    """
    if h0 is None:
        h0 = f.h0
    if h0 is None:
        raise ValueError("h0 must be supplied for this symbol")

    def func(k):
        r2 = np.sum(k * k, axis=-1)
        with np.errstate(invalid="ignore"):
            v = r2 * f.func(k)
        return np.where(r2 == 0, h0, v) if np.ndim(v) else (h0 if r2 == 0 else v)

    grid = None
    if f.grid_func is not None:
        def grid(axes):
            r2 = sum(np.meshgrid(*[a * a for a in axes], indexing="ij", sparse=True))
            with np.errstate(invalid="ignore"):
                v = r2 * f.grid_func(axes)
            return np.where(r2 == 0, h0, v)

    return Symbol(f.dim, func, singular_at_zero=False, limit_at_zero=h0, even=f.even,
                  grid_func=grid, h0=h0, name=f"h[{f.name}]")


def constant_symbol(dim: int, c: complex = 1.0) -> Symbol:
    """The constant symbol ``f^ = c`` (inverse transform ``c delta_0``)."""
    def func(k):
        return np.full(np.shape(k)[:-1], c) if np.ndim(k) > 1 else c

    def grid(axes):
        return np.full(tuple(len(a) for a in axes), c)

    return Symbol(dim, func, even=True, grid_func=grid, limit_at_zero=c, name=f"const[{c}]")
