"""Smooth radial cutoff ``chi`` on the torus and its derivatives."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .finite_diff import fd_derivative, mixed_stencil
from .symbols import Symbol

__all__ = ["BumpFunction", "make_bump", "bump_derivative", "smooth_step",
           "DEFAULT_INNER", "DEFAULT_OUTER"]

DEFAULT_INNER = np.pi / 4
DEFAULT_OUTER = np.pi / 2


def smooth_step(t):
    """``psi(t) = phi(1-t) / (phi(1-t) + phi(t))`` with ``phi(t) = exp(-1/t)``.

    Equal to 1 for ``t <= 0``, 0 for ``t >= 1`` and ``C^inf`` in between.
    """
    t = np.asarray(t, dtype=float)
    inner = (t > 0) & (t < 1)
    tc = np.where(inner, t, 0.5)
    with np.errstate(over="ignore"):
        mid = expit(1.0 / tc - 1.0 / (1.0 - tc))
    return np.where(t <= 0, 1.0, np.where(t >= 1, 0.0, mid))


def _smooth_step_slope(t):
    # psi' = -psi (1 - psi) (1/t^2 + 1/(1-t)^2), zero outside (0, 1)
    t = np.asarray(t, dtype=float)
    inner = (t > 0) & (t < 1)
    tc = np.where(inner, t, 0.5)
    p = smooth_step(tc)
    return np.where(inner, -p * (1 - p) * (1 / tc**2 + 1 / (1 - tc) ** 2), 0.0)


@dataclass(frozen=True)
class BumpFunction:
    """Radial cutoff: 1 on ``|k| <= r_inner``, 0 on ``|k| >= r_outer``."""

    dim: int
    r_inner: float = DEFAULT_INNER
    r_outer: float = DEFAULT_OUTER

    @property
    def width(self) -> float:
        return self.r_outer - self.r_inner

    @property
    def fd_step(self) -> float:
        return 1e-3 * self.width

    def profile(self, r):
        """Value as a function of the radius."""
        return smooth_step((np.asarray(r, dtype=float) - self.r_inner) / self.width)

    def radial_derivative(self, r):
        """``d chi / d r`` (exact)."""
        return _smooth_step_slope((np.asarray(r, dtype=float) - self.r_inner) / self.width) / self.width

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        return self.profile(np.sqrt(np.sum(k * k, axis=-1)))

    def on_grid(self, axes):
        r2 = sum(np.meshgrid(*[a * a for a in axes], indexing="ij", sparse=True))
        return self.profile(np.sqrt(r2))

    def symbol(self) -> Symbol:
        return Symbol(self.dim, self.__call__, even=True, grid_func=self.on_grid,
                      limit_at_zero=1.0, name=f"bump[{self.r_inner:.6g},{self.r_outer:.6g}]")

    def volume_integral(self) -> float:
        """``int chi(k) dk / (2 pi)^d`` by radial Gauss-Legendre quadrature."""
        from scipy.special import gamma

        from .quadrature import gauss_panels

        d = self.dim
        r, w = gauss_panels(0.0, self.r_outer, 16, 32)
        area = 2 * np.pi ** (d / 2) / gamma(d / 2)
        return float(area * np.sum(w * self.profile(r) * r ** (d - 1)) / (2 * np.pi) ** d)


def make_bump(d: int, r_inner: float = DEFAULT_INNER, r_outer: float = DEFAULT_OUTER) -> BumpFunction:
    """Validated :class:`BumpFunction`."""
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    if not (0 < r_inner < r_outer):
        raise ValueError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    if r_outer > np.pi:
        raise ValueError(f"r_outer = {r_outer} exceeds pi; the support would wrap the torus")
    return BumpFunction(int(d), float(r_inner), float(r_outer))


def bump_derivative(chi: BumpFunction, k, alpha, h: float | None = None):
    """``d^alpha chi`` at ``k`` by Richardson-extrapolated central differences.

    Returns exactly 0 where the whole stencil lies in ``|k| <= r_inner`` (for
    ``|alpha| > 0``) or in ``|k| >= r_outer``.  Raises ``ValueError`` if a
    stencil point leaves ``[-pi, pi]`` in some coordinate.
    """
    k = np.asarray(k, dtype=float)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != chi.dim or k.shape[-1] != chi.dim:
        raise ValueError("multi-index and point must match the bump dimension")
    h = chi.fd_step if h is None else h
    offs, _ = mixed_stencil(alpha)
    reach = np.abs(offs).max(axis=0) * h
    if np.any(np.abs(k) + reach > np.pi):
        raise ValueError("finite-difference stencil crosses the torus boundary; "
                         "move k to another representative first")
    val = fd_derivative(chi, k, alpha, h)
    radius = np.sqrt(np.sum(k * k, axis=-1))
    span = float(np.linalg.norm(reach))
    inside = radius + span <= chi.r_inner
    outside = radius - span >= chi.r_outer
    if sum(alpha) > 0:
        val = np.where(inside | outside, 0.0, val)
    else:
        val = np.where(inside, 1.0, np.where(outside, 0.0, val))
    return val if np.ndim(val) else float(val)
