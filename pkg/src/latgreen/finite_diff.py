"""Mixed partial derivatives by composed central differences."""
from __future__ import annotations

import itertools
from math import comb

import numpy as np

__all__ = ["central_stencil", "mixed_stencil", "fd_derivative", "fd_levels", "multi_indices"]


def central_stencil(order: int):
    """Offsets (in units of h) and weights of the order-``order`` central difference.

    Second-order accurate; odd orders use half-integer offsets.
    """
    if order == 0:
        return np.zeros(1), np.ones(1)
    j = np.arange(order + 1)
    offsets = order / 2 - j
    weights = np.array([(-1) ** i * comb(order, i) for i in j], dtype=float)
    return offsets, weights


def mixed_stencil(alpha):
    """Tensor-product stencil for the multi-index ``alpha``."""
    per_axis = [central_stencil(a) for a in alpha]
    offs = np.array(list(itertools.product(*[o for o, _ in per_axis])), dtype=float)
    wts = np.array([np.prod(w) for w in itertools.product(*[w for _, w in per_axis])])
    return offs, wts


def _raw(func, k, alpha, h):
    offs, wts = mixed_stencil(alpha)
    acc = 0.0
    for o, w in zip(offs, wts):
        acc = acc + w * func(k + o * h)
    return acc / h ** sum(alpha)


def fd_levels(func, k, alpha, h: float):
    """Raw differences at steps ``h`` and ``h/2`` (for refinement checks)."""
    k = np.asarray(k, dtype=float)
    return _raw(func, k, alpha, h), _raw(func, k, alpha, h / 2)


def fd_derivative(func, k, alpha, h: float, richardson: bool = True):
    """Approximate ``d^alpha func`` at the points ``k`` (shape (..., d)).

    With ``richardson`` the step-``h`` and step-``h/2`` results are combined
    to cancel the leading ``h^2`` error term.
    """
    k = np.asarray(k, dtype=float)
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) == 0:
        return func(k)
    coarse = _raw(func, k, alpha, h)
    if not richardson:
        return coarse
    fine = _raw(func, k, alpha, h / 2)
    return (4 * fine - coarse) / 3


def multi_indices(dim: int, max_order: int):
    """All multi-indices ``alpha`` with ``|alpha| <= max_order``, by order."""
    out = []
    for total in range(max_order + 1):
        for combo in itertools.combinations_with_replacement(range(dim), total):
            alpha = [0] * dim
            for c in combo:
                alpha[c] += 1
            out.append(tuple(alpha))
    return out
