"""Lattice-side objects: step distributions, lattice functions, and the two
Green-function oracles (convolution series and Monte Carlo).

The Green function of a step distribution ``D`` on ``Z^d`` is
``C(x) = sum_{n>=0} D^{*n}(x)``, the expected number of visits to ``x`` of
the walk started at the origin.
"""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np
from scipy.special import zeta

__all__ = [
    "StepDistribution",
    "LatticeFunction",
    "BoxValues",
    "ModelSpecError",
    "as_point",
    "symmetry_orbit",
    "moment",
    "convolve",
    "visit_sequence",
    "green_series_oracle",
    "green_series_oracle_many",
    "series_partial_sum",
    "green_mc_oracle",
    "mc_step_cap",
    "SeriesEstimate",
    "MCEstimate",
    "load_model_spec",
    "parse_model_spec",
    "builtin_model",
]

WEIGHT_SUM_TOL = 1e-12
# convolution values smaller than this are dropped
DROP_BELOW = 1e-300
# lattice sites held by the series oracle's folded array
SERIES_MAX_CELLS = 60_000_000


class ModelSpecError(ValueError):
    """A model specification violates the step-distribution invariants."""


def as_point(x, dim: int | None = None) -> tuple[int, ...]:
    """Validate and normalise a lattice point to a tuple of ints."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"lattice point must be a vector, got shape {arr.shape}")
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ValueError(f"lattice point must have integer coordinates: {x!r}")
    pt = tuple(int(v) for v in arr)
    if dim is not None and len(pt) != dim:
        raise ValueError(f"expected a point in Z^{dim}, got {pt}")
    return pt


def symmetry_orbit(point) -> set[tuple[int, ...]]:
    """Images of ``point`` under coordinate permutations and sign flips."""
    pt = tuple(int(v) for v in point)
    orbit = set()
    for perm in itertools.permutations(pt):
        for signs in itertools.product((1, -1), repeat=len(pt)):
            orbit.add(tuple(s * c for s, c in zip(signs, perm)))
    return orbit


def _orbit_key(pt) -> tuple[int, ...]:
    return tuple(sorted((abs(c) for c in pt), reverse=True))


def _orbit_size(key) -> int:
    size = math.factorial(len(key)) * 2 ** sum(1 for c in key if c)
    for c in set(key):
        size //= math.factorial(key.count(c))
    return size


@dataclass(frozen=True)
class StepDistribution:
    """Finite-range, ``Z^d``-symmetric, signed one-step weights summing to one.

    Negative weights (including at the origin) are allowed.
    """

    dim: int
    support: Mapping[tuple[int, ...], float]
    name: str = "custom"

    def __post_init__(self):
        if self.dim < 1:
            raise ModelSpecError(f"dim must be positive, got {self.dim}")
        clean = {}
        for x, w in self.support.items():
            pt = as_point(x, self.dim)
            w = float(w)
            if not math.isfinite(w):
                raise ModelSpecError(f"weight at {pt} is not finite")
            if w != 0.0:
                clean[pt] = clean.get(pt, 0.0) + w
        if not clean:
            raise ModelSpecError("step distribution has empty support")
        total = math.fsum(clean.values())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ModelSpecError(f"weights sum to {total!r}, not 1")
        groups: dict[tuple[int, ...], list] = {}
        for pt, w in clean.items():
            groups.setdefault(_orbit_key(pt), []).append((pt, w))
        for key, members in groups.items():
            if len(members) != _orbit_size(key):
                raise ModelSpecError(
                    f"not Z^d-symmetric: orbit of {key} has {len(members)} of "
                    f"{_orbit_size(key)} points")
            w0 = members[0][1]
            for pt, w in members:
                if abs(w - w0) > WEIGHT_SUM_TOL * max(1.0, abs(w0)):
                    raise ModelSpecError(
                        f"not Z^d-symmetric: weight {w0} at {members[0][0]} but {w} at {pt}")
        object.__setattr__(self, "support", dict(sorted(clean.items())))

    # -- constructors -------------------------------------------------
    @classmethod
    def from_orbits(cls, dim: int, orbits: Iterable[tuple], name: str = "custom"):
        """Build from one representative per symmetry orbit.

        Each entry is ``(point, weight)`` where ``weight`` is the weight of
        every point in the orbit.
        """
        support = {}
        for point, weight in orbits:
            pt = as_point(point, dim)
            for img in symmetry_orbit(pt):
                if img in support:
                    raise ModelSpecError(f"orbit of {pt} listed twice")
                support[img] = float(weight)
        return cls(dim, support, name)

    @classmethod
    def simple(cls, dim: int) -> "StepDistribution":
        """Nearest-neighbour simple random walk."""
        return cls.from_orbits(dim, [((1,) + (0,) * (dim - 1), 1 / (2 * dim))], name="srw")

    @classmethod
    def spread_out(cls, dim: int, R: int) -> "StepDistribution":
        """Uniform on ``0 < |x|_inf <= R``."""
        if R < 1:
            raise ModelSpecError("spread-out range must be >= 1")
        pts = [p for p in itertools.product(range(-R, R + 1), repeat=dim) if any(p)]
        w = 1.0 / len(pts)
        return cls(dim, {p: w for p in pts}, name=f"spread-out-{R}")

    # -- derived data -------------------------------------------------
    @property
    def range(self) -> int:
        return max(max(abs(c) for c in p) for p in self.support)

    @property
    def points(self) -> np.ndarray:
        return np.array(list(self.support), dtype=int)

    @property
    def weights(self) -> np.ndarray:
        return np.array(list(self.support.values()), dtype=float)

    @property
    def sigma2(self) -> float:
        return moment(self, 2)

    @property
    def nonnegative(self) -> bool:
        return all(w >= 0 for w in self.support.values())

    def folded_weights(self) -> np.ndarray:
        """Weights summed over sign flips: ``W[m] = sum_{|x_j| = m_j} D(x)``.

        By symmetry ``D^(k) = sum_m W[m] prod_j cos(k_j m_j)``.
        """
        R = self.range
        W = np.zeros((R + 1,) * self.dim)
        for p, w in self.support.items():
            W[tuple(abs(c) for c in p)] += w
        return W

    def to_spec(self) -> dict:
        """Model-spec dictionary with one representative per orbit."""
        seen, orbits = set(), []
        for p, w in self.support.items():
            if p in seen:
                continue
            orb = symmetry_orbit(p)
            seen |= orb
            rep = _orbit_key(p)
            orbits.append({"point": list(rep), "weight": w})
        return {"dim": self.dim, "orbits": orbits}


class BoxValues(Mapping):
    """Read-only map over a dense array indexed by the box ``lower + [0, shape)``."""

    def __init__(self, array: np.ndarray, lower):
        self.array = array
        self.lower = tuple(int(c) for c in lower)

    def _index(self, key):
        idx = tuple(k - lo for k, lo in zip(key, self.lower))
        if len(idx) != self.array.ndim or any(not 0 <= i < n for i, n in zip(idx, self.array.shape)):
            return None
        return idx

    def __getitem__(self, key):
        idx = self._index(key)
        if idx is None:
            raise KeyError(key)
        return self.array[idx].item()

    def __contains__(self, key):
        return self._index(tuple(key)) is not None

    def __iter__(self):
        for idx in np.ndindex(*self.array.shape):
            yield tuple(i + lo for i, lo in zip(idx, self.lower))

    def __len__(self):
        return self.array.size


@dataclass(frozen=True)
class LatticeFunction:
    """Finitely tabulated complex function on ``Z^d``."""

    dim: int
    values: Mapping[tuple[int, ...], complex] = field(default_factory=dict)
    default: complex = 0

    def __post_init__(self):
        if isinstance(self.values, BoxValues):
            if self.values.array.ndim != self.dim:
                raise ValueError("box dimension does not match dim")
            return
        vals = {as_point(k, self.dim): v for k, v in self.values.items()}
        object.__setattr__(self, "values", vals)

    def __call__(self, x) -> complex:
        return self.values.get(as_point(x, self.dim), self.default)

    @classmethod
    def delta(cls, dim: int, at=None) -> "LatticeFunction":
        at = (0,) * dim if at is None else as_point(at, dim)
        return cls(dim, {at: 1.0})

    @classmethod
    def from_steps(cls, D: StepDistribution) -> "LatticeFunction":
        return cls(D.dim, dict(D.support))

    def support(self) -> list[tuple[int, ...]]:
        return [k for k, v in self.values.items() if v != 0]


def moment(D: StepDistribution, m: int) -> float:
    """``sum_x |x|^m D(x)`` for even ``m >= 0``."""
    if m < 0 or m % 2:
        raise ValueError(f"moment order must be a nonnegative even integer, got {m}")
    terms = [w * sum(c * c for c in p) ** (m // 2) for p, w in D.support.items()]
    return math.fsum(terms)


def convolve(f: LatticeFunction, g: LatticeFunction) -> LatticeFunction:
    """``(f * g)(x) = sum_y f(y) g(x - y)`` for finitely supported f, g."""
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    if f.default != 0 or g.default != 0:
        raise ValueError("convolution needs finitely supported arguments (default 0)")
    out: dict[tuple[int, ...], complex] = {}
    for y, fy in f.values.items():
        if fy == 0:
            continue
        for z, gz in g.values.items():
            if gz == 0:
                continue
            x = tuple(a + b for a, b in zip(y, z))
            out[x] = out.get(x, 0) + fy * gz
    return LatticeFunction(f.dim, {k: v for k, v in out.items() if abs(v) >= DROP_BELOW})


# -- series oracle ------------------------------------------------------

def _reflect_pad(a: np.ndarray, width: int) -> np.ndarray:
    # a[-j] = a[j] on every axis (even extension of the folded octant)
    return np.pad(a, [(width, 0)] * a.ndim, mode="reflect")


def visit_sequence(D: StepDistribution, points, n_max: int) -> np.ndarray:
    """Exact ``D^{*n}(x)`` for ``n = 0..n_max`` at each of ``points``.

    Uses the symmetry of ``D`` to store only the sector
    ``x_1 >= ... >= x_d >= 0`` of target points and the octant ``x >= 0``
    of the walk, and at step ``n`` keeps only the sites that can still
    reach a target within the remaining ``n_max - n`` steps.  Returns an
    array of shape ``(len(points), n_max + 1)``.
    """
    d, R = D.dim, D.range
    pts = [tuple(sorted((abs(c) for c in as_point(p, d)), reverse=True)) for p in points]
    xmax = max((max(p) for p in pts), default=0)
    size = (n_max * R) // 2 + xmax + R + 2
    if size**d > SERIES_MAX_CELLS:
        raise ValueError(
            f"n_max={n_max} needs {size}^{d} lattice sites; lower n_max for d={d}")
    steps = [(p, w) for p, w in D.support.items()]
    seq = np.zeros((len(pts), n_max + 1))
    p = np.zeros((size,) * d)
    p[(0,) * d] = 1.0
    for i, q in enumerate(pts):
        seq[i, 0] = p[q]
    for n in range(1, n_max + 1):
        m = min(n * R, (n_max - n) * R + xmax) + 1
        m = min(m, size - R)
        src = _reflect_pad(p[(slice(0, m + R),) * d], R)
        new = np.zeros((m,) * d)
        for y, w in steps:
            new += w * src[tuple(slice(R - c, R - c + m) for c in y)]
        new[np.abs(new) < DROP_BELOW] = 0.0
        p.fill(0.0)
        p[(slice(0, m),) * d] = new
        for i, q in enumerate(pts):
            seq[i, n] = p[q]
    return seq


class SeriesEstimate(NamedTuple):
    value: float
    tail_estimate: float


def _tail_fit(seq: np.ndarray, beta: float, d: int, nterms: int, frac: float) -> float:
    """Fit the pair-summed tail and sum it beyond ``len(seq) - 1``.

    Consecutive terms are paired ``(N-1, N), (N-3, N-2), ...`` (this
    removes the parity oscillation of bipartite walks) and modelled as
    ``2 q(c)`` at the pair centre ``c`` with
    ``q(n) = n^{-d/2} exp(-beta/n) sum_j c_j n^{-j}``.  The tail continues
    the same pairing ``(N+1, N+2), ...``.
    """
    N = len(seq) - 1
    npair = max(nterms + 2, int(frac * N) // 2)
    ends = N - 2 * np.arange(npair)
    if ends[-1] < 2:
        raise ValueError("too few terms for the tail fit; increase n_max")
    pair = seq[ends - 1] + seq[ends]
    centre = ends - 0.5
    base = 2 * centre ** (-d / 2) * np.exp(-beta / centre)
    A = np.stack([base / centre**j for j in range(nterms)], axis=1)
    scale = np.abs(A).max(axis=0)
    coef = np.linalg.lstsq(A / scale, pair, rcond=None)[0] / scale
    J = 200_000
    c = N + 2 * np.arange(1, J + 1) - 0.5
    b = c ** (-d / 2) * np.exp(-beta / c)
    tail = 2 * math.fsum(b * sum(coef[j] / c**j for j in range(nterms)))
    # beyond the direct sum: exp(-beta/n) ~ 1 - beta/n, pairs on a step-2 lattice
    q0 = (N + 2 * (J + 1) - 0.5) / 2
    s0 = d / 2
    tail += 2 * 2**-s0 * coef[0] * (zeta(s0, q0) - beta / 2 * zeta(s0 + 1, q0))
    if nterms > 1:
        tail += 2 * 2 ** -(s0 + 1) * coef[1] * zeta(s0 + 1, q0)
    return tail


def series_partial_sum(D: StepDistribution, x, depth: int) -> float:
    """``sum_{n=0}^{depth} D^{*n}(x)``, the quantity a walk capped at ``depth`` steps estimates."""
    return math.fsum(visit_sequence(D, [x], depth)[0])


def green_series_oracle(D: StepDistribution, x, n_max: int | None = None,
                        tail_tol: float = 1e-6) -> SeriesEstimate:
    """Green function by the convolution series with a fitted tail.

    Returns ``(value, tail_estimate)``: ``value`` is the partial sum through
    ``n_max`` plus the fitted tail, ``tail_estimate`` the spread between
    tail fits of different order and window (its error scale).  A
    ``RuntimeWarning`` is issued when ``tail_estimate > tail_tol``.
    """
    return green_series_oracle_many(D, [x], n_max, tail_tol)[0]


def green_series_oracle_many(D: StepDistribution, points, n_max: int | None = None,
                             tail_tol: float = 1e-6) -> list[SeriesEstimate]:
    """Vectorised :func:`green_series_oracle` sharing one convolution run."""
    d = D.dim
    if d < 3:
        raise ValueError("the Green function diverges for d < 3")
    _check_transient(D)
    if n_max is None:
        base = {3: 200, 4: 60}.get(d, 24)
        # wider walks reach the diffusive regime in fewer steps
        n_max = min(max(min(base, 60), math.ceil(base / D.sigma2)), base)
    seq = visit_sequence(D, points, n_max)
    s2 = D.sigma2
    out = []
    for p, s in zip(points, seq):
        last = np.abs(s[-max(4, n_max // 5):])
        if not np.all(np.isfinite(s)) or last[-2:].sum() > last[:2].sum():
            raise ValueError("series terms are not decaying; increase n_max")
        beta = d * sum(c * c for c in as_point(p)) / (2 * s2)
        partial = math.fsum(s)
        t4 = _tail_fit(s, beta, d, 4, 0.2)
        t3 = _tail_fit(s, beta, d, 3, 0.2)
        t4w = _tail_fit(s, beta, d, 4, 0.3)
        err = abs(t4 - t3) + abs(t4 - t4w)
        if err > tail_tol:
            warnings.warn(
                f"series tail uncertainty {err:.3g} at {tuple(p)} exceeds {tail_tol:g}",
                RuntimeWarning, stacklevel=2)
        out.append(SeriesEstimate(partial + t4, err))
    return out


def _check_transient(D):
    # D^ == 1 away from 0 makes the series diverge; delegate to the symbol scan
    from .symbols import step_symbol, zero_scan

    if zero_scan(D, 16):
        raise ValueError("1 - D^(k) vanishes away from k = 0; Green function undefined")
    if not D.nonnegative:
        ax = np.linspace(-np.pi, np.pi, 33)
        low = float(step_symbol(D).on_grid([ax] * D.dim).min())
        if low <= -1:
            raise ValueError(f"D^ reaches {low:.3g} <= -1, so the convolution series diverges; "
                             "use the decomposition pipeline for this model")


# -- Monte Carlo oracle -------------------------------------------------

class MCEstimate(NamedTuple):
    mean: float
    stderr: float


def mc_step_cap(D: StepDistribution, x) -> int:
    """Step cap ``100 d range max(|x|^2, 1)`` for the Monte Carlo oracle."""
    x = as_point(x, D.dim)
    return 100 * D.dim * D.range * max(sum(c * c for c in x), 1)


def green_mc_oracle(D: StepDistribution, x, walks: int, seed: int,
                    max_steps: int | None = None, batch: int = 50_000) -> MCEstimate:
    """Mean number of visits to ``x`` within the step cap, over ``walks`` walks.

    The estimate targets ``sum_{n <= cap} D^{*n}(x)``; the neglected visits
    after the cap are bounded by the series tail at that depth (see
    :func:`series_partial_sum`).  Batches draw from independent child streams
    of ``SeedSequence(seed)`` and are accumulated in order, so the result
    is a pure function of the arguments.
    """
    d = D.dim
    if d < 3:
        raise ValueError("walk is recurrent for d < 3; visit counts diverge")
    if not D.nonnegative:
        raise ValueError("Monte Carlo needs nonnegative step weights")
    if walks < 2:
        raise ValueError("need at least two walks for a standard error")
    x = as_point(x, d)
    cap = mc_step_cap(D, x) if max_steps is None else int(max_steps)
    if max(abs(c) for c in x) > cap * D.range:
        return MCEstimate(0.0, 0.0)

    # encode positions as one integer in mixed radix
    span = cap * D.range
    radix = 2 * span + 1
    place = radix ** np.arange(d, dtype=np.int64)
    code_steps = D.points.astype(np.int64) @ place
    target = int(np.dot(np.array(x, dtype=np.int64), place))
    cdf = np.cumsum(D.weights)
    cdf /= cdf[-1]

    n_batches = -(-walks // batch)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    total = 0.0
    total_sq = 0.0
    for b, child in enumerate(children):
        size = min(batch, walks - b * batch)
        rng = np.random.Generator(np.random.PCG64(child))
        pos = np.zeros(size, dtype=np.int64)
        visits = np.full(size, 1.0 if target == 0 else 0.0)
        for _ in range(cap):
            idx = np.searchsorted(cdf, rng.random(size), side="right")
            pos += code_steps[np.minimum(idx, len(cdf) - 1)]
            visits += pos == target
        total += visits.sum()
        total_sq += (visits**2).sum()
    mean = total / walks
    var = max(total_sq / walks - mean**2, 0.0) * walks / (walks - 1)
    return MCEstimate(mean, math.sqrt(var / walks))


# -- model specs ----------------------------------------------------------

def parse_model_spec(spec: Mapping) -> StepDistribution:
    """Build a step distribution from a model-spec mapping.

    ``{"dim": 3, "orbits": [{"point": [1, 0, 0], "weight": 1/6}]}``; each
    orbit weight applies to every symmetric image of its point.
    """
    if not isinstance(spec, Mapping):
        raise ModelSpecError("model spec must be a JSON object")
    if "dim" not in spec:
        raise ModelSpecError("missing field 'dim'")
    dim = spec["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ModelSpecError(f"field 'dim' must be a positive integer, got {dim!r}")
    orbits = spec.get("orbits")
    if not isinstance(orbits, list) or not orbits:
        raise ModelSpecError("field 'orbits' must be a nonempty list")
    pairs = []
    for i, orb in enumerate(orbits):
        if not isinstance(orb, Mapping):
            raise ModelSpecError(f"field 'orbits[{i}]' must be an object")
        for key in ("point", "weight"):
            if key not in orb:
                raise ModelSpecError(f"missing field 'orbits[{i}].{key}'")
        pt, w = orb["point"], orb["weight"]
        if (not isinstance(pt, list) or len(pt) != dim
                or not all(isinstance(c, int) and not isinstance(c, bool) for c in pt)):
            raise ModelSpecError(f"field 'orbits[{i}].point' must be {dim} integers")
        if not isinstance(w, (int, float)) or isinstance(w, bool):
            raise ModelSpecError(f"field 'orbits[{i}].weight' must be a number")
        pairs.append((pt, w))
    return StepDistribution.from_orbits(dim, pairs, name=str(spec.get("name", "custom")))


def load_model_spec(path) -> StepDistribution:
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelSpecError(f"invalid JSON in {path}: {exc}") from None
    return parse_model_spec(spec)


def builtin_model(name: str, dim: int) -> StepDistribution:
    """``"srw"`` or ``"spread-out-R"``."""
    if name == "srw":
        return StepDistribution.simple(dim)
    if name.startswith("spread-out-"):
        try:
            R = int(name.rsplit("-", 1)[1])
        except ValueError:
            raise ModelSpecError(f"bad spread-out range in {name!r}") from None
        return StepDistribution.spread_out(dim, R)
    raise ModelSpecError(f"unknown built-in model {name!r}")
