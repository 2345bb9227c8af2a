import math

import numpy as np
import pytest

from latgreen.lattice import StepDistribution
from latgreen.quadrature import QuadratureGrid
from latgreen.smoothing import make_bump
from latgreen.symbols import constant_symbol, green_symbol, h_symbol, step_symbol
from latgreen.transform import (AliasingError, decompose, i1_polar, i1_riesz, i1_subtraction,
                                i2_smooth_part, inverse_ft_grid, inverse_ft_points, j2_tail,
                                mass_integral, radial_riesz_term, riesz_kernel)

WATSON = 1.516386059151978
SRW3 = StepDistribution.simple(3)
CHI = make_bump(3)


@pytest.fixture(scope="module")
def f3():
    return green_symbol(SRW3)


@pytest.fixture(scope="module")
def h3(f3):
    return h_symbol(f3)


def test_riesz_kernel_values():
    assert riesz_kernel(3, 1.0) == pytest.approx(1 / (4 * math.pi))
    assert riesz_kernel(3, 2.0) == pytest.approx(1 / (8 * math.pi))
    assert riesz_kernel(5, 1.0) == pytest.approx(1 / (8 * math.pi**2))
    with pytest.raises(ValueError):
        riesz_kernel(3, 0.0)


def test_grid_transform_recovers_step_weights():
    D = StepDistribution.spread_out(3, 1)
    lf = inverse_ft_grid(step_symbol(D), QuadratureGrid(3, 16))
    for p in [(1, 0, 0), (1, 1, -1), (0, 0, 0), (2, 0, 0)]:
        assert lf(p) == pytest.approx(D.support.get(p, 0.0), abs=1e-14)


def test_constant_symbol_is_delta():
    lf = inverse_ft_grid(constant_symbol(3, 1.0), QuadratureGrid(3, 8))
    assert lf((0, 0, 0)) == pytest.approx(1.0)
    assert lf((1, 0, 0)) == pytest.approx(0.0, abs=1e-15)


def test_inverse_ft_points_error_covers_truth(f3):
    est = inverse_ft_points(f3, [(0, 0, 0), (1, 0, 0)], QuadratureGrid(3, 64))
    truth = np.array([WATSON, WATSON - 1])
    assert np.all(np.abs(est.value - truth) <= est.error)


def test_aliasing_guard(f3):
    with pytest.raises(AliasingError):
        inverse_ft_points(f3, (9, 0, 0), QuadratureGrid(3, 64))


def test_subtraction_annihilates_constants():
    c = 2.5
    h = constant_symbol(3, c)
    x = [(0, 0, 0), (3, 1, 0), (7, 0, 2)]
    est = i1_subtraction(h, CHI, x, h0=c)
    np.testing.assert_allclose(np.real(est.value), c * radial_riesz_term(CHI, x).value,
                               rtol=1e-12)


def test_decomposition_matches_watson(f3):
    res = decompose(f3, CHI, [(1, 0, 0), (0, 0, 0)])
    assert [r.x for r in res] == [(0, 0, 0), (1, 0, 0)]
    assert res[0].f_total == pytest.approx(WATSON, abs=1e-6)
    assert res[1].f_total == pytest.approx(WATSON - 1, abs=1e-6)
    assert all(r.method_tag == "subtraction+grid" for r in res)


@pytest.mark.parametrize("method", ["polar", "riesz"])
def test_i1_routes_agree(h3, method):
    x = [(3, 4, 5), (10, 0, 0)]
    ref = i1_subtraction(h3, CHI, x)
    other = i1_polar(h3, CHI, x) if method == "polar" else i1_riesz(h3, CHI, x)
    assert np.all(np.abs(np.real(other.value) - np.real(ref.value)) <= other.error + ref.error)


def test_i1_riesz_at_origin_matches_subtraction(h3):
    r = i1_riesz(h3, CHI, (0, 0, 0))
    s = i1_subtraction(h3, CHI, (0, 0, 0))
    assert abs(r.value - s.value) <= r.error + s.error


def test_i2_grid_doubling(f3):
    x = [(2, 1, 0), (12, 0, 0)]
    coarse = i2_smooth_part(f3, CHI, x, QuadratureGrid(3, 128))
    fine = i2_smooth_part(f3, CHI, x, QuadratureGrid(3, 256))
    assert np.all(np.abs(fine.value - coarse.value) <= coarse.error + 1e-15)


def test_j2_tail_arguments(h3):
    with pytest.raises(ValueError):
        j2_tail(h3, CHI, (10, 0, 0), epsilon=1.2)
    with pytest.raises(ValueError):
        j2_tail(h3, CHI, (0, 0, 0))


def test_mass_identity(h3):
    m = mass_integral(h3, CHI)
    assert abs(m.value - 6.0) <= 1e-6
    assert m.error < 1e-6


def test_decompose_rejects_unknown_method(f3):
    with pytest.raises(ValueError):
        decompose(f3, CHI, (1, 0, 0), method="magic")
