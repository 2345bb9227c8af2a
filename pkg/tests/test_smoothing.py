import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latgreen.smoothing import bump_derivative, make_bump, smooth_step


def test_smooth_step_limits():
    assert smooth_step(-1.0) == 1 and smooth_step(0.0) == 1
    assert smooth_step(1.0) == 0 and smooth_step(2.0) == 0
    assert smooth_step(0.5) == pytest.approx(0.5)


@given(st.floats(0, 1))
def test_smooth_step_reflection(t):
    assert smooth_step(t) + smooth_step(1 - t) == pytest.approx(1.0, abs=1e-14)


def test_bump_regions():
    chi = make_bump(3)
    assert chi(np.array([0.5, 0.3, 0.0])) == 1.0
    assert chi(np.array([1.6, 0.0, 0.0])) == 0.0
    assert 0 < chi(np.array([1.2, 0.0, 0.0])) < 1


def test_radial_derivative_matches_differences():
    chi = make_bump(3)
    r = np.linspace(0.8, 1.55, 7)
    h = 1e-5
    fd = (chi.profile(r + h) - chi.profile(r - h)) / (2 * h)
    np.testing.assert_allclose(chi.radial_derivative(r), fd, atol=1e-7)


def test_bump_derivative_exact_zeros():
    chi = make_bump(3)
    assert bump_derivative(chi, np.array([0.1, 0.0, 0.0]), (1, 0, 0)) == 0.0
    assert bump_derivative(chi, np.array([2.0, 0.0, 0.0]), (2, 0, 0)) == 0.0
    assert bump_derivative(chi, np.array([0.1, 0.0, 0.0]), (0, 0, 0)) == 1.0


def test_bump_derivative_chain_rule():
    chi = make_bump(3)
    k = np.array([0.9, 0.5, 0.2])
    r = np.linalg.norm(k)
    expected = chi.radial_derivative(r) * k[0] / r
    assert bump_derivative(chi, k, (1, 0, 0)) == pytest.approx(float(expected), rel=1e-8)


def test_bump_derivative_stencil_guard():
    chi = make_bump(3, 0.5, 3.0)
    with pytest.raises(ValueError):
        bump_derivative(chi, np.array([math.pi, 0, 0]), (1, 0, 0))


@pytest.mark.parametrize("ri, ro", [(0.5, 0.5), (-0.1, 1.0), (1.0, 3.5)])
def test_make_bump_validation(ri, ro):
    with pytest.raises(ValueError):
        make_bump(3, ri, ro)


def test_volume_integral_bounds():
    chi = make_bump(3)
    ball = lambda r: 4 / 3 * math.pi * r**3 / (2 * math.pi) ** 3  # noqa: E731
    assert ball(chi.r_inner) < chi.volume_integral() < ball(chi.r_outer)
