import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latgreen.asymptotics import (CSV_COLUMNS, SCHEMA_VERSION, AsymptoticsReport, ReportRow,
                                  build_report, fit_decay_exponent, remainder, sobolev_norm,
                                  u_decay_check, verify_bound)
from latgreen.lattice import StepDistribution
from latgreen.smoothing import make_bump
from latgreen.symbols import constant_symbol, constants, green_symbol, h_symbol

CHI = make_bump(3)


def test_remainder_exact_cases():
    a3 = constants(3).a_d
    x = (3, 4, 0)
    assert remainder(a3 * 6 / 5, x, 6, 3) == pytest.approx(0, abs=1e-14)
    assert remainder(0.0, x, 6, 3) == -6


@given(st.floats(-1, 1), st.integers(1, 30))
def test_remainder_linear(f, L):
    x = (L, 0, 0)
    diff = remainder(2 * f, x, 6, 3) - remainder(f, x, 6, 3)
    assert diff == pytest.approx(L * f / constants(3).a_d, abs=1e-12)


def test_fit_exact_power():
    rows = [(r, 3.0 / r) for r in (2, 5, 11, 40)]
    fit = fit_decay_exponent(rows)
    assert fit.slope == pytest.approx(-1, abs=1e-12)
    assert fit.r2 == pytest.approx(1)
    assert fit_decay_exponent([(r, 7.0) for r in (1, 2, 3)]).slope == pytest.approx(0, abs=1e-12)


@given(st.floats(1e-3, 1e3))
def test_fit_scale_invariant(c):
    rows = [(r, r**-2.3 * (1 + 0.1 / r)) for r in (3, 6, 9, 20)]
    a = fit_decay_exponent(rows)
    b = fit_decay_exponent([(r, c * v) for r, v in rows])
    assert b.slope == pytest.approx(a.slope, abs=1e-12)
    assert b.intercept - a.intercept == pytest.approx(math.log(c), abs=1e-10)


def test_fit_sign_change_warns():
    with pytest.warns(RuntimeWarning):
        fit = fit_decay_exponent([(1, 1.0), (2, -0.5), (4, 0.25)])
    assert fit.absolute


def test_fit_validation():
    with pytest.raises(ValueError):
        fit_decay_exponent([(1, 1.0), (2, 0.5)])
    with pytest.raises(ValueError):
        fit_decay_exponent([(1, 1.0), (1, 0.5), (2, 0.2)])


def test_sobolev_norm_of_constant():
    one = constant_symbol(3, 1.0)
    ball = 4 / 3 * math.pi * CHI.r_inner**3 / (2 * math.pi) ** 3
    v0 = sobolev_norm(one, "torus-minus-V", 0, 1, CHI)
    assert v0 == pytest.approx(1 - ball, rel=1e-2)
    assert sobolev_norm(one, "torus-minus-V", 2, 1, CHI) == pytest.approx(v0, rel=1e-2)


def test_sobolev_norm_monotone():
    h = h_symbol(green_symbol(StepDistribution.simple(3)))
    n1 = sobolev_norm(h, "U", 1, 2, CHI)
    n2 = sobolev_norm(h, "U", 2, 2, CHI)
    small = sobolev_norm(h, "U", 2, 2, make_bump(3, math.pi / 8, math.pi / 4))
    assert small < n2 and n1 < n2


def test_sobolev_norm_grid_stable():
    h = h_symbol(green_symbol(StepDistribution.simple(3)))
    a = sobolev_norm(h, "U", 2, 2, CHI, 32)
    b = sobolev_norm(h, "U", 2, 2, CHI, 64)
    assert a == pytest.approx(b, rel=1e-2)


def test_sobolev_norm_region_validation():
    with pytest.raises(ValueError):
        sobolev_norm(constant_symbol(3), "everywhere", 0, 1, CHI)


def _report(rows, norms=(1.0, 1.0)):
    rep = AsymptoticsReport(3, "test", rows, 6.0)
    rep.norm_f, rep.norm_h = norms
    return rep


def test_verify_bound_exact_leading_term():
    a3 = constants(3).a_d
    rows = [ReportRow((L, 0, 0), L, a3 * 6 / L, 6.0, 0.0, 0.0) for L in (5, 10, 20)]
    assert verify_bound(_report(rows)) == 0


def test_verify_bound_requires_norms():
    rep = AsymptoticsReport(3, "test", [ReportRow((1, 0, 0), 1, 1, 1, 1, 0)], 6.0)
    with pytest.raises(ValueError):
        verify_bound(rep)
    with pytest.raises(ValueError):
        verify_bound(_report([ReportRow((1, 0, 0), 1, 1, 1, 1, 0)], (0.0, 0.0)))


def test_u_decay_single_radius():
    h = h_symbol(green_symbol(StepDistribution.simple(3)))
    out = u_decay_check(h, CHI, [15.0])
    assert len(out) == 1 and out[0][0] == 15.0
    with pytest.raises(ValueError):
        u_decay_check(h, CHI, [20.0, 10.0])


@pytest.fixture(scope="module")
def srw_report():
    f = green_symbol(StepDistribution.simple(3))
    return build_report(f, CHI, [(20, 0, 0), (10, 0, 0), (40, 0, 0)], model_id="srw",
                        config={"note": "test"})


def test_report_invariants(srw_report):
    rep = srw_report
    assert [r.L for r in rep.rows] == [10, 20, 40]
    for r in rep.rows:
        assert r.remainder == r.scaled - rep.h0
    assert abs(rep.rows[-1].remainder) < abs(rep.rows[0].remainder)
    assert rep.fitted_exponent == pytest.approx(-1, abs=0.05)
    ratio = max(abs(r.remainder) for r in rep.rows) / (rep.norm_f + rep.norm_h)
    assert rep.bound_ratio == pytest.approx(ratio)


def test_report_serialisation(srw_report):
    doc = json.loads(srw_report.to_json())
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["rows"][0]["x"] == [10, 0, 0]
    lines = srw_report.to_csv().splitlines()
    assert lines[0].startswith("#")
    assert lines[1].split(",") == CSV_COLUMNS
    assert len(lines) == 2 + len(srw_report.rows)
    assert srw_report.to_json() == srw_report.to_json()
