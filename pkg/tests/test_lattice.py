import json
import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latgreen.lattice import (LatticeFunction, ModelSpecError, StepDistribution, as_point,
                              builtin_model, convolve, green_mc_oracle, green_series_oracle,
                              green_series_oracle_many, load_model_spec, mc_step_cap, moment,
                              parse_model_spec, series_partial_sum, symmetry_orbit,
                              visit_sequence)

# Watson's integral for the simple random walk on Z^3 (expected visits to the origin)
WATSON = 1.516386059151978

SRW3 = StepDistribution.simple(3)


def test_moments_of_simple_walk():
    assert moment(SRW3, 0) == 1
    assert moment(SRW3, 2) == 1
    assert moment(SRW3, 4) == 1


def test_moment_by_direct_sum():
    D = StepDistribution.from_orbits(3, [((1, 0, 0), 1 / 12), ((1, 1, 0), 1 / 24)])
    assert moment(D, 2) == pytest.approx(6 / 12 + 12 * 2 / 24)
    assert moment(D, 0) == pytest.approx(1.0)


def test_moment_rejects_odd_order():
    with pytest.raises(ValueError):
        moment(SRW3, 3)


def test_spread_out_is_uniform():
    D = StepDistribution.spread_out(3, 2)
    assert len(D.support) == 124
    assert D.range == 2
    assert min(D.weights) == max(D.weights)


def test_from_orbits_fills_symmetry():
    D = StepDistribution.from_orbits(3, [((0, 1, 0), 1 / 6)])
    assert set(D.support) == symmetry_orbit((1, 0, 0))


@pytest.mark.parametrize("support, msg", [
    ({(1, 0, 0): 0.5, (-1, 0, 0): 0.5}, "symmetric"),
    ({(1, 0, 0): 1 / 6, (-1, 0, 0): 1 / 6, (0, 1, 0): 1 / 6, (0, -1, 0): 1 / 6,
      (0, 0, 1): 1 / 6, (0, 0, -1): 0.1}, "sum"),
    ({}, "empty"),
])
def test_invalid_distributions(support, msg):
    with pytest.raises(ModelSpecError, match=msg):
        StepDistribution(3, support)


def test_negative_weights_allowed():
    D = StepDistribution.from_orbits(3, [((0, 0, 0), -0.5), ((1, 0, 0), 1.5 / 6)])
    assert not D.nonnegative
    assert moment(D, 0) == pytest.approx(1.0)


def test_model_spec_roundtrip(tmp_path):
    D = StepDistribution.spread_out(3, 2)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(D.to_spec()))
    E = load_model_spec(path)
    assert E.support.keys() == D.support.keys()
    assert all(math.isclose(E.support[k], D.support[k]) for k in D.support)


@pytest.mark.parametrize("spec, field", [
    ({"orbits": []}, "'dim'"),
    ({"dim": 3}, "'orbits'"),
    ({"dim": 3, "orbits": [{"point": [1, 0, 0]}]}, "orbits[0].weight"),
    ({"dim": 3, "orbits": [{"point": [1, 0], "weight": 1 / 6}]}, "orbits[0].point"),
    ({"dim": 3, "orbits": [{"point": [1, 0, 0], "weight": "x"}]}, "orbits[0].weight"),
])
def test_model_spec_errors_name_the_field(spec, field):
    with pytest.raises(ModelSpecError) as exc:
        parse_model_spec(spec)
    assert field in str(exc.value)


def test_builtin_models():
    assert builtin_model("srw", 4).sigma2 == 1
    assert builtin_model("spread-out-1", 3).range == 1
    with pytest.raises(ModelSpecError):
        builtin_model("levy", 3)


def test_convolve_identity_and_return_probability():
    g = LatticeFunction.from_steps(SRW3)
    assert convolve(LatticeFunction.delta(3), g).values == g.values
    assert convolve(g, g)((0, 0, 0)) == pytest.approx(1 / 6)


def test_convolve_dimension_mismatch():
    with pytest.raises(ValueError):
        convolve(LatticeFunction.delta(2), LatticeFunction.delta(3))


small_funcs = st.dictionaries(
    st.tuples(*[st.integers(-2, 2)] * 2), st.floats(-3, 3, allow_nan=False), max_size=6
).map(lambda d: LatticeFunction(2, d))


def _close_maps(a, b):
    keys = set(a.values) | set(b.values)
    return all(abs(a(k) - b(k)) <= 1e-12 for k in keys)


@given(small_funcs, small_funcs)
def test_convolve_commutes(f, g):
    assert _close_maps(convolve(f, g), convolve(g, f))


@given(small_funcs, small_funcs, small_funcs)
@settings(max_examples=40)
def test_convolve_associates(f, g, h):
    assert _close_maps(convolve(convolve(f, g), h), convolve(f, convolve(g, h)))


def test_visit_sequence_matches_direct_convolution():
    seq = visit_sequence(SRW3, [(0, 0, 0), (1, 1, 0)], 6)
    f = LatticeFunction.delta(3)
    g = LatticeFunction.from_steps(SRW3)
    for n in range(7):
        assert seq[0, n] == pytest.approx(f((0, 0, 0)), abs=1e-15)
        assert seq[1, n] == pytest.approx(f((1, 1, 0)), abs=1e-15)
        f = convolve(f, g)


def test_series_oracle_golden_values():
    c0, c1 = green_series_oracle_many(SRW3, [(0, 0, 0), (1, 0, 0)])
    assert c0.value == pytest.approx(WATSON, abs=1e-8)
    # one step from the origin: C(0) = 1 + C(e1)
    assert c1.value == pytest.approx(WATSON - 1, abs=1e-8)
    assert c0.tail_estimate < 1e-6


def test_series_oracle_symmetry():
    vals = [green_series_oracle(SRW3, p).value for p in [(2, 1, 0), (-1, 0, 2), (0, -2, -1)]]
    assert max(vals) - min(vals) < 1e-12


def test_partial_sums_nondecreasing():
    seq = visit_sequence(SRW3, [(1, 1, 1)], 40)[0]
    assert all(v >= 0 for v in seq)


def test_series_partial_sum_below_full_value():
    assert series_partial_sum(SRW3, (1, 0, 0), 20) < WATSON - 1


def test_series_oracle_rejects_degenerate_walk():
    with pytest.raises(ValueError):
        green_series_oracle(StepDistribution(3, {(0, 0, 0): 1.0}), (0, 0, 0))


def test_series_oracle_rejects_low_dimension():
    with pytest.raises(ValueError):
        green_series_oracle(StepDistribution.simple(2), (0, 0))


def test_spread_out_series_fast_default():
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        est = green_series_oracle(StepDistribution.spread_out(3, 2), (1, 0, 0))
    assert est.tail_estimate < 1e-6


def test_mc_is_deterministic_and_unbiased_at_matched_depth():
    a = green_mc_oracle(SRW3, (1, 0, 0), 20_000, seed=11, max_steps=60)
    b = green_mc_oracle(SRW3, (1, 0, 0), 20_000, seed=11, max_steps=60)
    assert a == b
    ref = series_partial_sum(SRW3, (1, 0, 0), 60)
    assert abs(a.mean - ref) <= 4 * a.stderr


def test_mc_unreachable_point_is_zero():
    assert green_mc_oracle(SRW3, (50, 0, 0), 100, seed=0, max_steps=10) == (0.0, 0.0)


def test_mc_rejects_signed_weights():
    D = StepDistribution.from_orbits(3, [((0, 0, 0), -0.5), ((1, 0, 0), 1.5 / 6)])
    with pytest.raises(ValueError):
        green_mc_oracle(D, (1, 0, 0), 100, seed=0)


def test_mc_step_cap_formula():
    assert mc_step_cap(SRW3, (1, 0, 0)) == 300
    assert mc_step_cap(SRW3, (2, 0, 0)) == 1200


def test_as_point():
    assert as_point([1.0, -2, 0]) == (1, -2, 0)
    with pytest.raises(ValueError):
        as_point([0.5, 0, 0])
