import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from visgame.corner import (
    CornerError,
    CornerSpec,
    S_corner,
    barrier_membership,
    barrier_mimic_simulate,
    corner_bounds,
    corner_state,
    piecewise_constant_control,
    t0_corner,
    to_polar,
    value_corner,
)
from visgame.game import GameState, Speeds

SP = Speeds(1.0, 1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        CornerSpec((0, 0), 0.5, 0.2)
    poly = CornerSpec((0, 0), -math.pi / 2, math.pi / 4).polygon()
    assert poly.contains((-1.0, 0.5), strict=True)
    assert not poly.contains((0.5, -0.5))


def test_to_polar_example():
    spec = CornerSpec((0, 0), -math.pi / 2, math.pi / 4)
    ps = to_polar(GameState((0, -2), (2, 0)), spec, check_horizons=False)
    assert (ps.d_E, ps.theta_E, ps.d_P, ps.theta_P) == pytest.approx((2, -math.pi / 2, 2, 0))


def test_to_polar_rejects_unpinned_state():
    spec = CornerSpec((0, 0), -math.pi / 2, math.pi / 4)
    with pytest.raises(CornerError):
        to_polar(GameState((3, -0.5), (2, 2.5)), spec)


def test_value_example():
    ps = corner_state(1.0, 2.0, math.pi - 0.1)
    t0 = t0_corner(ps, None, SP)
    assert t0 == pytest.approx(0.461940, abs=1e-6)
    assert S_corner(0.0, ps, SP) == pytest.approx(ps.gap)
    V = value_corner(ps, SP, t0)
    assert V == pytest.approx(0.1977012, abs=1e-7)
    b = corner_bounds(ps, SP, t0)
    assert b.upper_valid and V <= b.upper == pytest.approx(0.2)


def test_nonusable_side_exceeds_t0():
    ps = corner_state(2.0, 1.0, math.pi - 0.1)
    t0 = t0_corner(ps, None, SP)
    assert value_corner(ps, SP, t0) is None
    b = corner_bounds(ps, SP, t0)
    assert b.lower == t0 and not b.upper_valid


def test_boundary_state_has_zero_value():
    ps = corner_state(1.0, 2.0, math.pi)
    assert value_corner(ps, SP, 0.3) == 0.0


def test_arcsin_domain():
    ps = corner_state(1.0, 2.0, 3.0)
    with pytest.raises(ValueError):
        S_corner(1.5, ps, SP)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 2), st.floats(0.5, 3), st.floats(math.pi - 0.3, math.pi - 1e-3), st.floats(0.2, 5))
def test_value_scales_with_distances(dE, dP, gap, lam):
    ps = corner_state(dE, dP, gap)
    t0 = 0.4 * min(dE, dP)
    V = value_corner(ps, SP, t0)
    Vs = value_corner(ps.scaled(lam), SP, lam * t0)
    if V is None:
        assert Vs is None
    else:
        assert Vs == pytest.approx(lam * V, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 2), st.floats(0.5, 3), st.floats(math.pi - 0.3, math.pi - 1e-3))
def test_value_within_bounds(dE, dP, gap):
    ps = corner_state(dE, dP, gap)
    t0 = t0_corner(ps, None, SP, n_check=16)
    V = value_corner(ps, SP, t0)
    b = corner_bounds(ps, SP, t0)
    if V is None:
        assert b.upper_valid is False or b.upper > t0
    else:
        assert b.contains(V, 1e-12)


def test_barrier_membership():
    sp = Speeds(1.0, 2.0)
    assert barrier_membership(corner_state(1.0, 2.0, math.pi / 2), sp)
    assert not barrier_membership(corner_state(1.1, 2.0, math.pi / 2), sp)


@pytest.mark.parametrize("kind", ["angular", "radial"])
def test_structured_opponents_conserve_exactly(kind):
    sp = Speeds(1.0, 2.0)
    ps = corner_state(1.0, 2.0, math.pi / 2)
    ctrl = piecewise_constant_control(np.random.default_rng(0), 4, kind)
    tr = barrier_mimic_simulate(ps, sp, ctrl, 1e-3, 0.2)
    assert tr.max_drift < 1e-12


def test_random_opponent_drift_is_first_order():
    sp = Speeds(1.0, 2.0)
    ps = corner_state(1.0, 2.0, math.pi / 2)
    ctrl = piecewise_constant_control(np.random.default_rng(1), 8)
    a = barrier_mimic_simulate(ps, sp, ctrl, 2e-3, 0.2)
    b = barrier_mimic_simulate(ps, sp, ctrl, 1e-3, 0.2)
    assert 1.7 <= a.max_drift / b.max_drift <= 2.3
    for defender in ("pursuer",):
        c = barrier_mimic_simulate(ps, sp, ctrl, 1e-3, 0.2, defender=defender)
        assert c.max_drift < 0.01


def test_control_magnitude_checked():
    ps = corner_state(1.0, 2.0, math.pi / 2)
    with pytest.raises(ValueError):
        barrier_mimic_simulate(ps, SP, np.array([[2.0, 0.0]]), 1e-3, 0.01)
