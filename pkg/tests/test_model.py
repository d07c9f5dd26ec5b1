from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullwave.model import Grid, InitialData, NonlinearitySpec, Q0Term, QabTerm, QuadraticTerm, WaveSystem, validate_scenario
from nullwave.profiles import OutgoingVelocity, RadialBump, TruncatedGaussian, profile_from_dict, profile_to_dict

BUMP = RadialBump(radius=2.5, half_width=0.5)


def _data(*profiles, inner=2.0, eps=1.0):
    return InitialData(eps, tuple(profiles), tuple(None for _ in profiles), inner)


def test_valid_radial_scenario():
    rep = validate_scenario(WaveSystem((1.0,)), _data(BUMP), Grid(t_max=10.0, dr=0.05, r_max=16.0))
    assert rep.ok, rep.errors


def test_cfl_violation_rejected():
    grid = Grid(mode="cartesian3d", t_max=1.0, dx=0.1, half_width=6.0, dt=0.09)
    rep = validate_scenario(WaveSystem((1.0,)), _data(BUMP), grid)
    assert any("CFL" in e for e in rep.errors)


def test_support_touching_obstacle_rejected():
    near = RadialBump(radius=1.0, half_width=0.5)
    rep = validate_scenario(WaveSystem((1.0,)), _data(near, inner=0.5), Grid(t_max=1.0, r_max=10.0))
    assert any("obstacle" in e for e in rep.errors)


def test_padding_required_without_sponge():
    grid = Grid(t_max=10.0, dr=0.05, r_max=12.0)
    assert not validate_scenario(WaveSystem((1.0,)), _data(BUMP), grid).ok
    assert validate_scenario(WaveSystem((1.0,)), _data(BUMP), Grid(t_max=10.0, dr=0.05, r_max=12.0, sponge_width=2.0)).ok


def test_radial_rejects_other_obstacles():
    rep = validate_scenario(WaveSystem((1.0,)), _data(BUMP), Grid(t_max=1.0, r_max=10.0, obstacle_radius=0.5))
    assert any("unit ball" in e for e in rep.errors)


def test_radial_rejects_non_integer_speed_ratio():
    rep = validate_scenario(WaveSystem((1.0, 0.4)), _data(BUMP, BUMP), Grid(t_max=1.0, r_max=10.0))
    assert any("integer" in e for e in rep.errors)


def test_radial_rejects_off_centre_profile():
    g = TruncatedGaussian(center=(4.0, 0.0, 0.0), sigma=0.3, cutoff=1.0)
    rep = validate_scenario(WaveSystem((1.0,)), _data(g, inner=2.0), Grid(t_max=1.0, r_max=10.0))
    assert any("centered" in e for e in rep.errors)


def test_radial_flags_inert_qab():
    sys = WaveSystem((1.0, 1.0), NonlinearitySpec(qab=(QabTerm(0, 0, 1, 1, 2, 1.0),)))
    rep = validate_scenario(sys, _data(BUMP, BUMP), Grid(t_max=1.0, r_max=10.0))
    assert rep.ok and rep.warnings


def test_wave_system_invariants():
    with pytest.raises(ValueError):
        WaveSystem(())
    with pytest.raises(ValueError):
        WaveSystem((1.0, -1.0))
    with pytest.raises(ValueError):
        WaveSystem((1.0, 2.0), NonlinearitySpec(q0=(Q0Term(0, 0, 1, 1.0),)))
    with pytest.raises(ValueError):
        WaveSystem((1.0,), NonlinearitySpec(qab=(QabTerm(0, 0, 0, 2, 1, 1.0),)))
    with pytest.raises(ValueError):
        WaveSystem((1.0,), NonlinearitySpec(quadratic=(QuadraticTerm(0, 0, 0, 0, 0, float("nan")),)))
    assert WaveSystem((1.0, 2.0, 1.0)).same_speed(0) == [0, 2]


def test_profiles_vanish_inside_support_radius():
    pts = np.array([[1.9, 0, 0], [0, 1.5, 1.0], [0.2, 0.1, 0.0]])
    assert np.all(BUMP(pts) == 0)
    assert np.all(OutgoingVelocity(base=BUMP, speed=1.0)(pts) == 0)


def test_profiles_are_keyword_only():
    with pytest.raises(TypeError):
        RadialBump(2.5, 0.5)


def test_profile_gradient_matches_differences():
    g = TruncatedGaussian(center=(0.5, -0.2, 3.0), sigma=0.4, cutoff=1.2)
    x = np.array([0.7, 0.1, 2.6])
    h = 1e-6
    fd = np.array([(g(x + h * e) - g(x - h * e)) / (2 * h) for e in np.eye(3)])
    assert np.allclose(g.gradient(x), fd, atol=1e-7)


def test_outgoing_velocity_needs_centred_base():
    with pytest.raises(ValueError):
        OutgoingVelocity(base=TruncatedGaussian(center=(3.0, 0.0, 0.0)), speed=1.0)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(1.5, 6.0),
    st.floats(0.1, 1.0),
    st.floats(-3.0, 3.0).filter(lambda h: abs(h) > 1e-3),
)
def test_profile_dict_round_trip(radius, width, height):
    p = RadialBump(radius=radius, half_width=width, height=height)
    assert profile_from_dict(profile_to_dict(p)) == p
    o = OutgoingVelocity(base=p, speed=0.5)
    assert profile_from_dict(profile_to_dict(o), speed=0.5) == o
