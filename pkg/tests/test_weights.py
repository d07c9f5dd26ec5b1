from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullwave.exterior.radial import images_solution
from nullwave.model import Field, InitialData
from nullwave.profiles import RadialBump, TruncatedGaussian
from nullwave.weights import (
    RunningSup,
    WeightSpec,
    bracket,
    cross_speed_constant,
    data_norm_B,
    monitor_e,
    monitor_e_radial,
    multi_indices,
    parse_weight_name,
    phi,
    phi0_inverse_constant,
    weight_w,
    weight_wc,
    weighted_sup_norm,
)


def test_phi_examples():
    assert phi(-1, 0.0, np.zeros(3)) == 1.0
    for t in (0.0, 3.0, 50.0):
        assert phi(0, t, np.zeros(3)) == pytest.approx(1 / math.log(3), rel=1e-15)
    assert phi(2, 7.0, np.array([0.0, 7.0, 0.0])) == pytest.approx(1.0, abs=1e-14)


def test_weight_examples():
    assert weight_w(1, 1, 0.0, np.zeros(3), (1.0,)) == 1.0
    x = np.array([10.0, 0, 0])
    assert weight_w(1, 1, 10.0, x, (1.0,)) == pytest.approx(math.sqrt(401.0), rel=1e-15)
    assert weight_wc(0, 1, 10.0, x, (1.0, 2.0), 1.0) == pytest.approx(math.sqrt(101.0), rel=1e-15)


def test_weights_need_speeds():
    with pytest.raises(ValueError):
        weight_w(0, 1, 1.0, np.zeros(3), ())
    # c_0 = 0 always stays in the minimum
    assert weight_wc(0, 1, 2.0, np.array([3.0, 0, 0]), (1.0,), 1.0) == pytest.approx(math.sqrt(10.0))


def test_weight_spec_names_round_trip():
    speeds = (1.0, 2.0)
    for name in ("phi(-1)", "phi(0)", "W(1,1)", "Wc(0,1,2)"):
        assert parse_weight_name(name, speeds).name == name
    with pytest.raises(ValueError):
        parse_weight_name("W(1)", speeds)
    with pytest.raises(ValueError):
        WeightSpec("Wc", 0, 1, speeds=speeds)


def test_weighted_sup_zero_and_single_sample():
    spec = parse_weight_name("W(1,1)", (1.0,))
    assert np.all(weighted_sup_norm([0.0, 1.0], [0.0, 2.0], np.zeros((2, 2)), spec) == 0)
    assert weighted_sup_norm([0.0], [0.0], [[1.0]], spec)[-1] == 1.0


def test_weighted_sup_matches_brute_force():
    spec = parse_weight_name("Wc(0,1,1)", (1.0, 0.5))
    times = np.linspace(0, 20, 41)
    radii = np.linspace(1, 30, 59)
    vals = np.exp(-((radii[None, :] - 3 - times[:, None]) ** 2)) / radii[None, :]
    got = weighted_sup_norm(times, radii, vals, spec, t=12.0)
    best = 0.0
    for i, s in enumerate(times):
        if s > 12.0:
            break
        for j, r in enumerate(radii):
            w = math.sqrt(1 + r * r) * min(
                math.sqrt(1 + r * r), math.sqrt(1 + (0.5 * s - r) ** 2)
            )
            best = max(best, w * abs(vals[i, j]))
        assert got[i] == pytest.approx(best, rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(-10, 10), min_size=4, max_size=4), min_size=1, max_size=10))
def test_running_sup_monotone_and_matches_batch(rows):
    spec = parse_weight_name("phi(-1)", (1.0,))
    radii = np.array([1.0, 2.0, 4.0, 8.0])
    vals = np.array(rows)
    times = np.arange(len(rows), dtype=float)
    batch = weighted_sup_norm(times, radii, vals, spec)
    run = RunningSup(spec)
    seq = [run.update(t, radii, v) for t, v in zip(times, vals)]
    assert np.all(np.diff(seq) >= 0)
    assert np.allclose(seq, batch, rtol=1e-15, atol=0)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0, 500),
    st.floats(0, 500),
    st.floats(-2, 2),
    st.floats(0, 2),
    st.floats(0, 2),
)
def test_weight_ordering(t, r, rho, dnu, kappa):
    speeds = (1.0, 0.5)
    x = np.array([r, 0.0, 0.0])
    lo = weight_w(rho, kappa, t, x, speeds)
    hi = weight_w(rho + dnu, kappa, t, x, speeds)
    assert lo <= hi * (1 + 1e-12)
    # dropping a speed from the minimum can only raise it
    assert hi <= weight_wc(rho + dnu, kappa, t, x, speeds, 1.0) * (1 + 1e-12)


def test_phi_is_continuous_across_branches():
    t, r = 4.0, 3.0
    assert phi(1e-9, t, [r, 0, 0]) == pytest.approx(1.0, rel=1e-8)
    assert phi(-1e-9, t, [r, 0, 0]) == pytest.approx(1.0, rel=1e-8)
    assert phi(0, t, [r, 0, 0]) < 1.0


def test_phi0_inverse_constant_finite():
    t = np.linspace(0, 200, 201)[:, None]
    r = np.linspace(1, 400, 400)[None, :]
    for mu in (0.1, 0.5, 1.0):
        C = phi0_inverse_constant(mu, 1.0, t, r)
        assert math.isfinite(C) and C > 0
    # larger grids keep the constant bounded
    C1 = phi0_inverse_constant(0.5, 1.0, t, r)
    C2 = phi0_inverse_constant(0.5, 1.0, 5 * t, 5 * r)
    assert C2 <= 1.5 * C1


def test_cross_speed_constant_bounded_in_scale():
    t = np.linspace(0, 100, 101)[:, None]
    r = np.linspace(0, 200, 201)[None, :]
    C1 = cross_speed_constant(1.0, 0.5, t, r, (1.0, 0.5))
    C2 = cross_speed_constant(1.0, 0.5, 10 * t, 10 * r, (1.0, 0.5))
    assert C1 > 0 and C2 <= 1.2 * C1
    with pytest.raises(ValueError):
        cross_speed_constant(1.0, 1.0, t, r, (1.0,))


def test_multi_indices():
    assert list(multi_indices((0, 1), 2)) == [(), (0,), (1,), (0, 0), (0, 1), (1, 1)]


# -- data norm ---------------------------------------------------------------


def test_data_norm_zero():
    bump = RadialBump(radius=3.0, half_width=0.5)
    assert data_norm_B(1.0, 1, InitialData(0.0, (bump,), (None,), 2.0)) == 0.0
    assert data_norm_B(1.0, 1, InitialData(1.0, (None,), (None,), 2.0)) == 0.0


def test_data_norm_radial_ignores_rotations():
    # rotations annihilate radial data: exactly along the orbit, to O(h^2) with the Cartesian stencil
    from nullwave.exterior.vectorfields import apply_z

    bump = RadialBump(radius=3.0, half_width=0.5)
    x = np.array([[3.1, 0.2, -0.4], [0.0, 2.8, 0.5]])
    for which in (4, 5, 6):
        orbit = apply_z(lambda t, y: bump(y), which, 1e-3, orbit=True)
        assert np.max(np.abs(orbit(0.0, x))) < 1e-10
        errs = [np.max(np.abs(apply_z(lambda t, y: bump(y), which, h)(0.0, x))) for h in (2e-3, 1e-3)]
        assert errs[1] < 1e-5 and errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_data_norm_sees_off_centre_profile():
    g = TruncatedGaussian(sigma=0.4, cutoff=1.0, center=(0.0, 0.0, 3.0))
    assert data_norm_B(0.0, 0, InitialData(1.0, (g,), (None,), 1.5)) >= 1.0


def test_data_norm_scales_with_amplitude_and_rho():
    g = TruncatedGaussian(sigma=0.4, cutoff=1.0, center=(0.0, 0.0, 3.0))
    d1 = InitialData(1.0, (g,), (None,), 1.5)
    d2 = InitialData(2.0, (g,), (None,), 1.5)
    assert data_norm_B(0.0, 0, d2) == pytest.approx(2 * data_norm_B(0.0, 0, d1), rel=1e-14)
    assert data_norm_B(2.0, 0, d1) > data_norm_B(0.0, 0, d1)


def test_data_norm_refinement():
    # the difference step h controls the error: successive halvings shrink the change by ~4
    bump = RadialBump(radius=3.0, half_width=0.8)
    data = InitialData(1.0, (bump,), (bump,), 2.0)
    vals = [data_norm_B(1.0, 1, data, dr=0.01, h=h) for h in (4e-2, 2e-2, 1e-2)]
    d1, d2 = abs(vals[0] - vals[1]), abs(vals[1] - vals[2])
    assert d2 < d1
    assert d1 / d2 == pytest.approx(4.0, rel=0.2)


# -- monitor -----------------------------------------------------------------


def _slab(values, times, r, speeds=(1.0,)):
    return Field("radial", np.asarray(times), np.asarray(values)[:, None, :], r, speeds)


def test_monitor_zero_field():
    r = np.linspace(1, 10, 91)
    f = _slab(np.zeros((3, len(r))), [0.0, 0.1, 0.2], r)
    assert np.all(monitor_e(f, 0) == 0)
    assert np.all(monitor_e(f, 1) == 0)


def test_monitor_errors():
    r = np.linspace(1, 10, 91)
    with pytest.raises(ValueError):
        monitor_e(_slab(np.zeros((2, len(r))), [0.0, 0.1], r), 0)
    with pytest.raises(ValueError):
        monitor_e(_slab(np.zeros((3, len(r))), [0.0, 0.1, 0.2], r), 2)


def test_monitor_matches_images_oracle():
    phi0 = RadialBump(radius=2.5, half_width=0.5)
    psi0 = RadialBump(radius=2.3, half_width=0.4, height=-0.8)
    r = np.linspace(1.0, 12.0, 1101)
    dt = 1e-3
    t0 = 3.0
    levels = [images_solution(phi0, psi0, 1.0, t0 + s * dt, r) for s in (-1, 0, 1)]
    got = monitor_e(_slab(levels, [t0 - dt, t0, t0 + dt], r), 1)[0]
    # oracle jet from wider time differences and analytic r-derivatives of the same solution
    H = 1e-4
    u = levels[1]
    up, um = images_solution(phi0, psi0, 1.0, t0 + H, r), images_solution(phi0, psi0, 1.0, t0 - H, r)
    ut = (up - um) / (2 * H)
    utt = (up - 2 * u + um) / H**2
    dr = r[1] - r[0]
    ur = np.gradient(u, dr, edge_order=2)
    want = monitor_e_radial(t0, r, 1.0, u, ut, ur, utt, np.gradient(ut, dr, edge_order=2),
                            np.gradient(ur, dr, edge_order=2), k=1)
    assert got == pytest.approx(want, rel=1e-3)
    assert math.isfinite(got) and got > 0


def test_monitor_dplus_small_for_outgoing_wave():
    # u = p(r - t)/r: D+ u = -p/r^2, much smaller than the other terms at large r
    p = lambda s: np.exp(-((s - 2.0) ** 2) * 4)  # noqa: E731
    r = np.linspace(20.0, 60.0, 4001)
    dt = 1e-3
    t0 = 30.0
    levels = [p(r - (t0 + s * dt)) / r for s in (-1, 0, 1)]
    u, up, um = levels[1], levels[2], levels[0]
    ut = (up - um) / (2 * dt)
    ur = np.gradient(u, r[1] - r[0], edge_order=2)
    dplus = ut + ur
    assert np.max(np.abs(dplus + p(r - t0) / r**2)) < 1e-3 * np.max(np.abs(ut))
    assert np.max(np.abs(dplus)) < 0.05 * np.max(np.abs(ut))
    assert np.all(np.isfinite(monitor_e(_slab(levels, [t0 - dt, t0, t0 + dt], r), 1)))


def test_bracket():
    assert bracket(0.0) == 1.0
    assert bracket(3.0) == pytest.approx(math.sqrt(10.0))
