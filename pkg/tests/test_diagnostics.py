from __future__ import annotations

import math
import numpy as np
import pytest

from nullwave import constants
from nullwave.diagnostics import (
    DecayFitError,
    check_klainerman_sobolev,
    check_pointwise_decay,
    commutator_residuals,
    fit_dplus_exponent,
    fit_local_energy_decay,
    ks_family,
    ks_sides,
    q0_identity_study,
    sweep_lifespan,
)
from nullwave.model import RunResult
from nullwave.profiles import RadialBump
from nullwave.runner import dplus_density, run_scenario, std0_density, std1_density
from nullwave.scenarios import DT_SQUARED, Q0_SELF, lifespan_scenario, linear_decay_scenario, local_decay_scenario


def _synthetic(times, local=None, pointwise=None):
    times = np.asarray(times, dtype=float)
    return RunResult(
        times=times,
        total_energy=np.ones_like(times),
        local_energy={4.0: np.asarray(local, dtype=float)} if local is not None else {},
        weighted_sups={},
        monitor_e=None,
        sup_u=np.zeros_like(times),
        lifespan=None,
        blowup_flag=False,
        pointwise=pointwise or {},
    )


# -- local energy fit -------------------------------------------------------------


def test_fit_recovers_synthetic_rate():
    t = np.linspace(0, 100, 201)
    run = _synthetic(t, 3.0 * np.exp(-0.25 * t))
    fit = fit_local_energy_decay(run, 4.0, (10.0, 80.0))
    assert fit.rate == pytest.approx(0.25, rel=1e-10)
    assert fit.goodness == pytest.approx(1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), rel=1e-10)


def test_fit_is_amplitude_invariant():
    t = np.linspace(0, 100, 201)
    E = np.exp(-0.1 * t) * (1 + 0.1 * np.sin(t))
    a = fit_local_energy_decay(_synthetic(t, E), 4.0, (10.0, 80.0))
    b = fit_local_energy_decay(_synthetic(t, 1e-6 * E), 4.0, (10.0, 80.0))
    assert a.rate == pytest.approx(b.rate, rel=1e-9)
    assert a.goodness == pytest.approx(b.goodness, rel=1e-9)


def test_fit_refuses_zero_data_and_empty_window():
    t = np.linspace(0, 10, 11)
    with pytest.raises(DecayFitError):
        fit_local_energy_decay(_synthetic(t, np.zeros(11)), 4.0, (1.0, 5.0))
    with pytest.raises(DecayFitError):
        fit_local_energy_decay(_synthetic(t, np.ones(11)), 4.0, (20.0, 30.0))
    with pytest.raises(DecayFitError):
        fit_local_energy_decay(_synthetic(t, np.ones(11)), 2.0, (1.0, 5.0))


def test_fit_degenerate_when_energy_vanishes():
    # l = 0 radial run: the local energy is exactly zero once the pulse has left B_4
    scn = local_decay_scenario(c=1.0, angular_mode=0, t_max=30.0, dr=0.05)
    fit = fit_local_energy_decay(run_scenario(scn), 4.0, (10.0, 30.0))
    assert fit.degenerate and math.isnan(fit.rate) and "underflow" in fit.reason


def test_free_space_fit_is_degenerate():
    # free space (r_min = 0): strong Huygens leaves nothing in B_4 after exit
    from nullwave.exterior import RadialSolver, energies
    from nullwave.model import WaveSystem

    bump = RadialBump(radius=2.5, half_width=0.5)
    s = RadialSolver(WaveSystem((1.0,)), [bump.radial], [None], dr=0.05, r_max=40.0, r_min=0.0)
    times, local = [], []
    while s.t < 30.0:
        s.step()
        if s.n % 10 == 0:
            times.append(s.t)
            local.append(energies(s, 4.0)[1])
    assert max(local[-10:]) < 1e-20 * max(local)
    assert fit_local_energy_decay(_synthetic(times, local), 4.0, (10.0, 30.0)).degenerate


# -- pointwise decay ----------------------------------------------------------------


def test_zero_field_is_bounded():
    run = run_scenario(linear_decay_scenario(t_max=10.0, eps=0.0))
    for which in ("std0", "std1", "dplus"):
        dec = check_pointwise_decay(run, which)
        assert dec.bounded and np.all(dec.running_sup == 0)


def test_synthetic_growth_verdict():
    t = np.linspace(0, 100, 101)
    grow = _synthetic(t, pointwise={"std1_0": 1.0 + t})
    flat = _synthetic(t, pointwise={"std1_0": 1.0 + np.sin(t) ** 2})
    assert not check_pointwise_decay(grow, "std1").bounded
    assert check_pointwise_decay(flat, "std1").bounded
    with pytest.raises(ValueError):
        check_pointwise_decay(flat, "std2")
    with pytest.raises(ValueError):
        check_pointwise_decay(flat, "std0")


def test_std1_converges_to_images_oracle():
    # centred jets on the run grid: the sup converges to the oracle value at O(dr^2)
    from nullwave.exterior.radial import images_solution

    r = np.linspace(1.0, 30.0, 29001)
    errs = []
    for dr in (0.05, 0.025):
        scn = linear_decay_scenario(t_max=12.0, dr=dr)
        run = run_scenario(scn)
        phi = scn.data.phi[0]
        t = float(run.times[-1])
        h = 1e-4
        u = images_solution(phi, None, 1.0, t, r)
        ut = (images_solution(phi, None, 1.0, t + h, r) - images_solution(phi, None, 1.0, t - h, r)) / (2 * h)
        ur = np.gradient(u, r[1] - r[0], edge_order=2)
        want = float(np.max(std1_density(t, r, 1.0, np.abs(ut) + np.abs(ur))))
        errs.append(abs(run.pointwise["std1_0"][-1] - want) / want)
    assert errs[1] < 0.03
    assert errs[0] / errs[1] > 3.5


def test_densities():
    assert std0_density(0.0, 0.0, 1.0, 1.0) == pytest.approx(1.0 / math.log(2.0))
    assert std1_density(0.0, 0.0, 1.0, 2.0) == 2.0
    assert dplus_density(0.0, 0.0, 1.0) == pytest.approx(1.0 / math.log(2.0))


def test_dplus_fit_needs_ray():
    run = run_scenario(linear_decay_scenario(t_max=5.0))
    with pytest.raises(DecayFitError):
        fit_dplus_exponent(run, 2.5)


# -- lifespan sweeps ---------------------------------------------------------------


def test_sweep_rejects_non_monotone_and_negative():
    scn = lifespan_scenario(DT_SQUARED, 1.0, 5.0)
    with pytest.raises(ValueError):
        sweep_lifespan(scn, [0.1, 0.3, 0.2], workers=1)
    with pytest.raises(ValueError):
        sweep_lifespan(scn, [0.1, -0.1], workers=1)


def test_sweep_zero_amplitude_survives_and_fit_needs_three_blowups():
    scn = lifespan_scenario(DT_SQUARED, 1.0, 20.0)
    sw = sweep_lifespan(scn, [0.4, 0.0], workers=1)
    assert sw.lifespans[0] is not None and sw.lifespans[1] is None
    assert sw.peaks[1] == 0.0
    assert sw.correlation is None
    with pytest.raises(DecayFitError):
        sw.fit()


def test_q0_survives_small_amplitude():
    scn = lifespan_scenario(Q0_SELF, 1.0, 30.0)
    sw = sweep_lifespan(scn, [0.1, 0.05], workers=1)
    assert sw.lifespans == [None, None]
    assert max(sw.peaks) < 10 * 0.1


# -- Klainerman-Sobolev ---------------------------------------------------------------


class _Zero:
    center = (0.0, 0.0, 3.0)
    s_max = 0.5

    def __call__(self, x):
        return np.zeros(np.shape(x)[:-1])


def test_ks_skips_zero_function():
    rep = check_klainerman_sobolev([("zero", _Zero()), ("bump", RadialBump(radius=2.5, half_width=0.5))], h=0.1)
    assert [r.name for r in rep.rows] == ["bump"]


def test_ks_homogeneous_of_degree_one():
    f = RadialBump(radius=3.0, half_width=0.6)
    l1, r1 = ks_sides(f, 0.1)
    l2, r2 = ks_sides(f, 0.1, scale=10.0)
    assert l2 == pytest.approx(10 * l1, rel=1e-14)
    assert r2 == pytest.approx(10 * r1, rel=1e-14)


def test_ks_family_size():
    fam = ks_family()
    assert len(fam) == 10
    assert all(p.inner_radius > 1.0 for _, p in fam)


# -- identities -----------------------------------------------------------------


def test_commutators_at_roundoff():
    res = commutator_residuals()
    assert set(res) == set(range(7))
    assert max(res.values()) < 1e-9


def test_q0_identity_second_order():
    study = q0_identity_study()
    assert study.order >= constants.IDENTITY_MIN_ORDER
