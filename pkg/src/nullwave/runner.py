"""Drive a solver through a scenario and collect the diagnostic time series."""

from __future__ import annotations

import csv
import math
from collections import deque
from pathlib import Path

import numpy as np

from .config import Scenario
from .exterior import energies
from .exterior.cartesian import CartesianSolver, gradient3
from .exterior.radial import RadialSolver, local_energy
from .model import RunResult, validate_scenario
from .weights import RunningSup, bracket, monitor_e_radial, parse_weight_name


class ScenarioError(ValueError):
    """The scenario fails validation."""


def std0_density(t, r, c, u):
    """(1 + t + r) |u| / log(1 + (1 + c t + r) / (1 + |c t - r|))."""
    return (1.0 + t + r) * np.abs(u) / np.log(1.0 + (1.0 + c * t + r) / (1.0 + np.abs(c * t - r)))


def std1_density(t, r, c, du_abs):
    """<r> <c t - r> |du|."""
    return bracket(r) * bracket(c * t - r) * du_abs


def dplus_density(t, r, dplus_abs):
    """<r> <t + r> |D+ u| / log(2 + t + r)."""
    return bracket(r) * bracket(t + r) * dplus_abs / np.log(2.0 + t + r)


class _Sampler:
    """Accumulates every per-instant diagnostic of a run."""

    def __init__(self, scn: Scenario, r_max: float, rng: np.random.Generator):
        self.scn = scn
        sys, data, diag = scn.system, scn.data, scn.diagnostics
        self.speeds = sys.speeds
        self.N = sys.n_components
        self.eps = data.amplitude
        self.norm = self.eps if self.eps > 0 else 1.0
        self.times: list[float] = []
        self.total: list[float] = []
        self.local = {float(b): [] for b in diag.local_radii}
        self.sup_u: list[float] = []
        self.monitor: list[float] = []
        self.pointwise = {f"{k}_{i}": [] for i in range(self.N) for k in ("std0", "std1", "dplus")}
        self.sups = {}
        for name in diag.weights:
            spec = parse_weight_name(name, sys.speeds)
            self.sups[spec.name] = (RunningSup(spec), [])
        self.rays = {float(r0): {"t": [], "r": [], "dplus": [], "du": []} for r0 in diag.rays}
        self.probe_radii = None
        self.probe_values: list[np.ndarray] = []
        if diag.probes:
            hi = min(r_max, data.outer_radius + sys.c_max * scn.grid.t_max)
            self.probe_radii = np.sort(rng.uniform(1.0, max(hi, 1.0 + 1e-9), size=diag.probes))

    def sample(self, t, r, u, ut, ur, du_abs, total, local, ell=0, second=None, on_ray=None):
        """Record one instant.

        ``r`` has shape (M,), the field arrays (N, M). ``du_abs`` is
        sum_a |d_a u_i|. ``second`` optionally carries (utt, utr, urr) for the
        k = 1 monitor. ``on_ray`` maps (component, radius) to interpolated
        (D+ u, |du|) and is used for the recorded rays.
        """
        diag = self.scn.diagnostics
        self.times.append(float(t))
        self.total.append(float(total))
        for b in self.local:
            self.local[b].append(float(local(b)))
        self.sup_u.append(float(np.max(np.abs(u), initial=0.0)))
        for name, (rs, series) in self.sups.items():
            vals = np.sum(np.abs(u), axis=0) if rs.spec.kind == "phi" else np.sum(du_abs, axis=0)
            series.append(rs.update(t, r, vals))
        mon = 0.0
        for i, c in enumerate(self.speeds):
            dplus = np.abs(ut[i] + c * ur[i])
            self.pointwise[f"std0_{i}"].append(float(np.max(std0_density(t, r, c, u[i]), initial=0.0) / self.norm))
            self.pointwise[f"std1_{i}"].append(float(np.max(std1_density(t, r, c, du_abs[i]), initial=0.0) / self.norm))
            self.pointwise[f"dplus_{i}"].append(float(np.max(dplus_density(t, r, dplus), initial=0.0) / self.norm))
            if diag.monitor_k == 0:
                mon += monitor_e_radial(t, r, c, u[i], ut[i], ur[i], None, None, None, k=0)
            elif diag.monitor_k == 1 and second is not None:
                utt, utr, urr = (s[i] for s in second)
                mon += monitor_e_radial(t, r, c, u[i], ut[i], ur[i], utt, utr, urr, k=diag.monitor_k)
        self.monitor.append(mon)
        for r0, rec in self.rays.items():
            rs, dp, du = [], [], []
            for i, c in enumerate(self.speeds):
                rr = r0 + c * t
                rs.append(rr)
                a, b = on_ray(i, rr) if on_ray is not None else (math.nan, math.nan)
                dp.append(a)
                du.append(b)
            rec["t"].append(float(t))
            rec["r"].append(rs)
            rec["dplus"].append(dp)
            rec["du"].append(du)
        if self.probe_radii is not None:
            self.probe_values.append(np.array([np.interp(self.probe_radii, r, u[i]) for i in range(self.N)]))

    def result(self, lifespan, blowup, peak_u, exit_time, snapshots, coords, ell) -> RunResult:
        return RunResult(
            times=np.array(self.times),
            total_energy=np.array(self.total),
            local_energy={b: np.array(v) for b, v in self.local.items()},
            weighted_sups={name: np.array(v) for name, (_, v) in self.sups.items()},
            monitor_e=np.array(self.monitor) if self.scn.diagnostics.monitor_k >= 0 else None,
            sup_u=np.array(self.sup_u),
            lifespan=lifespan,
            blowup_flag=blowup,
            rays={r0: {k: np.array(v) for k, v in rec.items()} for r0, rec in self.rays.items()},
            exit_time=exit_time,
            amplitude=self.eps,
            speeds=self.speeds,
            pointwise={k: np.array(v) for k, v in self.pointwise.items()},
            peak_u=peak_u,
            probe_radii=self.probe_radii,
            probe_values=np.array(self.probe_values) if self.probe_radii is not None else None,
            snapshots=snapshots,
            coords=coords,
            angular_mode=ell,
        )


def exit_times(scn: Scenario) -> dict[float, float]:
    """Time after which the direct (incoming, reflected) pulse has left B_b, slowest speed."""
    c_min = min(scn.system.speeds)
    outer = scn.data.outer_radius
    return {float(b): (outer - 1.0 + b - 1.0) / c_min for b in scn.diagnostics.local_radii}


def run_scenario(scn: Scenario, seed: int = 0) -> RunResult:
    """Validate and run a scenario; blow-up ends the run and is recorded, not raised."""
    rep = validate_scenario(scn.system, scn.data, scn.grid)
    if not rep.ok:
        raise ScenarioError("; ".join(rep.errors))
    rng = np.random.default_rng(seed)
    if scn.grid.mode == "radial":
        return _run_radial(scn, rng)
    return _run_cartesian(scn, rng)


def _run_radial(scn: Scenario, rng) -> RunResult:
    sys, data, grid, diag = scn.system, scn.data, scn.grid, scn.diagnostics
    eps = data.amplitude
    phi = [None if p is None else (lambda s, p=p: eps * p.radial(s)) for p in data.phi]
    psi = [None if p is None else (lambda s, p=p: eps * p.radial(s)) for p in data.psi]
    solver = RadialSolver(sys, phi, psi, grid.dr, grid.r_max, angular_mode=grid.angular_mode)
    r, dr, dt, ell = solver.r, solver.dr, solver.dt, solver.ell
    sampler = _Sampler(scn, grid.r_max, rng)
    speeds = sys.speeds

    def grad(a):
        return np.gradient(a, dr, axis=-1, edge_order=2)

    def record(t, um, u, up, exact=None):
        ur = grad(u)
        if exact is None:
            ut = (up - um) / (2 * dt)
            utt = (up - 2 * u + um) / dt**2
        else:
            # t = 0: u_t from the data, u_tt from the equation itself
            ut = exact
            urr = grad(ur)
            c2 = np.array(speeds)[:, None] ** 2
            utt = c2 * (urr + 2 * ur / r - ell * (ell + 1) * u / r**2) + solver._forcing(0.0, u, ut, ur)
        du_abs = np.abs(ut) + np.abs(ur)
        second = (utt, grad(ut), grad(ur))

        def local(b):
            return sum(local_energy(u[i], ut[i], ur[i], r, speeds[i], b, ell) for i in range(sys.n_components))

        def on_ray(i, rr):
            if rr > r[-1]:
                return math.nan, math.nan
            return (
                float(np.interp(rr, r, ut[i] + speeds[i] * ur[i])),
                float(np.interp(rr, r, du_abs[i])),
            )

        total = energies(solver, math.inf)[0] if solver.n > 0 else _data_energy(u, ut, ur, r, speeds, ell)
        sampler.sample(t, r, u, ut, ur, du_abs, total, local, ell, second, on_ray)

    u_prev = solver.current_u()
    record(0.0, None, u_prev, None, exact=np.array(solver._ut0))
    ring = deque([u_prev], maxlen=3)
    peak = float(np.max(np.abs(u_prev), initial=0.0))
    snapshots = []
    n_steps = int(round(grid.t_max / dt))
    for n in range(1, n_steps + 1):
        ok = solver.step()
        if not ok:
            break
        u = solver.current_u()
        peak = max(peak, float(np.max(np.abs(u))))
        ring.append(u)
        if diag.snapshot_every and n % diag.snapshot_every == 0:
            snapshots.append((n * dt, u.copy()))
        m = n - 1
        if m > 0 and m % diag.sample_every == 0:
            record(m * dt, *ring)
    return sampler.result(solver.lifespan, solver.blowup, peak, exit_times(scn), snapshots, r, ell)


def _data_energy(u, ut, ur, r, speeds, ell) -> float:
    return sum(local_energy(u[i], ut[i], ur[i], r, c, math.inf, ell) for i, c in enumerate(speeds))


def _run_cartesian(scn: Scenario, rng) -> RunResult:
    sys, data, grid, diag = scn.system, scn.data, scn.grid, scn.diagnostics
    solver = CartesianSolver(
        sys, data, grid.dx, grid.half_width, grid.obstacle_radius, grid.dt, grid.cfl, grid.sponge_width
    )
    active = solver.active
    r = solver.radius[active]
    X = solver._X[active]
    order = np.argsort(r, kind="stable")
    r, X = r[order], X[order]
    sampler = _Sampler(scn, grid.half_width, rng)
    speeds = sys.speeds
    dt = solver.dt

    def flat(a):
        return a[..., active][..., order]

    def record(t, u, ut, g):
        u, ut = flat(u), flat(ut)
        g = np.stack([flat(g[:, a]) for a in range(3)], axis=1)
        ur = np.einsum("iam,ma->im", g, X / r[:, None])
        du_abs = np.abs(ut) + np.sum(np.abs(g), axis=1)

        def on_ray(i, rr):
            sel = np.abs(r - rr) <= 0.5 * solver.h
            if not np.any(sel):
                return math.nan, math.nan
            return float(np.max(np.abs(ut[i] + speeds[i] * ur[i])[sel])), float(np.max(du_abs[i][sel]))

        total, _ = solver.energies(math.inf)
        sampler.sample(t, r, u, ut, ur, du_abs, total, lambda b: solver.energies(b)[1], 0, None, on_ray)

    peak = float(np.max(np.abs(solver.u), initial=0.0))
    # t = 0 from the data, as in radial runs
    record(0.0, solver.u, solver._u1, gradient3(solver.u, solver.h))
    snapshots = []
    n_steps = int(round(grid.t_max / dt))
    for n in range(1, n_steps + 1):
        if not solver.step():
            break
        peak = max(peak, float(np.max(np.abs(solver.u))))
        if diag.snapshot_every and n % diag.snapshot_every == 0:
            snapshots.append((n * dt, solver.u.copy()))
        m = n - 1
        if m > 0 and m % diag.sample_every == 0:
            record(m * dt, *solver.jets())
    return sampler.result(solver.lifespan, solver.blowup, peak, exit_times(scn), snapshots, solver.axis, 0)


# -- output ----------------------------------------------------------------------------


def _fmt(v) -> str:
    return repr(float(v))


def timeseries_columns(res: RunResult) -> list[tuple[str, np.ndarray]]:
    cols = [("t", res.times), ("total_energy", res.total_energy)]
    cols += [(f"E_b({b:g})", v) for b, v in sorted(res.local_energy.items())]
    cols.append(("sup_u", res.sup_u))
    cols += [(name, v) for name, v in res.weighted_sups.items()]
    if res.monitor_e is not None:
        cols.append(("e(k)", res.monitor_e))
    cols += [(k, v) for k, v in res.pointwise.items()]
    return cols


def write_timeseries_csv(res: RunResult, path: Path) -> None:
    cols = timeseries_columns(res)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([name for name, _ in cols])
        for row in zip(*(v for _, v in cols)):
            w.writerow([_fmt(v) for v in row])


def write_rays_csv(res: RunResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r0", "component", "t", "r", "dplus", "du"])
        for r0, rec in sorted(res.rays.items()):
            for n, t in enumerate(rec["t"]):
                for i in range(rec["r"].shape[1]):
                    w.writerow([_fmt(r0), i, _fmt(t), _fmt(rec["r"][n, i]), _fmt(rec["dplus"][n, i]), _fmt(rec["du"][n, i])])


def write_probes_csv(res: RunResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "component", "r", "u"])
        for n, t in enumerate(res.times):
            for i in range(res.probe_values.shape[1]):
                for k, rr in enumerate(res.probe_radii):
                    w.writerow([_fmt(t), i, _fmt(rr), _fmt(res.probe_values[n, i, k])])


def write_snapshots_csv(res: RunResult, path: Path) -> None:
    """Radial snapshots as (t, component, r, u); Cartesian ones as the x3 = 0 slice (t, component, x1, x2, u)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        radial = all(u.ndim == 2 for _, u in res.snapshots)
        w.writerow(["t", "component", "r", "u"] if radial else ["t", "component", "x1", "x2", "u"])
        for t, u in res.snapshots:
            for i in range(u.shape[0]):
                if u.ndim == 2:
                    for rr, v in zip(res.coords, u[i]):
                        w.writerow([_fmt(t), i, _fmt(rr), _fmt(v)])
                else:
                    mid = u.shape[-1] // 2
                    for a, x1 in enumerate(res.coords):
                        for b, x2 in enumerate(res.coords):
                            w.writerow([_fmt(t), i, _fmt(x1), _fmt(x2), _fmt(u[i, a, b, mid])])


def write_outputs(res: RunResult, out: Path) -> list[str]:
    """Write every CSV for a run into ``out``; returns the file names, in a fixed order."""
    out.mkdir(parents=True, exist_ok=True)
    files = ["timeseries.csv"]
    write_timeseries_csv(res, out / "timeseries.csv")
    if res.rays:
        write_rays_csv(res, out / "rays.csv")
        files.append("rays.csv")
    if res.probe_radii is not None:
        write_probes_csv(res, out / "probes.csv")
        files.append("probes.csv")
    if res.snapshots:
        write_snapshots_csv(res, out / "snapshots.csv")
        files.append("snapshots.csv")
    return files

