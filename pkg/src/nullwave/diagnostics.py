"""Decay fits, boundedness verdicts, lifespan sweeps and inequality spot-checks."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import constants
from .config import Scenario
from .model import RunResult
from .weights import bracket, multi_indices


class DecayFitError(ValueError):
    """The requested fit cannot be formed (empty window, zero data, too few points)."""


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of a decay law on a time window.

    ``rate`` is sigma for the exponential model (E ~ exp(-sigma t)) and the
    exponent for the power model. A degenerate fit carries NaN rate and a
    ``reason``.
    """

    window: tuple[float, float]
    model: str
    rate: float
    goodness: float
    n_points: int
    intercept: float = math.nan
    degenerate: bool = False
    reason: str = ""


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """slope, intercept, R^2 by ordinary least squares."""
    res = stats.linregress(x, y)
    return float(res.slope), float(res.intercept), float(res.rvalue**2)


def fit_local_energy_decay(run: RunResult, b: float = constants.LED_RADIUS, window=constants.LED_WINDOW) -> DecayFit:
    """Fit log E_b(t) = a - sigma t after the direct pulse has left B_b.

    The window is ``window`` intersected with [exit time, end of run]. Samples
    below LED_UNDERFLOW times the peak of E_b are dropped; if fewer than three
    remain the fit is reported as degenerate (local energy that vanishes in
    finite time, as for radial free-space or l = 0 runs).
    """
    if b not in run.local_energy:
        raise DecayFitError(f"the run did not record E_b for b = {b}")
    E = np.asarray(run.local_energy[b], dtype=float)
    t = np.asarray(run.times, dtype=float)
    peak = float(np.max(E, initial=0.0))
    if peak <= 0:
        raise DecayFitError("local energy is identically zero; nothing to fit")
    t0 = max(window[0], run.exit_time.get(b, -math.inf))
    t1 = min(window[1], float(t[-1]))
    sel = (t >= t0) & (t <= t1)
    if t1 <= t0 or not np.any(sel):
        raise DecayFitError(f"fit window [{t0:g}, {t1:g}] holds no samples")
    keep = sel & (E > constants.LED_UNDERFLOW * peak)
    if keep.sum() < 3:
        return DecayFit(
            (t0, t1), "exponential", math.nan, 0.0, int(keep.sum()), degenerate=True,
            reason="energy underflow: E_b vanishes on the window",
        )
    slope, icpt, r2 = _linear_fit(t[keep], np.log(E[keep]))
    return DecayFit((t0, t1), "exponential", -slope, r2, int(keep.sum()), icpt)


@dataclass(frozen=True)
class PointwiseDecay:
    which: str
    component: int
    times: np.ndarray
    running_sup: np.ndarray
    growth: float
    bounded: bool


def check_pointwise_decay(run: RunResult, which: str, component: int = 0) -> PointwiseDecay:
    """Running sup of the std0 / std1 / dplus quantity and the boundedness verdict.

    Bounded means the running sup at the end exceeds the running sup at half
    the run time by less than BOUNDED_GROWTH.
    """
    if which not in ("std0", "std1", "dplus"):
        raise ValueError(f"unknown decay quantity {which!r}")
    key = f"{which}_{component}"
    if key not in run.pointwise:
        raise ValueError(f"run has no series {key}")
    vals = np.asarray(run.pointwise[key], dtype=float)
    t = np.asarray(run.times, dtype=float)
    if len(vals) == 0:
        return PointwiseDecay(which, component, t, vals, 0.0, True)
    running = np.maximum.accumulate(np.where(np.isfinite(vals), vals, np.inf))
    mid = int(np.searchsorted(t, 0.5 * t[-1], side="right")) - 1
    start, end = running[max(mid, 0)], running[-1]
    if end == 0:
        growth = 0.0
    elif start == 0 or not np.isfinite(end):
        growth = math.inf
    else:
        growth = end / start - 1.0
    return PointwiseDecay(which, component, t, running, float(growth), bool(growth < constants.BOUNDED_GROWTH))


def fit_dplus_exponent(run: RunResult, r0: float, component: int = 0, t_start: float = constants.DPLUS_FIT_START) -> DecayFit:
    """Power-law exponent of |D+ u| / |du| against <t + r> along the ray r = r0 + c t."""
    if r0 not in run.rays:
        raise DecayFitError(f"the run did not record the ray r0 = {r0}")
    rec = run.rays[r0]
    t = rec["t"]
    r = rec["r"][:, component]
    q = np.abs(rec["dplus"][:, component]) / rec["du"][:, component]
    sel = (t >= t_start) & np.isfinite(q) & (q > 0)
    if sel.sum() < 3:
        raise DecayFitError("fewer than three usable ray samples")
    slope, icpt, r2 = _linear_fit(np.log(bracket(t[sel] + r[sel])), np.log(q[sel]))
    return DecayFit((float(t[sel][0]), float(t[sel][-1])), "power", slope, r2, int(sel.sum()), icpt)


# -- lifespan sweeps -----------------------------------------------------------------


@dataclass
class LifespanSweep:
    """Lifespans T(eps) for a decreasing amplitude list.

    ``lifespans[k]`` is None when the run survived to ``t_max``. The
    regression of log T against 1/eps uses blow-up entries only and is left
    unset with fewer than three of them.
    """

    epsilons: tuple[float, ...]
    lifespans: list[float | None]
    peaks: list[float]
    t_max: float
    errors: list[str] = field(default_factory=list)
    slope: float | None = None
    intercept: float | None = None
    correlation: float | None = None

    @property
    def blowups(self) -> list[tuple[float, float]]:
        return [(e, T) for e, T in zip(self.epsilons, self.lifespans) if T is not None and e > 0]

    def fit(self) -> tuple[float, float, float]:
        """(slope, intercept, Pearson r) of log T vs 1/eps; needs three blow-ups."""
        pts = self.blowups
        if len(pts) < 3:
            raise DecayFitError(f"need at least 3 blow-up points, have {len(pts)}")
        x = np.array([1.0 / e for e, _ in pts])
        y = np.log([T for _, T in pts])
        res = stats.linregress(x, y)
        return float(res.slope), float(res.intercept), float(res.rvalue)

    @property
    def strictly_decreasing(self) -> bool:
        """T strictly decreases as eps grows, over the blow-up entries."""
        Ts = [T for _, T in sorted(self.blowups)]
        return all(a > b for a, b in zip(Ts, Ts[1:]))


def _lifespan_job(args) -> tuple[float | None, float, str]:
    from .runner import run_scenario

    scn, seed = args
    try:
        res = run_scenario(scn, seed)
    except Exception as exc:  # recorded per eps, the sweep goes on
        return None, math.nan, f"{type(exc).__name__}: {exc}"
    return (res.lifespan if res.blowup_flag else None), res.peak_u, ""


def default_workers() -> int:
    env = os.environ.get("NULLWAVE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep_lifespan(
    scn: Scenario,
    epsilons,
    t_max: float | None = None,
    workers: int | None = None,
    seed: int = 0,
) -> LifespanSweep:
    """Run ``scn`` at each amplitude (one worker per eps) until blow-up or t_max.

    ``epsilons`` must be strictly monotone; they are processed in decreasing
    order. A zero amplitude survives trivially and is not run.
    """
    eps = [float(e) for e in epsilons]
    diffs = np.diff(eps)
    if len(eps) > 1 and not (np.all(diffs < 0) or np.all(diffs > 0)):
        raise ValueError("epsilon list must be strictly monotone")
    if any(e < 0 for e in eps):
        raise ValueError("amplitudes must be non-negative")
    eps = sorted(eps, reverse=True)
    if t_max is not None:
        scn = scn.with_grid(t_max=t_max, r_max=max(scn.grid.r_max, scn.data.outer_radius + scn.system.c_max * t_max + 3))
    light = replace(scn.diagnostics, local_radii=(), weights=(), monitor_k=-1, rays=(), probes=0, snapshot_every=0)
    scn = replace(scn, diagnostics=light)
    jobs = [(scn.with_amplitude(e), seed) for e in eps if e > 0]
    workers = workers or default_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            outs = list(pool.map(_lifespan_job, jobs))
    else:
        outs = [_lifespan_job(j) for j in jobs]
    it = iter(outs)
    lifespans, peaks, errors = [], [], []
    for e in eps:
        if e == 0:
            lifespans.append(None)
            peaks.append(0.0)
            errors.append("")
            continue
        T, peak, err = next(it)
        lifespans.append(T)
        peaks.append(peak)
        errors.append(err)
    sweep = LifespanSweep(tuple(eps), lifespans, peaks, scn.grid.t_max, errors)
    if len(sweep.blowups) >= 3:
        sweep.slope, sweep.intercept, sweep.correlation = sweep.fit()
    return sweep


# -- Klainerman-Sobolev spot check ---------------------------------------------------


@dataclass(frozen=True)
class KSRow:
    name: str
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def ks_family():
    """Ten test functions in C_0^2 of the exterior, vanishing near |x| = 1."""
    from .profiles import RadialBump, TruncatedGaussian

    fam = [
        ("bump r=2.5 w=0.5", RadialBump(radius=2.5, half_width=0.5)),
        ("bump r=3 w=1", RadialBump(radius=3.0, half_width=1.0)),
        ("bump r=2 w=0.3", RadialBump(radius=2.0, half_width=0.3)),
        ("bump r=4 w=0.8", RadialBump(radius=4.0, half_width=0.8)),
        ("bump r=3 w=0.4 h=-2", RadialBump(radius=3.0, half_width=0.4, height=-2.0)),
    ]
    dirs = [(1.0, 0.0, 0.0), (0.0, 0.6, 0.8), (0.577, 0.577, 0.577), (-0.8, 0.6, 0.0), (0.0, 0.0, -1.0)]
    shapes = [(0.3, 1.0, 3.0), (0.5, 1.5, 3.5), (0.8, 2.0, 4.0), (0.4, 1.2, 2.5), (1.0, 2.0, 4.5)]
    for d, (sigma, cutoff, dist) in zip(dirs, shapes):
        d = np.asarray(d) / np.linalg.norm(d)
        center = tuple(float(v) for v in dist * d)
        fam.append((f"gauss s={sigma} at {dist}", TruncatedGaussian(center=center, sigma=sigma, cutoff=cutoff)))
    return fam


def _z_lattice(f: np.ndarray, which: int, X: list[np.ndarray], h: float) -> np.ndarray:
    if which in (1, 2, 3):
        return np.gradient(f, h, axis=which - 1)
    i, j = {4: (0, 1), 5: (0, 2), 6: (1, 2)}[which]
    return X[i] * np.gradient(f, h, axis=j) - X[j] * np.gradient(f, h, axis=i)


def ks_sides(f, h: float = constants.KS_LATTICE_STEP, scale: float = 1.0) -> tuple[float, float]:
    """(sup <|x|> |g|, sum_{|a| <= 2} ||Z~^a g||_L2) for g = scale * f on a lattice covering supp f."""
    center = np.asarray(f.center, dtype=float)
    lo = center - f.s_max - 3 * h
    hi = center + f.s_max + 3 * h
    axes = [np.arange(lo[k], hi[k] + h / 2, h) for k in range(3)]
    X = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(X, axis=-1)
    r = np.linalg.norm(pts, axis=-1)
    vals = scale * f(pts)
    outside = r > 1.0
    lhs = float(np.max(bracket(r) * np.abs(vals) * outside))
    rhs = 0.0
    cache: dict[tuple, np.ndarray] = {(): vals}
    for alpha in multi_indices((1, 2, 3, 4, 5, 6), 2):
        if alpha not in cache:
            cache[alpha] = _z_lattice(cache[alpha[1:]], alpha[0], X, h)
        g = cache[alpha]
        rhs += math.sqrt(float(np.sum(g[outside] ** 2)) * h**3)
    return lhs, rhs


@dataclass
class KSReport:
    rows: list[KSRow]
    scale_error: float
    bound: float = constants.KS_RATIO_BOUND

    @property
    def max_ratio(self) -> float:
        return max(r.ratio for r in self.rows)

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.bound and self.scale_error <= constants.KS_SCALE_TOL


def check_klainerman_sobolev(functions=None, h: float = constants.KS_LATTICE_STEP, scale: float = 10.0) -> KSReport:
    """Ratios sup<|x|>|f| / sum ||Z~^a f|| over a family, plus their scale invariance.

    Zero functions (0/0) are skipped. ``scale_error`` is the largest relative
    change of a ratio when the function is multiplied by ``scale``.
    """
    functions = ks_family() if functions is None else functions
    rows, worst = [], 0.0
    for name, f in functions:
        lhs, rhs = ks_sides(f, h)
        if rhs == 0:
            continue
        row = KSRow(name, lhs, rhs)
        rows.append(row)
        lhs2, rhs2 = ks_sides(f, h, scale)
        worst = max(worst, abs(lhs2 / rhs2 - row.ratio) / row.ratio)
    return KSReport(rows, worst)


# -- identities ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceStudy:
    steps: tuple[float, ...]
    residuals: tuple[float, ...]

    @property
    def orders(self) -> list[float]:
        return [
            math.log(a / b) / math.log(h1 / h2)
            for (a, b, h1, h2) in zip(self.residuals, self.residuals[1:], self.steps, self.steps[1:])
        ]

    @property
    def order(self) -> float:
        """Observed order between the two finest steps."""
        return self.orders[-1]


def _identity_fields():
    """Smooth non-radial test fields v, w and sample points away from the origin."""

    def v(t, x):
        x = np.asarray(x, dtype=float)
        return np.sin(0.7 * t - x[..., 0] + 0.3 * x[..., 1]) * np.exp(-0.1 * np.sum(x**2, axis=-1))

    def w(t, x):
        x = np.asarray(x, dtype=float)
        return np.cos(t + 0.5 * x[..., 2]) * (1 + x[..., 0] * x[..., 1]) / (1 + 0.2 * np.sum(x**2, axis=-1))

    pts = [(0.5, np.array([1.2, 0.3, -0.4])), (1.0, np.array([-0.7, 1.1, 0.9])), (2.0, np.array([0.2, -1.5, 2.0]))]
    return v, w, pts


def q0_identity_study(c: float = 1.5, steps=(0.04, 0.02, 0.01)) -> ConvergenceStudy:
    """Residual of Q0(v,w;c) = (D+v D-w + D-v D+w)/2 - (c^2/r^2) sum (Omega v)(Omega w) under h-refinement."""
    from .nonlinearity import q0_identity_residual

    v, w, pts = _identity_fields()
    res = [float(np.max(np.abs(q0_identity_residual(v, w, c, pts, h)))) for h in steps]
    return ConvergenceStudy(tuple(steps), tuple(res))


def commutator_residuals(c: float = 1.3, n: int = 9, h: float = 0.25, dt: float = 0.1, seed: int = 0) -> dict[int, float]:
    """max |[Z, box_h] f| for Z_0..Z_6 on a random cubic polynomial lattice f(t, x)."""
    from .exterior.vectorfields import commutator_residual

    rng = np.random.default_rng(seed)
    coords = h * (np.arange(n) - n // 2)
    T = dt * (np.arange(n) - n // 2)
    tt, x1, x2, x3 = np.meshgrid(T, coords, coords, coords, indexing="ij")
    monos = [(a, b, cc, d) for a in range(4) for b in range(4) for cc in range(4) for d in range(4) if a + b + cc + d <= 3]
    coef = rng.normal(size=len(monos))
    f = sum(k * tt**a * x1**b * x2**cc * x3**d for k, (a, b, cc, d) in zip(coef, monos))
    return {z: commutator_residual(f, z, c, coords, h, dt) for z in range(7)}


def kirchhoff_study(n_probes: int = 100, seed: int = 0, quads=None, c: float = 1.0):
    """Relative sup error of k0_solve against the radial oracle on random probes, per quadrature.

    Data: u0 a truncated Gaussian on |y| <= 2, u1 a bump on [2, 3]; probes
    uniform in |x| <= 6, t in [0.1, 6], random directions.
    """
    from .freefield import DEFAULT_QUADRATURE, SphereQuadrature, k0_solve, radial_k0_oracle
    from .profiles import RadialBump, TruncatedGaussian

    if quads is None:
        quads = [SphereQuadrature(24, 48), DEFAULT_QUADRATURE]
    w0 = TruncatedGaussian(sigma=0.5, cutoff=2.0)
    w1 = RadialBump(radius=2.5, half_width=0.5)
    rng = np.random.default_rng(seed)
    rs = rng.uniform(0.0, 6.0, n_probes)
    ts = rng.uniform(0.1, 6.0, n_probes)
    dirs = rng.normal(size=(n_probes, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    ref = np.array([radial_k0_oracle(w0, w1, c, t, r) for r, t in zip(rs, ts)])
    scale = float(np.max(np.abs(ref)))
    out = []
    for q in quads:
        got = np.array([k0_solve(w0, w1, c, t, r * d, q) for r, t, d in zip(rs, ts, dirs)])
        out.append((q, float(np.max(np.abs(got - ref)) / scale)))
    return out
