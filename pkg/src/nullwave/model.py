"""Domain types shared by every module: systems, data, grids, fields, results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .profiles import ShellProfile

# derivative slot for an undifferentiated factor in cubic monomials
U_SLOT = -1


@dataclass(frozen=True)
class Q0Term:
    """coef * Q0(u_j, u_k; c_i) in equation ``component``."""

    component: int
    j: int
    k: int
    coef: float


@dataclass(frozen=True)
class QabTerm:
    """coef * Q_ab(u_j, u_k) in equation ``component``; 0 <= a < b <= 3."""

    component: int
    j: int
    k: int
    a: int
    b: int
    coef: float


@dataclass(frozen=True)
class QuadraticTerm:
    """coef * (d_a u_j)(d_b u_k) in equation ``component``, no speed restriction."""

    component: int
    j: int
    a: int
    k: int
    b: int
    coef: float


@dataclass(frozen=True)
class CubicTerm:
    """coef * product of three factors; a factor is (component, slot), slot -1 means u."""

    component: int
    factors: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]
    coef: float


@dataclass(frozen=True)
class NonlinearitySpec:
    q0: tuple[Q0Term, ...] = ()
    qab: tuple[QabTerm, ...] = ()
    quadratic: tuple[QuadraticTerm, ...] = ()
    cubic: tuple[CubicTerm, ...] = ()

    @property
    def is_zero(self) -> bool:
        return not (self.q0 or self.qab or self.quadratic or self.cubic)

    def scaled(self, factor: float) -> NonlinearitySpec:
        return NonlinearitySpec(
            q0=tuple(Q0Term(t.component, t.j, t.k, t.coef * factor) for t in self.q0),
            qab=tuple(QabTerm(t.component, t.j, t.k, t.a, t.b, t.coef * factor) for t in self.qab),
            quadratic=tuple(
                QuadraticTerm(t.component, t.j, t.a, t.k, t.b, t.coef * factor) for t in self.quadratic
            ),
            cubic=tuple(CubicTerm(t.component, t.factors, t.coef * factor) for t in self.cubic),
        )


@dataclass(frozen=True)
class WaveSystem:
    """N coupled equations (d_t^2 - c_i^2 Laplacian) u_i = F_i(u, du)."""

    speeds: tuple[float, ...]
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec)

    def __post_init__(self):
        object.__setattr__(self, "speeds", tuple(float(c) for c in self.speeds))
        n = len(self.speeds)
        if n < 1:
            raise ValueError("a wave system needs at least one component")
        if not all(math.isfinite(c) and c > 0 for c in self.speeds):
            raise ValueError(f"speeds must be finite and positive, got {self.speeds}")
        nl = self.nonlinearity

        def check_index(*idx):
            for v in idx:
                if not (0 <= v < n):
                    raise ValueError(f"component index {v} out of range for N={n}")

        def check_coef(c):
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient {c}")

        for t in nl.q0:
            check_index(t.component, t.j, t.k)
            check_coef(t.coef)
            if not (self.speeds[t.j] == self.speeds[t.k] == self.speeds[t.component]):
                raise ValueError(f"Q0 term {t} couples components of different speed")
        for t in nl.qab:
            check_index(t.component, t.j, t.k)
            check_coef(t.coef)
            if not (0 <= t.a < t.b <= 3):
                raise ValueError(f"Q_ab term needs 0 <= a < b <= 3, got a={t.a}, b={t.b}")
            if not (self.speeds[t.j] == self.speeds[t.k] == self.speeds[t.component]):
                raise ValueError(f"Q_ab term {t} couples components of different speed")
        for t in nl.quadratic:
            check_index(t.component, t.j, t.k)
            check_coef(t.coef)
            if not (0 <= t.a <= 3 and 0 <= t.b <= 3):
                raise ValueError(f"derivative slots must lie in 0..3, got {t.a}, {t.b}")
        for t in nl.cubic:
            check_index(t.component)
            check_coef(t.coef)
            if len(t.factors) != 3:
                raise ValueError("cubic monomials need exactly three factors")
            for comp, slot in t.factors:
                check_index(comp)
                if not (slot == U_SLOT or 0 <= slot <= 3):
                    raise ValueError(f"factor slot must be -1 (u) or 0..3, got {slot}")

    @property
    def n_components(self) -> int:
        return len(self.speeds)

    @property
    def c_max(self) -> float:
        return max(self.speeds)

    def same_speed(self, i: int) -> list[int]:
        """Indices j with c_j == c_i (the support of the Lambda_i vectors)."""
        return [j for j, c in enumerate(self.speeds) if c == self.speeds[i]]


@dataclass(frozen=True)
class InitialData:
    """u(0) = eps * phi, d_t u(0) = eps * psi, one (phi, psi) pair per component."""

    amplitude: float
    phi: tuple[ShellProfile | None, ...]
    psi: tuple[ShellProfile | None, ...]
    support_inner_radius: float

    def __post_init__(self):
        if len(self.phi) != len(self.psi):
            raise ValueError("phi and psi need one entry per component")
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise ValueError("amplitude must be finite and non-negative")

    @property
    def profiles(self) -> list[ShellProfile]:
        return [p for p in (*self.phi, *self.psi) if p is not None]

    @property
    def outer_radius(self) -> float:
        return max((p.outer_radius for p in self.profiles), default=0.0)

    @property
    def inner_radius(self) -> float:
        return min((p.inner_radius for p in self.profiles), default=math.inf)

    def with_amplitude(self, eps: float) -> InitialData:
        return InitialData(eps, self.phi, self.psi, self.support_inner_radius)

    def u0(self, i: int, x) -> np.ndarray:
        p = self.phi[i]
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1]) if p is None else self.amplitude * p(x)

    def u1(self, i: int, x) -> np.ndarray:
        p = self.psi[i]
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1]) if p is None else self.amplitude * p(x)


@dataclass(frozen=True)
class Grid:
    """Discretization.

    Radial mode: nodes r_m = 1 + m dr up to r_max, dt = dr / c_max exactly.
    Cartesian mode: cube [-half_width, half_width]^3 with spacing dx and
    dt = cfl * dx / c_max unless ``dt`` is given.
    """

    mode: str = "radial"
    t_max: float = 10.0
    dr: float = 0.05
    r_max: float = 20.0
    dx: float = 0.1
    half_width: float = 6.0
    obstacle_radius: float = 1.0
    dt: float | None = None
    cfl: float = 0.5
    sponge_width: float = 0.0
    angular_mode: int = 0

    def time_step(self, c_max: float) -> float:
        if self.dt is not None:
            return self.dt
        if self.mode == "radial":
            return self.dr / c_max
        return self.cfl * self.dx / c_max

    @property
    def n_radial(self) -> int:
        return int(round((self.r_max - 1.0) / self.dr)) + 1

    def radial_nodes(self) -> np.ndarray:
        return 1.0 + self.dr * np.arange(self.n_radial)

    @property
    def n_cartesian(self) -> int:
        return 2 * int(round(self.half_width / self.dx)) + 1

    def cartesian_axis(self) -> np.ndarray:
        m = int(round(self.half_width / self.dx))
        return self.dx * np.arange(-m, m + 1)


@dataclass
class Field:
    """A space-time slab: consecutive time levels of u for every component.

    ``values`` has shape (levels, N, *spatial). In radial mode the spatial axis
    holds u (not r*u) at ``coords`` = radial nodes; in Cartesian mode
    ``coords`` is the 1D lattice axis shared by x1, x2, x3.
    """

    mode: str
    times: np.ndarray
    values: np.ndarray
    coords: np.ndarray
    speeds: tuple[float, ...]
    blowup: bool = False

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def center(self) -> int:
        return len(self.times) // 2


@dataclass
class RunResult:
    """Sampled time series of one run.

    ``times`` are the diagnostic instants; every array-valued entry is indexed
    like ``times``. ``sup_u`` is max |u| at each instant and ``peak_u`` the
    maximum over every step taken. ``pointwise`` holds the per-instant sups of
    the weighted decay quantities (keys ``std0_i``, ``std1_i``, ``dplus_i``)
    and ``rays`` the values recorded along outgoing rays, keyed by r0.
    """

    times: np.ndarray
    total_energy: np.ndarray
    local_energy: dict[float, np.ndarray]
    weighted_sups: dict[str, np.ndarray]
    monitor_e: np.ndarray | None
    sup_u: np.ndarray
    lifespan: float | None
    blowup_flag: bool
    rays: dict[float, dict[str, np.ndarray]] = field(default_factory=dict)
    exit_time: dict[float, float] = field(default_factory=dict)
    amplitude: float = 1.0
    speeds: tuple[float, ...] = (1.0,)
    pointwise: dict[str, np.ndarray] = field(default_factory=dict)
    peak_u: float = 0.0
    probe_radii: np.ndarray | None = None
    probe_values: np.ndarray | None = None
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)
    coords: np.ndarray | None = None
    angular_mode: int = 0

    @property
    def survived(self) -> bool:
        return not self.blowup_flag


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self) -> bool:
        return self.ok


def _speed_ratios(speeds: tuple[float, ...]) -> list[float]:
    c_max = max(speeds)
    return [c_max / c for c in speeds]


def validate_scenario(sys: WaveSystem, data: InitialData, grid: Grid) -> ValidationReport:
    """Collect every violated scenario invariant; an empty error list means runnable."""
    from .nonlinearity import radial_compatibility

    rep = ValidationReport()
    n = sys.n_components
    if len(data.phi) != n:
        rep.errors.append(f"data has {len(data.phi)} components, system has {n}")

    # data support must stay away from the obstacle
    obstacle = grid.obstacle_radius if grid.mode == "cartesian3d" else 1.0
    if not data.support_inner_radius > obstacle:
        rep.errors.append(
            f"support_inner_radius {data.support_inner_radius} does not exceed obstacle radius {obstacle}"
        )
    for p in data.profiles:
        if p.inner_radius < data.support_inner_radius:
            rep.errors.append(
                f"profile {type(p).__name__} reaches |x| = {p.inner_radius:g} < support_inner_radius"
            )
        if not math.isfinite(p.s_max):
            rep.errors.append("profile support is not compact")

    c_max = sys.c_max
    reach = data.outer_radius + c_max * grid.t_max + constants.PADDING_MARGIN
    if grid.mode == "radial":
        dt = grid.time_step(c_max)
        if abs(dt - grid.dr / c_max) > 1e-12 * dt:
            rep.errors.append(f"radial mode needs dt = dr / c_max = {grid.dr / c_max:g}, got {dt:g}")
        if grid.obstacle_radius != 1.0:
            rep.errors.append("radial mode fixes the obstacle to the unit ball; obstacle_radius must be 1")
        for i, k in enumerate(_speed_ratios(sys.speeds)):
            if abs(k - round(k)) > 1e-9:
                rep.errors.append(f"c_max / c_{i} = {k:g} is not an integer; radial sub-stepping needs it")
        if grid.sponge_width <= 0 and grid.r_max < reach:
            rep.errors.append(f"r_max = {grid.r_max:g} < {reach:g}: signals reach the outer boundary")
        if data.outer_radius >= grid.r_max:
            rep.errors.append("data support exceeds r_max")
        for p in data.profiles:
            if not p.centered:
                rep.errors.append("radial mode needs profiles centered at the origin")
        errs, warns = radial_compatibility(sys)
        rep.errors.extend(errs)
        rep.warnings.extend(warns)
        if grid.angular_mode < 0:
            rep.errors.append("angular_mode must be non-negative")
        if grid.angular_mode > 0 and not sys.nonlinearity.is_zero:
            rep.errors.append("angular_mode > 0 is only supported for linear runs")
    elif grid.mode == "cartesian3d":
        dt = grid.time_step(c_max)
        courant = c_max * dt / grid.dx
        if courant > 1.0 / math.sqrt(3.0) + 1e-12:
            rep.errors.append(f"CFL violated: c_max dt / dx = {courant:g} > 1/sqrt(3)")
        if grid.sponge_width <= 0 and grid.half_width < reach:
            rep.errors.append(f"half_width = {grid.half_width:g} < {reach:g}: signals reach the box faces")
        if grid.angular_mode:
            rep.errors.append("angular_mode applies to radial mode only")
    else:
        rep.errors.append(f"unknown grid mode {grid.mode!r}")
    if grid.t_max <= 0:
        rep.errors.append("t_max must be positive")
    return rep
