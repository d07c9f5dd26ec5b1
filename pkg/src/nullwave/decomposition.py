"""Cut-off decomposition of exterior solutions into free-space and localized pieces.

With psi_a the radial ramp from 0 (|x| <= a) to 1 (|x| >= a + 1) and
S_a[v] = [psi_a, -c^2 Laplacian] v = c^2 (v Lap psi_a + 2 grad v . grad psi_a),
the exterior solution K[v0] splits as

    K[v0] = psi_1 w + (1 - psi_2) z - L0[S_2 z] + (1 - psi_3) y - L0[S_3 y]

where w = K0[psi_2 v0], z = L[S_1 w] and y = K[(1 - psi_2) v0]. The same
split holds for L[f] with w = L0[psi_2 f] and y = L[(1 - psi_2) f].

All pieces are computed on radial grids: the exterior solves on
r = 1 + m dr, the free-space solves on r = m dr with dr = 1 / n so both grids
share nodes and the commutator sources pass between them without
interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import comb

from . import constants
from .exterior.radial import (
    RadialSolver,
    images_duhamel,
    images_solution,
    radial_derivative,
    u_from_U,
)
from .model import WaveSystem
from .profiles import ShellProfile

# -- cutoffs --------------------------------------------------------------------


@lru_cache(maxsize=None)
def _smoothstep_poly(order: int) -> np.polynomial.Polynomial:
    """Degree 2n+1 polynomial S with S(0)=0, S(1)=1 and n vanishing derivatives at both ends."""
    n = order
    coef = np.zeros(2 * n + 2)
    for k in range(n + 1):
        coef[n + 1 + k] = comb(n + k, k, exact=True) * comb(2 * n + 1, n - k, exact=True) * (-1) ** k
    return np.polynomial.Polynomial(coef)


@dataclass(frozen=True)
class CutoffSpec:
    """psi_a(x) = S(|x| - a) clipped to [0, 1]; S is a C^order polynomial ramp."""

    a: float
    order: int = 4

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("cutoff radius a must be >= 1")
        if self.order < 2:
            raise ValueError("cutoff must be at least C^2")

    def _eval(self, r, deriv: int = 0):
        r = np.asarray(r, dtype=float)
        x = r - self.a
        p = _smoothstep_poly(self.order).deriv(deriv) if deriv else _smoothstep_poly(self.order)
        inside = (x > 0) & (x < 1)
        out = np.zeros_like(x)
        out[inside] = p(x[inside])
        if deriv == 0:
            out[x >= 1] = 1.0
        return out

    def radial(self, r):
        return self._eval(r)

    def d1(self, r):
        return self._eval(r, 1)

    def d2(self, r):
        return self._eval(r, 2)

    def laplacian(self, r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        return self.d2(r) + np.where(r > 0, 2 * self.d1(r) / safe, 0.0)

    def __call__(self, x):
        return self.radial(np.linalg.norm(np.asarray(x, dtype=float), axis=-1))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        return x * (self.d1(r) / safe)[..., None]


def commutator_cutoff(u, grad_u, x, a: float, order: int = 4):
    """[psi_a, -Laplacian] u = u Lap psi_a + 2 grad u . grad psi_a at point(s) x."""
    psi = CutoffSpec(a, order)
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    return np.asarray(u) * psi.laplacian(r) + 2 * np.sum(np.asarray(grad_u) * psi.gradient(x), axis=-1)


def _commutator_U(U: np.ndarray, r: np.ndarray, dr: float, psi: CutoffSpec, c: float) -> np.ndarray:
    """[psi, -c^2 Laplacian] u from U = r u on a radial grid: c^2 (psi'' U + 2 psi' U_r) / r."""
    Ur = radial_derivative(U, dr)
    Ur[..., 2:-2] = (U[..., :-4] - 8 * U[..., 1:-3] + 8 * U[..., 3:-1] - U[..., 4:]) / (12 * dr)
    num = c * c * (psi.d2(r) * U + 2 * psi.d1(r) * Ur)
    out = np.zeros_like(U)
    pos = r > 0
    out[..., pos] = num[..., pos] / r[pos]
    return out


# -- grid histories -----------------------------------------------------------


@dataclass
class History:
    """Every time level of U on one radial grid, indexed by global step."""

    r: np.ndarray
    dr: float
    dt: float
    U: np.ndarray  # (n_steps + 1, M)

    def u(self, n: int) -> np.ndarray:
        return u_from_U(self.U[n], self.r, self.dr)

    def at(self, n: int, r_probe: float) -> float:
        m = int(round((r_probe - self.r[0]) / self.dr))
        if not (0 <= m < len(self.r)) or abs(self.r[m] - r_probe) > 1e-9:
            raise ValueError(f"probe radius {r_probe} is not a grid node")
        return float(self.u(n)[m])


def _solve(
    c: float,
    dr: float,
    r_min: float,
    r_max: float,
    n_steps: int,
    phi=None,
    psi=None,
    source: Callable[[int], np.ndarray] | None = None,
) -> History:
    """Run a single-component linear radial solve and keep every level.

    ``source(n)`` returns the forcing on this grid's nodes at step n.
    """
    sys = WaveSystem((c,))
    src = None
    if source is not None:
        dt = dr / c

        def src(t, r):
            n = int(round(t / dt))
            return source(n)[None, :] if n >= 0 else np.zeros((1, len(r)))

    s = RadialSolver(sys, [phi], [psi], dr=dr, r_max=r_max, r_min=r_min, source=src, source_rule="diamond")
    levels = [s.current_U()[0].copy()]
    for _ in range(n_steps):
        s.step()
        levels.append(s.current_U()[0].copy())
    return History(s.r, s.dr, s.dt, np.array(levels))


def _transfer(values: np.ndarray, r_from: np.ndarray, r_to: np.ndarray, dr: float) -> np.ndarray:
    """Copy node values between radial grids that share spacing dr; zero where r_to is off r_from."""
    out = np.zeros(len(r_to))
    idx = np.rint((r_to - r_from[0]) / dr).astype(int)
    ok = (idx >= 0) & (idx < len(r_from))
    out[ok] = values[idx[ok]]
    return out


# -- composed decomposition ------------------------------------------------------


@dataclass
class DecompositionReport:
    probes: list[tuple[float, float]]
    reference: np.ndarray
    pieces: dict[str, np.ndarray]
    total: np.ndarray
    dr: float
    tolerance: float = constants.DECOMP_TOL * constants.DECOMP_FACTOR
    extra: dict[str, float] = field(default_factory=dict)

    @property
    def residuals(self) -> np.ndarray:
        return np.abs(self.total - self.reference)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.probes) else 0.0

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def rows(self) -> list[dict]:
        out = []
        for p, (t, r) in enumerate(self.probes):
            row = {"t": t, "r": r, "reference": self.reference[p]}
            for name, vals in self.pieces.items():
                row[name] = vals[p]
            row["total"] = self.total[p]
            row["residual"] = self.residuals[p]
            out.append(row)
        return out


PIECE_NAMES = ("psi1_K0", "K1", "K2", "K3", "K4")


def _check_grid(dr: float) -> int:
    n = 1.0 / dr
    if abs(n - round(n)) > 1e-9:
        raise ValueError("decomposition grids need dr = 1 / n for an integer n")
    return int(round(n))


def _compose(c, dr, t_max, probes, free_data, ext_data, free_source, ext_source, order):
    """Shared driver: free solve w, exterior z, y, free solves of the S_2 and S_3 sources."""
    _check_grid(dr)
    psi1, psi2, psi3 = (CutoffSpec(a, order) for a in (1.0, 2.0, 3.0))
    dt = dr / c
    n_steps = int(math.ceil(t_max / dt - 1e-9))
    r_out = max(r for _, r in probes)
    R = r_out + 4.0 + c * t_max + constants.PADDING_MARGIN
    for t, r in probes:
        if t > n_steps * dt + 1e-12 or r < 1.0:
            raise ValueError(f"probe (t={t}, r={r}) lies outside the computed domain")

    w = _solve(c, dr, 0.0, R, n_steps, *free_data, source=free_source)
    ext_r = 1.0 + dr * np.arange(int(round((R - 1.0) / dr)) + 1)

    def s1(n):
        W = _transfer(w.U[n], w.r, ext_r, dr)
        return _commutator_U(W, ext_r, dr, psi1, c)

    z = _solve(c, dr, 1.0, R, n_steps, source=s1)

    def s2(n):
        Z = _transfer(z.U[n], z.r, w.r, dr)
        return _commutator_U(Z, w.r, dr, psi2, c)

    k2 = _solve(c, dr, 0.0, R, n_steps, source=s2)
    y = _solve(c, dr, 1.0, R, n_steps, *ext_data, source=ext_source)

    def s3(n):
        Y = _transfer(y.U[n], y.r, w.r, dr)
        return _commutator_U(Y, w.r, dr, psi3, c)

    k4 = _solve(c, dr, 0.0, R, n_steps, source=s3)

    pieces = {name: np.zeros(len(probes)) for name in PIECE_NAMES}
    for p, (t, r) in enumerate(probes):
        n = int(round(t / dt))
        if abs(n * dt - t) > 1e-9:
            raise ValueError(f"probe time {t} is not a multiple of dt = {dt}")
        pieces["psi1_K0"][p] = float(psi1.radial(r)) * w.at(n, r)
        pieces["K1"][p] = (1 - float(psi2.radial(r))) * z.at(n, r)
        pieces["K2"][p] = -k2.at(n, r)
        pieces["K3"][p] = (1 - float(psi3.radial(r))) * y.at(n, r)
        pieces["K4"][p] = -k4.at(n, r)
    total = sum(pieces.values())
    return pieces, total


def _grid_probes(probes, dr: float, c: float):
    dt = dr / c
    out = []
    for t, r in probes:
        out.append((round(t / dt) * dt, 1.0 + round((r - 1.0) / dr) * dr))
    return out


def assemble_homogeneous_decomposition(
    phi: ShellProfile | None,
    psi: ShellProfile | None,
    c: float,
    probes,
    dr: float = constants.DECOMP_DEFAULT_DR,
    order: int = 4,
) -> DecompositionReport:
    """Compare the five-piece sum with the images-oracle K[v0] at (t, r) probes.

    ``phi`` and ``psi`` are data profiles centred at the origin and supported
    in |x| > 1. Probes are snapped to grid nodes and time levels.
    """
    for p in (phi, psi):
        if p is not None and (not p.centered or p.inner_radius <= 1.0):
            raise ValueError("data must be centred and vanish near the obstacle")
    probes = _grid_probes(probes, dr, c)
    t_max = max(t for t, _ in probes)
    psi2 = CutoffSpec(2.0, order)

    def scaled(prof, factor):
        if prof is None:
            return None
        return lambda r: factor(r) * prof.radial(r)

    free_data = (scaled(phi, psi2.radial), scaled(psi, psi2.radial))
    ext_data = (scaled(phi, lambda r: 1 - psi2.radial(r)), scaled(psi, lambda r: 1 - psi2.radial(r)))
    pieces, total = _compose(c, dr, t_max, probes, free_data, ext_data, None, None, order)
    ref = np.array([images_solution(phi, psi, c, t, r)[0] for t, r in probes])
    return DecompositionReport(probes, ref, pieces, total, dr)


def assemble_inhomogeneous_decomposition(
    f: Callable[[float, np.ndarray], np.ndarray],
    c: float,
    probes,
    dr: float = constants.DECOMP_DEFAULT_DR,
    order: int = 4,
) -> DecompositionReport:
    """Same comparison for L[f], against the exterior Duhamel quadrature oracle.

    ``f(t, r)`` is a radial source vanishing for r near 1.
    """
    probes = _grid_probes(probes, dr, c)
    t_max = max(t for t, _ in probes)
    psi2 = CutoffSpec(2.0, order)
    dt = dr / c
    r_free = dr * np.arange(int(round((max(r for _, r in probes) + 4.0 + c * t_max + constants.PADDING_MARGIN) / dr)) + 1)
    r_ext = r_free[r_free >= 1.0 - 1e-12]

    def free_src(n):
        return psi2.radial(r_free) * f(n * dt, r_free)

    def ext_src(n):
        return (1 - psi2.radial(r_ext)) * f(n * dt, r_ext)

    pieces, total = _compose(c, dr, t_max, probes, (None, None), (None, None), free_src, ext_src, order)
    ref = np.array([images_duhamel(lambda s, q: float(f(s, np.array([q]))[0]), c, t, r) for t, r in probes])
    return DecompositionReport(probes, ref, pieces, total, dr)


# -- D- D+ identity -----------------------------------------------------------------


@dataclass
class IdentityReport:
    points: list[tuple[float, float]]
    residuals: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if len(self.residuals) else 0.0


def dplus_identity_check(
    f: Callable[[float, np.ndarray], np.ndarray] | None,
    c: float,
    rays,
    dr: float = 0.05,
    data: tuple[ShellProfile | None, ShellProfile | None] = (None, None),
) -> IdentityReport:
    """Residual of D_- D_+ U = r f along incoming rays r = r0 + c (t0 - t).

    ``rays`` holds (r0, t0) pairs; each ray is sampled at every time level
    from t = dt up to t0 - dt. U comes from the radial exterior solver with
    optional data ``(phi, psi)``; D_+ and D_- are centred differences, so for
    outgoing pulses without forcing D_+ U vanishes to roundoff.
    """
    dt = dr / c
    t_end = max(t0 for _, t0 in rays)
    n_steps = int(math.ceil(t_end / dt)) + 2
    r_max = max(r0 for r0, _ in rays) + c * t_end + 8.0
    phi, psi = data
    src = None
    if f is not None:
        src = lambda t, r: np.asarray(f(t, r))[None, :]  # noqa: E731
    s = RadialSolver(
        WaveSystem((c,)),
        [None if phi is None else phi.radial],
        [None if psi is None else psi.radial],
        dr=dr,
        r_max=r_max,
        source=src,
    )
    U = [s.current_U()[0].copy()]
    for _ in range(n_steps):
        s.step()
        U.append(s.current_U()[0].copy())
    U = np.array(U)
    r = s.r
    # D+U on the whole space-time grid (interior levels and nodes)
    dplus = np.full_like(U, np.nan)
    dplus[1:-1, 1:-1] = (U[2:, 1:-1] - U[:-2, 1:-1]) / (2 * dt) + c * (U[1:-1, 2:] - U[1:-1, :-2]) / (2 * dr)
    points, res = [], []
    for r0, t0 in rays:
        n0 = int(round(t0 / dt))
        for n in range(2, n0):
            rr = r0 + c * (t0 - n * dt)
            m = int(round((rr - r[0]) / dr))
            if not (2 <= m < len(r) - 2):
                raise ValueError(f"ray through ({r0}, {t0}) leaves the grid")
            dm = (dplus[n + 1, m] - dplus[n - 1, m]) / (2 * dt) - c * (dplus[n, m + 1] - dplus[n, m - 1]) / (2 * dr)
            forcing = 0.0 if f is None else float(r[m] * np.asarray(f(n * dt, r[m : m + 1]))[0])
            points.append((n * dt, float(r[m])))
            res.append(dm - forcing)
    return IdentityReport(points, np.array(res))


def dplus_identity_callable(u, f, c: float, points, h: float = 1e-3) -> np.ndarray:
    """D_- D_+ (r u) - r f - (c^2 / r) sum Omega_ij^2 u for a smooth field u(t, x).

    All derivatives are centred differences with step ``h``; the result is
    O(h^2) for any smooth u solving the forced wave equation.
    """
    from .exterior.vectorfields import apply_dpm, apply_z

    def U(t, x):
        return np.linalg.norm(np.asarray(x), axis=-1) * u(t, x)

    dd = apply_dpm(apply_dpm(U, c, +1, h), c, -1, h)
    ang = lambda t, x: sum(apply_z(apply_z(u, w, h, orbit=True), w, h, orbit=True)(t, x) for w in (4, 5, 6))  # noqa: E731
    out = []
    for t, x in points:
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        out.append(float(dd(t, x)) - r * float(f(t, x)) - c * c / r * float(ang(t, x)))
    return np.array(out)


# -- reference scenarios used for tolerance calibration -------------------------

REFERENCE_PROBES = tuple((t, r) for t in (1.0, 2.0, 4.0, 6.0) for r in (1.5, 2.5, 3.5, 5.0))


def reference_homogeneous(dr: float = constants.DECOMP_DEFAULT_DR) -> DecompositionReport:
    """Data straddling every cutoff ramp: u0 bump on [1.6, 3.4], u1 bump on [1.7, 3.1]."""
    from .profiles import RadialBump

    phi = RadialBump(radius=2.5, half_width=0.9)
    psi = RadialBump(radius=2.4, half_width=0.7, height=0.5)
    return assemble_homogeneous_decomposition(phi, psi, 1.0, REFERENCE_PROBES, dr=dr)


def reference_inhomogeneous(dr: float = constants.DECOMP_DEFAULT_DR) -> DecompositionReport:
    """Source sin(t) times a bump on [1.6, 3.4]."""
    from .profiles import RadialBump

    bump = RadialBump(radius=2.5, half_width=0.9)
    return assemble_inhomogeneous_decomposition(
        lambda t, r: np.sin(t) * bump.radial(r), 1.0, REFERENCE_PROBES, dr=dr
    )
