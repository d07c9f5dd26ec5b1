"""Free-space Cauchy solvers: Kirchhoff (K0) and Duhamel (L0), plus radial oracles.

K0[w0, w1; c](t, x) = d_t (t M_ct[w0]) + t M_ct[w1], where M_R is the mean
over the sphere of radius R about x. For profiles that are radial about their
own centre, the sphere rule is restricted to the polar band (about the axis
from x to that centre) where the sphere meets the support shell, so all
nodes land where the data live.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import constants
from .model import InitialData
from .profiles import ShellProfile
from .weights import bracket, data_norm_B, phi_r


@dataclass(frozen=True)
class SphereQuadrature:
    """Gauss-Legendre in cos(theta) times the trapezoid rule in azimuth."""

    n_polar: int = constants.DEFAULT_POLAR_NODES
    n_azimuth: int = constants.DEFAULT_AZIMUTH_NODES

    @property
    def degree(self) -> int:
        """Largest spherical-harmonic degree integrated exactly."""
        return min(2 * self.n_polar - 1, self.n_azimuth - 1)

    def polar_rule(self):
        return np.polynomial.legendre.leggauss(self.n_polar)

    @property
    def azimuths(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_azimuth) / self.n_azimuth

    @property
    def nodes(self) -> np.ndarray:
        mu, _ = self.polar_rule()
        phi = self.azimuths
        s = np.sqrt(1 - mu**2)
        return np.stack(
            [
                (s[:, None] * np.cos(phi)[None, :]).ravel(),
                (s[:, None] * np.sin(phi)[None, :]).ravel(),
                np.repeat(mu, len(phi)),
            ],
            axis=-1,
        )

    @property
    def weights(self) -> np.ndarray:
        _, w = self.polar_rule()
        return np.repeat(w, self.n_azimuth) * (2 * np.pi / self.n_azimuth)

    def refined(self) -> SphereQuadrature:
        return SphereQuadrature(2 * self.n_polar, 2 * self.n_azimuth)


DEFAULT_QUADRATURE = SphereQuadrature()


def _frame(axis: np.ndarray):
    """Orthonormal (e1, e2) completing unit vectors ``axis`` (shape (P, 3))."""
    helper = np.where(np.abs(axis[:, :1]) < 0.9, np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(axis, e1)
    return e1, e2


def _sphere_mean(f: Callable, x: np.ndarray, R: float, quad: SphereQuadrature, shell=None, radial_weight=None):
    """Mean of f over spheres of radius R about each row of x.

    ``shell = (center, s_min, s_max)`` restricts the polar rule to the band
    where the sphere meets the shell about ``center``. ``radial_weight`` (if
    given) replaces f by f(y) * (omega . grad)-style integrands evaluated as
    radial_weight(y, omega).
    """
    P = x.shape[0]
    if R == 0.0:
        if radial_weight is not None:
            return np.zeros(P)
        return np.asarray(f(x), dtype=float)
    mu_ref, w_ref = quad.polar_rule()
    phis = quad.azimuths
    if shell is None:
        axis = np.tile(np.array([0.0, 0.0, 1.0]), (P, 1))
        lo = np.full(P, -1.0)
        hi = np.full(P, 1.0)
    else:
        center, s_min, s_max = shell
        rel = np.asarray(center)[None, :] - x
        d = np.linalg.norm(rel, axis=1)
        safe = np.where(d > 0, d, 1.0)
        axis = np.where(d[:, None] > 0, rel / safe[:, None], np.array([[0.0, 0.0, 1.0]]))
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.where(d > 0, (R * R + d * d - s_max**2) / (2 * R * safe), -1.0)
            hi = np.where(d > 0, (R * R + d * d - s_min**2) / (2 * R * safe), 1.0)
        # concentric case: the whole sphere sits at distance R from the centre
        inside = (R >= s_min) & (R <= s_max)
        lo = np.where(d > 0, lo, np.where(inside, -1.0, 1.0))
        hi = np.where(d > 0, hi, 1.0)
        lo = np.clip(lo, -1.0, 1.0)
        hi = np.clip(hi, -1.0, 1.0)
    e1, e2 = _frame(axis)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    mu = mid[:, None] + half[:, None] * mu_ref[None, :]  # (P, Q)
    wq = half[:, None] * w_ref[None, :]
    s = np.sqrt(np.clip(1 - mu**2, 0.0, None))
    cph, sph = np.cos(phis), np.sin(phis)
    omega = (
        mu[:, :, None, None] * axis[:, None, None, :]
        + (s[:, :, None] * cph[None, None, :])[..., None] * e1[:, None, None, :]
        + (s[:, :, None] * sph[None, None, :])[..., None] * e2[:, None, None, :]
    )  # (P, Q, M, 3)
    y = x[:, None, None, :] + R * omega
    vals = f(y) if radial_weight is None else radial_weight(y, omega)
    az_mean = np.mean(vals, axis=2)
    return 0.5 * np.sum(wq * az_mean, axis=1)


def _shell(p) -> tuple | None:
    if isinstance(p, ShellProfile):
        return (np.asarray(p.center, dtype=float), p.s_min, p.s_max)
    return None


def spherical_mean(f, x, R: float, quad: SphereQuadrature = DEFAULT_QUADRATURE) -> np.ndarray:
    """M_R[f](x) for each row of x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return _sphere_mean(f, x, float(R), quad, _shell(f))


def k0_solve(w0, w1, c: float, t: float, x, quad: SphereQuadrature = DEFAULT_QUADRATURE):
    """Solution of the free wave equation with data (w0, w1) at time t and point(s) x.

    ``w0`` and ``w1`` are profiles (or callables on points, or None). A w0 that
    is not a :class:`ShellProfile` must provide ``gradient``.
    """
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim == 1
    pts = np.atleast_2d(x_arr)
    if t < 0:
        raise ValueError("k0_solve needs t >= 0")
    R = c * t
    out = np.zeros(pts.shape[0])
    if w0 is not None:
        out += _sphere_mean(w0, pts, R, quad, _shell(w0))
        if R > 0:
            grad = lambda y, om: np.sum(om * w0.gradient(y), axis=-1)  # noqa: E731
            out += R * _sphere_mean(w0, pts, R, quad, _shell(w0), radial_weight=grad)
    if w1 is not None and t > 0:
        out += t * _sphere_mean(w1, pts, R, quad, _shell(w1))
    return float(out[0]) if single else out


def k0_gradient(w0, w1, c: float, t: float, x, h: float = 1e-4, quad: SphereQuadrature = DEFAULT_QUADRATURE):
    """(d_t, d_1, d_2, d_3) of K0 at x by centred differences of :func:`k0_solve`."""
    x = np.asarray(x, dtype=float)
    g = [(k0_solve(w0, w1, c, t + h, x, quad) - k0_solve(w0, w1, c, max(t - h, 0.0), x, quad)) / (t + h - max(t - h, 0.0))]
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        g.append((k0_solve(w0, w1, c, t, x + e, quad) - k0_solve(w0, w1, c, t, x - e, quad)) / (2 * h))
    return np.array(g)


@dataclass(frozen=True)
class SeparableSource:
    """g(s, y) = time_factor(s) * profile(y)."""

    profile: ShellProfile
    time_factor: Callable[[float], float]

    def __call__(self, s, y):
        return self.time_factor(s) * self.profile(y)


def l0_solve(
    g,
    c: float,
    t: float,
    x,
    quad: SphereQuadrature = DEFAULT_QUADRATURE,
    n_duhamel: int | None = None,
    adaptive: bool = True,
):
    """Duhamel solution of box_c u = g with zero data, at time t and point(s) x.

    Gauss-Legendre in s on [0, t]; the starting node count is n_duhamel (default
    64 per unit time) and is doubled until two successive values agree to
    ``DUHAMEL_AGREEMENT`` (relative to max(1, |u|)).
    """
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim == 1
    pts = np.atleast_2d(x_arr)
    if t <= 0:
        out = np.zeros(pts.shape[0])
        return float(out[0]) if single else out

    def evaluate(n):
        s_ref, w_ref = np.polynomial.legendre.leggauss(n)
        s_nodes = 0.5 * t * (s_ref + 1)
        total = np.zeros(pts.shape[0])
        for s, w in zip(s_nodes, 0.5 * t * w_ref):
            tau = t - s
            if isinstance(g, SeparableSource):
                a = g.time_factor(s)
                if a == 0:
                    continue
                mean = _sphere_mean(g.profile, pts, c * tau, quad, _shell(g.profile))
                total += w * a * tau * mean
            else:
                total += w * tau * _sphere_mean(lambda y, s=s: g(s, y), pts, c * tau, quad)
        return total

    n = n_duhamel or max(8, int(math.ceil(constants.DUHAMEL_NODES_PER_UNIT_TIME * t)))
    prev = evaluate(n)
    if adaptive:
        for _ in range(constants.DUHAMEL_MAX_DOUBLINGS):
            n *= 2
            cur = evaluate(n)
            if np.all(np.abs(cur - prev) <= constants.DUHAMEL_AGREEMENT * np.maximum(1.0, np.abs(cur))):
                prev = cur
                break
            prev = cur
    return float(prev[0]) if single else prev


# -- radial oracles ---------------------------------------------------------


def _piece_points(p: ShellProfile | None) -> list[float]:
    return [] if p is None else [p.s_min, p.s_max]


def radial_k0_oracle(w0: ShellProfile | None, w1: ShellProfile | None, c: float, t: float, r: float) -> float:
    """Exact radial K0 via the half-line d'Alembert formula for r u.

    Profiles are radial about their own centre and ``r`` is the distance from
    it. The w1 integral is done by adaptive 1D quadrature.
    """
    ct = c * t
    val = 0.0
    if r == 0.0:
        if w0 is not None:
            val += float(w0.radial(ct) + ct * w0.radial_d1(ct))
        if w1 is not None:
            val += t * float(w1.radial(ct))
        return val
    if w0 is not None:
        a, b = r + ct, r - ct
        val += (a * float(w0.radial(a)) + b * float(w0.radial(abs(b)))) / (2 * r)
    if w1 is not None and t > 0:
        lo, hi = abs(r - ct), r + ct
        lo_c, hi_c = max(lo, w1.s_min), min(hi, w1.s_max)
        if hi_c > lo_c:
            pts = [p for p in _piece_points(w1) if lo_c < p < hi_c]
            integral, _ = integrate.quad(
                lambda s: s * float(w1.radial(s)), lo_c, hi_c, points=pts or None, limit=200, epsabs=1e-14, epsrel=1e-13
            )
            val += integral / (2 * c * r)
    return val


def radial_l0_oracle(g: SeparableSource, c: float, t: float, r: float) -> float:
    """Radial Duhamel oracle: integral over s of the radial K0 oracle with data (0, g(s))."""
    if t <= 0:
        return 0.0

    def inner(s):
        a = g.time_factor(s)
        return 0.0 if a == 0 else a * radial_k0_oracle(None, g.profile, c, t - s, r)

    val, _ = integrate.quad(inner, 0.0, t, limit=200, epsabs=1e-13, epsrel=1e-12)
    return val


# -- decay measurement -------------------------------------------------------


def measure_free_decay(w0, w1, c: float, rho: float, samples, quad: SphereQuadrature = DEFAULT_QUADRATURE) -> float:
    """Empirical constant sup <t+|x|> Phi_{rho-1}(ct, x) |K0[w0, w1]| / B_{rho+1, 0}[w0, w1].

    ``samples`` is an iterable of (t, x) pairs with x a point.
    """
    data = InitialData(1.0, (w0,), (w1,), 0.0)
    B = data_norm_B(rho + 1, 0, data)
    if B == 0.0:
        return 0.0
    best = 0.0
    for t, x in samples:
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        lhs = float(bracket(t + r) * phi_r(rho - 1, c * t, r)) * abs(k0_solve(w0, w1, c, t, x, quad))
        best = max(best, lhs)
    return best / B
