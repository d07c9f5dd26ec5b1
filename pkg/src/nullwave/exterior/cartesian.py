"""Masked 7-point leapfrog on a cube lattice with a staircase ball obstacle.

Nodes with |x| <= obstacle_radius are tagged INSIDE and held at zero; exterior
nodes with an INSIDE neighbour are tagged BOUNDARY and updated normally, so
the zero neighbour realizes the Dirichlet condition to first order. Box faces
are held at zero as well. An optional sponge of width ``sponge_width`` adds a
damping term sigma(x) u_t near the faces.
"""

from __future__ import annotations

from collections import deque
from typing import Callable

import numpy as np

from .. import constants
from ..model import Field, InitialData, WaveSystem
from ..nonlinearity import evaluate_nonlinearity

INSIDE, BOUNDARY, EXTERIOR = np.int8(0), np.int8(1), np.int8(2)

SPONGE_STRENGTH = 4.0
"""Peak damping rate (per unit time, times c_max) at the box faces."""


def laplacian7(u: np.ndarray, h: float) -> np.ndarray:
    """7-point Laplacian on the trailing three axes; zero on the faces."""
    out = np.zeros_like(u)
    c = u[..., 1:-1, 1:-1, 1:-1]
    out[..., 1:-1, 1:-1, 1:-1] = (
        u[..., 2:, 1:-1, 1:-1]
        + u[..., :-2, 1:-1, 1:-1]
        + u[..., 1:-1, 2:, 1:-1]
        + u[..., 1:-1, :-2, 1:-1]
        + u[..., 1:-1, 1:-1, 2:]
        + u[..., 1:-1, 1:-1, :-2]
        - 6.0 * c
    ) / (h * h)
    return out


def gradient3(u: np.ndarray, h: float) -> np.ndarray:
    """Centred gradient on the trailing three axes, shape (..., 3, n, n, n); zero on the faces."""
    g = np.zeros(u.shape[:-3] + (3,) + u.shape[-3:])
    g[..., 0, 1:-1, :, :] = (u[..., 2:, :, :] - u[..., :-2, :, :]) / (2 * h)
    g[..., 1, :, 1:-1, :] = (u[..., :, 2:, :] - u[..., :, :-2, :]) / (2 * h)
    g[..., 2, :, :, 1:-1] = (u[..., :, :, 2:] - u[..., :, :, :-2]) / (2 * h)
    return g


def obstacle_mask(axis: np.ndarray, radius: float | None) -> np.ndarray:
    """int8 tags INSIDE / BOUNDARY / EXTERIOR for the ball |x| <= radius (None: no obstacle)."""
    X = np.meshgrid(axis, axis, axis, indexing="ij")
    r = np.sqrt(X[0] ** 2 + X[1] ** 2 + X[2] ** 2)
    mask = np.full(r.shape, EXTERIOR, dtype=np.int8)
    if radius is None or radius <= 0:
        return mask
    inside = r <= radius
    mask[inside] = INSIDE
    near = np.zeros_like(inside)
    for ax in range(3):
        near |= np.roll(inside, 1, axis=ax) | np.roll(inside, -1, axis=ax)
    mask[near & ~inside] = BOUNDARY
    return mask


class CartesianSolver:
    """Leapfrog for (d_t^2 - c_i^2 Lap) u_i = F_i(u, du) on [-L, L]^3 minus a ball.

    Parameters
    ----------
    system, data:
        Wave system and initial data (profiles are evaluated on the lattice).
    dx, half_width:
        Lattice spacing and box half-width.
    obstacle_radius:
        Radius of the Dirichlet ball; None or 0 removes the obstacle.
    dt, cfl:
        Time step, by default ``cfl * dx / c_max``.
    sponge_width:
        Width of the damping layer next to the faces (0 disables it).
    source:
        Optional extra forcing f(t, X) with X of shape (n, n, n, 3), returning
        an array of shape (N, n, n, n).
    """

    def __init__(
        self,
        system: WaveSystem,
        data: InitialData,
        dx: float,
        half_width: float,
        obstacle_radius: float | None = 1.0,
        dt: float | None = None,
        cfl: float = 0.5,
        sponge_width: float = 0.0,
        source: Callable[[float, np.ndarray], np.ndarray] | None = None,
        blowup_threshold: float = constants.BLOWUP_THRESHOLD,
    ):
        self.system = system
        self.h = float(dx)
        m = int(round(half_width / dx))
        self.axis = self.h * np.arange(-m, m + 1)
        self.dt = float(dt) if dt is not None else cfl * self.h / system.c_max
        if system.c_max * self.dt / self.h > 1.0 / np.sqrt(3.0) + 1e-12:
            raise ValueError("CFL violated: c_max dt / dx must not exceed 1/sqrt(3)")
        self.mask = obstacle_mask(self.axis, obstacle_radius)
        self.active = self.mask != INSIDE
        self.active[[0, -1], :, :] = False
        self.active[:, [0, -1], :] = False
        self.active[:, :, [0, -1]] = False
        X = np.stack(np.meshgrid(self.axis, self.axis, self.axis, indexing="ij"), axis=-1)
        self.radius = np.linalg.norm(X, axis=-1)
        self._X = X
        self.source = source
        self.linear = system.nonlinearity.is_zero
        self.blowup_threshold = blowup_threshold
        self.N = system.n_components
        self.c2 = np.array(system.speeds)[:, None, None, None] ** 2
        self.sigma = self._sponge(sponge_width, system.c_max, half_width)
        u0 = np.array([data.u0(i, X) for i in range(self.N)]) * self.active
        self._u1 = np.array([data.u1(i, X) for i in range(self.N)]) * self.active
        self.levels: deque = deque([u0], maxlen=3)
        self.n = 0
        self.blowup = False
        self.lifespan: float | None = None

    @property
    def t(self) -> float:
        return self.n * self.dt

    @property
    def u(self) -> np.ndarray:
        return self.levels[-1]

    def _sponge(self, width: float, c_max: float, half_width: float) -> np.ndarray | None:
        if width <= 0:
            return None
        d = np.max(np.abs(self._X), axis=-1) - (half_width - width)
        s = np.clip(d / width, 0.0, 1.0)
        return SPONGE_STRENGTH * c_max / width * s**2

    def _forcing(self, t: float, u: np.ndarray, ut: np.ndarray) -> np.ndarray | None:
        F = None
        if not self.linear:
            du = np.concatenate([ut[:, None], gradient3(u, self.h)], axis=1)
            F = evaluate_nonlinearity(self.system, u, du)
        if self.source is not None:
            S = np.asarray(self.source(t, self._X), dtype=float).reshape(u.shape)
            F = S if F is None else F + S
        return F

    def _update(self, un, um, F) -> np.ndarray:
        rhs = 2.0 * un + self.dt**2 * self.c2 * laplacian7(un, self.h)
        if F is not None:
            rhs += self.dt**2 * F
        if self.sigma is None:
            nxt = rhs - um
        else:
            a = 0.5 * self.dt * self.sigma
            nxt = (rhs - (1.0 - a) * um) / (1.0 + a)
        return nxt * self.active

    def step(self) -> bool:
        """Advance one step; returns False once blow-up has been flagged."""
        if self.blowup:
            return False
        dt = self.dt
        if self.n == 0:
            u0 = self.levels[-1]
            F = self._forcing(0.0, u0, self._u1)
            nxt = u0 + dt * self._u1 + 0.5 * dt**2 * self.c2 * laplacian7(u0, self.h)
            if F is not None:
                nxt += 0.5 * dt**2 * F
            nxt *= self.active
        else:
            un, um = self.levels[-1], self.levels[-2]
            t = self.t
            F = self._forcing(t, un, (un - um) / dt)
            nxt = self._update(un, um, F)
            if not self.linear:
                F = self._forcing(t, un, (nxt - um) / (2 * dt))
                nxt = self._update(un, um, F)
        self.levels.append(nxt)
        self.n += 1
        if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > self.blowup_threshold:
            self.blowup = True
            self.lifespan = self.t
            return False
        return True

    def jets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u, u_t, grad u) at the previous level, with u_t centred; needs three levels."""
        if len(self.levels) < 3:
            raise ValueError("centred jets need three stored levels")
        um, u, up = self.levels
        return u, (up - um) / (2 * self.dt), gradient3(u, self.h)

    def energies(self, b: float) -> tuple[float, float]:
        """Leapfrog energy, total and over |x| <= b.

        1/2 sum[(D_t u)^2 + c^2 D_a u^n D_a u^(n-1)] h^3 with forward
        differences D_a; this is the quantity the unsponged scheme conserves.
        Before the first step the data energy is returned.
        """
        if len(self.levels) < 2:
            un = um = self.levels[-1]
            vel = self._u1
        else:
            un, um = self.levels[-1], self.levels[-2]
            vel = (un - um) / self.dt
        dens = 0.5 * np.sum(vel**2, axis=0)
        for ax in (1, 2, 3):
            dn = np.diff(un, axis=ax) / self.h
            dm = np.diff(um, axis=ax) / self.h
            prod = np.sum(self.c2 * dn * dm, axis=0)
            pad = [(0, 0)] * 3
            pad[ax - 1] = (0, 1)
            dens += 0.5 * np.pad(prod, pad)
        dens = dens * self.h**3
        return float(np.sum(dens)), float(np.sum(dens[self.radius <= b]))

    def field(self) -> Field:
        L = len(self.levels)
        times = self.t - self.dt * np.arange(L - 1, -1, -1)
        return Field("cartesian3d", times, np.array(list(self.levels)), self.axis, self.system.speeds, self.blowup)

    def probe(self, x) -> np.ndarray:
        """Trilinear interpolation of the current level at a point, per component."""
        x = np.asarray(x, dtype=float)
        f = (x - self.axis[0]) / self.h
        i0 = np.floor(f).astype(int)
        w = f - i0
        out = np.zeros(self.N)
        for corner in np.ndindex(2, 2, 2):
            idx = tuple(i0 + np.array(corner))
            wt = np.prod([w[a] if corner[a] else 1 - w[a] for a in range(3)])
            out += wt * self.u[(slice(None),) + idx]
        return out
