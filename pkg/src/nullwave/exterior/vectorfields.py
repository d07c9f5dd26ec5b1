"""Discrete vector fields Z_0..Z_6, D+ and D-, on callables and on lattices.

Index convention: Z_0 = d_t, Z_j = d_j (j = 1, 2, 3), Z_4 = Omega_12,
Z_5 = Omega_13, Z_6 = Omega_23, with Omega_ij = x_i d_j - x_j d_i.

For callables ``f(t, x)`` every field is a centred difference. Rotations are
assembled from Cartesian differences by default; the orbit variant
(f(R_h x) - f(R_-h x)) / 2h annihilates radial functions exactly. A
multi-index (a_1 <= ... <= a_m) acts as Z_{a_1} ... Z_{a_m}, so the last
field is applied first.
"""

from __future__ import annotations

import numpy as np

from ..model import Field

ROTATION_PLANES = {4: (0, 1), 5: (0, 2), 6: (1, 2)}
FIELD_NAMES = ("dt", "d1", "d2", "d3", "Omega12", "Omega13", "Omega23")


def _rotate(x: np.ndarray, plane: tuple[int, int], theta: float) -> np.ndarray:
    """R_theta in the (i, j) plane, oriented so that d/dtheta f(R x) = Omega_ij f."""
    i, j = plane
    c, s = np.cos(theta), np.sin(theta)
    y = np.array(x, dtype=float, copy=True)
    xi, xj = x[..., i], x[..., j]
    y[..., i] = c * xi - s * xj
    y[..., j] = s * xi + c * xj
    return y


def apply_z(f, which: int, h: float, orbit: bool = False):
    """Return the callable (t, x) -> (Z_which f)(t, x) by centred differencing with step h.

    Rotations default to x_i D_j - x_j D_i, exact on quadratics. With
    ``orbit=True`` they are differenced along the rotation orbit instead.
    """
    if which == 0:
        return lambda t, x: (f(t + h, x) - f(t - h, x)) / (2 * h)
    if which in (1, 2, 3):
        e = np.zeros(3)
        e[which - 1] = h
        return lambda t, x: (f(t, np.asarray(x) + e) - f(t, np.asarray(x) - e)) / (2 * h)
    if which in ROTATION_PLANES:
        plane = ROTATION_PLANES[which]
        if orbit:
            return lambda t, x: (
                f(t, _rotate(np.asarray(x, dtype=float), plane, h))
                - f(t, _rotate(np.asarray(x, dtype=float), plane, -h))
            ) / (2 * h)
        i, j = plane
        di, dj = apply_z(f, i + 1, h), apply_z(f, j + 1, h)
        return lambda t, x: np.asarray(x)[..., i] * dj(t, x) - np.asarray(x)[..., j] * di(t, x)
    raise ValueError(f"vector field index must lie in 0..6, got {which}")


def apply_dpm(f, c: float, sign: int, h: float):
    """D_{+,c} (sign=+1) or D_{-,c} (sign=-1) of a callable; d_r is differenced along x/|x|."""

    def g(t, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        if np.any(r == 0):
            raise ValueError("D+/- is undefined at the origin")
        step = x / r * h
        dr = (f(t, x + step) - f(t, x - step)) / (2 * h)
        dt = (f(t + h, x) - f(t - h, x)) / (2 * h)
        return dt + sign * c * dr

    return g


def apply_multi(f, alpha, h: float, orbit: bool = False):
    out = f
    for which in reversed(tuple(alpha)):
        out = apply_z(out, which, h, orbit)
    return out


def zk_norm(f, k: int, t, x, h: float, fields=tuple(range(7)), orbit: bool = True) -> np.ndarray:
    """|f|_k = sum over multi-indices |alpha| <= k of |Z^alpha f| at (t, x)."""
    from ..weights import multi_indices

    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape[:-1])
    for alpha in multi_indices(fields, k):
        total = total + np.abs(apply_multi(f, alpha, h, orbit)(t, x))
    return total


# -- lattice operators --------------------------------------------------------


def lattice_d(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Centred first difference along ``axis``; the result loses one sample at each end."""
    n = arr.shape[axis]
    hi = np.take(arr, np.arange(2, n), axis=axis)
    lo = np.take(arr, np.arange(0, n - 2), axis=axis)
    return (hi - lo) / (2 * h)


def _trim(arr: np.ndarray, axes, width: int = 1) -> np.ndarray:
    sl = [slice(None)] * arr.ndim
    for a in axes:
        sl[a] = slice(width, arr.shape[a] - width)
    return arr[tuple(sl)]


def lattice_z(arr: np.ndarray, which: int, coords: np.ndarray, h: float, dt: float) -> np.ndarray:
    """Z_which on a space-time lattice ``arr[t, x1, x2, x3]`` with spacing h and coordinates ``coords``.

    The result is trimmed by one sample on every axis, so compositions stay
    aligned.
    """
    if which == 0:
        return _trim(lattice_d(arr, 0, dt), (1, 2, 3))
    if which in (1, 2, 3):
        return _trim(lattice_d(arr, which, h), (0, 1, 2, 3)[:which] + (0, 1, 2, 3)[which + 1 :])
    if which in ROTATION_PLANES:
        i, j = ROTATION_PLANES[which]
        X = np.meshgrid(coords, coords, coords, indexing="ij")
        xi = _trim(X[i], (0, 1, 2))[None]
        xj = _trim(X[j], (0, 1, 2))[None]
        di = _trim(lattice_z(arr, i + 1, coords, h, dt), ())
        dj = _trim(lattice_z(arr, j + 1, coords, h, dt), ())
        return xi * dj - xj * di
    raise ValueError(f"vector field index must lie in 0..6, got {which}")


def lattice_box(arr: np.ndarray, c: float, h: float, dt: float) -> np.ndarray:
    """D_t^2 - c^2 Delta_h with the 7-point Laplacian, trimmed by one sample on every axis."""
    core = arr[1:-1, 1:-1, 1:-1, 1:-1]
    dtt = (arr[2:, 1:-1, 1:-1, 1:-1] - 2 * core + arr[:-2, 1:-1, 1:-1, 1:-1]) / dt**2
    lap = (
        arr[1:-1, 2:, 1:-1, 1:-1]
        + arr[1:-1, :-2, 1:-1, 1:-1]
        + arr[1:-1, 1:-1, 2:, 1:-1]
        + arr[1:-1, 1:-1, :-2, 1:-1]
        + arr[1:-1, 1:-1, 1:-1, 2:]
        + arr[1:-1, 1:-1, 1:-1, :-2]
        - 6 * core
    ) / h**2
    return dtt - c * c * lap


def commutator_residual(arr: np.ndarray, which: int, c: float, coords: np.ndarray, h: float, dt: float) -> float:
    """max |Z box_h f - box_h Z f| over the common interior of a lattice slab."""
    zb = lattice_z(lattice_box(arr, c, h, dt), which, coords[1:-1], h, dt)
    bz = lattice_box(lattice_z(arr, which, coords, h, dt), c, h, dt)
    return float(np.max(np.abs(zb - bz)))


# -- application to a stored Field ------------------------------------------


def apply_vector_field(field: Field, which, point, component: int = 0, c: float | None = None) -> float:
    """Apply Z_which (0..6), ``"D+"`` or ``"D-"`` at the middle time level of ``field``.

    ``point`` is a node index ``m`` for radial fields (evaluated at x = r_m e1)
    and a lattice index triple for Cartesian fields. ``c`` defaults to the
    component speed for D+/-.
    """
    vals = field.values[:, component]
    L = vals.shape[0]
    mid = field.center
    if L < 3:
        raise ValueError("time derivatives need three stored time levels")
    dt = field.dt
    c = field.speeds[component] if c is None else c
    if field.mode == "radial":
        m = int(point)
        if not (1 <= m < vals.shape[1] - 1):
            raise ValueError(f"radial stencil at node {m} leaves the grid")
        dr = field.coords[1] - field.coords[0]
        u_t = (vals[mid + 1, m] - vals[mid - 1, m]) / (2 * dt)
        u_r = (vals[mid, m + 1] - vals[mid, m - 1]) / (2 * dr)
        grads = {0: u_t, 1: u_r, 2: 0.0, 3: 0.0, 4: 0.0, 5: 0.0, 6: 0.0}
        if which == "D+":
            return float(u_t + c * u_r)
        if which == "D-":
            return float(u_t - c * u_r)
        return float(grads[int(which)])
    idx = tuple(int(p) for p in point)
    n = vals.shape[1]
    if any(not (1 <= p < n - 1) for p in idx):
        raise ValueError(f"Cartesian stencil at {idx} leaves the lattice")
    h = field.coords[1] - field.coords[0]
    x = np.array([field.coords[p] for p in idx])
    cur = vals[mid]
    d = [(vals[mid + 1][idx] - vals[mid - 1][idx]) / (2 * dt)]
    for a in range(3):
        up = list(idx)
        dn = list(idx)
        up[a] += 1
        dn[a] -= 1
        d.append((cur[tuple(up)] - cur[tuple(dn)]) / (2 * h))
    if which in ("D+", "D-"):
        r = np.linalg.norm(x)
        dr = sum(x[a] * d[a + 1] for a in range(3)) / r
        return float(d[0] + (c if which == "D+" else -c) * dr)
    which = int(which)
    if which <= 3:
        return float(d[which])
    i, j = ROTATION_PLANES[which]
    return float(x[i] * d[j + 1] - x[j] * d[i + 1])
