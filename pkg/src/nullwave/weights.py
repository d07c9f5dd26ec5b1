"""Space-time weights, weighted sup norms, the data norm B and the monitor e_k."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

import numpy as np

from .model import Field, InitialData


def bracket(y):
    """<y> = sqrt(1 + y^2)."""
    y = np.asarray(y, dtype=float)
    return np.sqrt(1.0 + y * y)


def _radius(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.abs(x)
    if x.shape[-1] != 3:
        raise ValueError("points need a trailing dimension of 3")
    return np.linalg.norm(x, axis=-1)


def phi_r(nu: float, t, r):
    """Phi_nu at (t, |x| = r)."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if nu < 0:
        return bracket(t + r) ** nu
    if nu == 0:
        return 1.0 / np.log(2.0 + bracket(t + r) / bracket(t - r))
    return bracket(t - r) ** nu


def phi(nu: float, t, x):
    """Phi_nu(t, x): <t+|x|>^nu for nu < 0, the log weight for nu = 0, <t-|x|>^nu for nu > 0."""
    return phi_r(nu, t, _radius(x))


def _min_bracket(t, r, speeds, exclude: float | None):
    cs = [0.0, *speeds]
    if exclude is not None:
        cs = [c for c in cs if c != exclude]
        if not cs:
            raise ValueError(f"every speed equals c = {exclude}; the excluded minimum is empty")
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    return np.min(np.stack(np.broadcast_arrays(*[bracket(c * t - r) for c in cs])), axis=0)


def weight_w_r(nu, kappa, t, r, speeds):
    if len(speeds) == 0:
        raise ValueError("speed list must be nonempty")
    return bracket(np.asarray(t) + np.asarray(r)) ** nu * _min_bracket(t, r, speeds, None) ** kappa


def weight_wc_r(nu, kappa, t, r, speeds, c):
    if len(speeds) == 0:
        raise ValueError("speed list must be nonempty")
    return bracket(np.asarray(t) + np.asarray(r)) ** nu * _min_bracket(t, r, speeds, c) ** kappa


def weight_w(nu, kappa, t, x, speeds):
    """W_{nu,kappa}(t, x); the minimum runs over c_0 = 0 and the system speeds."""
    return weight_w_r(nu, kappa, t, _radius(x), speeds)


def weight_wc(nu, kappa, t, x, speeds, c):
    """W^(c)_{nu,kappa}(t, x); speeds equal to c are dropped from the minimum."""
    return weight_wc_r(nu, kappa, t, _radius(x), speeds, c)


@dataclass(frozen=True)
class WeightSpec:
    kind: str
    nu: float
    kappa: float = 0.0
    c: float | None = None
    speeds: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("phi", "W", "Wc"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind in ("W", "Wc") and not self.speeds:
            raise ValueError("W and Wc weights need the system speed list")
        if self.kind == "Wc" and self.c is None:
            raise ValueError("Wc needs the excluded speed c")
        if self.kind in ("W", "Wc") and self.kappa < 0:
            raise ValueError("kappa must be non-negative")

    def value_r(self, t, r):
        if self.kind == "phi":
            return phi_r(self.nu, t, r)
        if self.kind == "W":
            return weight_w_r(self.nu, self.kappa, t, r, self.speeds)
        return weight_wc_r(self.nu, self.kappa, t, r, self.speeds, self.c)

    def value(self, t, x):
        return self.value_r(t, _radius(x))

    @property
    def name(self) -> str:
        g = lambda v: f"{v:g}"  # noqa: E731
        if self.kind == "phi":
            return f"phi({g(self.nu)})"
        if self.kind == "W":
            return f"W({g(self.nu)},{g(self.kappa)})"
        return f"Wc({g(self.nu)},{g(self.kappa)},{g(self.c)})"


_NAME = re.compile(r"^\s*(phi|Wc|W)\(([^)]*)\)\s*$")


def parse_weight_name(name: str, speeds: tuple[float, ...]) -> WeightSpec:
    """Inverse of :attr:`WeightSpec.name`, e.g. ``"W(1,1)"`` or ``"Wc(0,1,2)"``."""
    m = _NAME.match(name)
    if not m:
        raise ValueError(f"cannot parse weight name {name!r}")
    kind, args = m.group(1), [float(a) for a in m.group(2).split(",")]
    arity = {"phi": 1, "W": 2, "Wc": 3}[kind]
    if len(args) != arity:
        raise ValueError(f"{kind} takes {arity} parameters, got {name!r}")
    if kind == "phi":
        return WeightSpec("phi", args[0])
    if kind == "W":
        return WeightSpec("W", args[0], args[1], speeds=tuple(speeds))
    return WeightSpec("Wc", args[0], args[1], c=args[2], speeds=tuple(speeds))


def weighted_sup_norm(times, radii, values, spec: WeightSpec, t: float | None = None) -> np.ndarray:
    """Running sup of <|x|> z(s, x) |g(s, x)|_k over samples with s <= t.

    ``values`` holds |g|_k with shape (len(times), len(radii)); the result has
    one entry per sample instant (restricted to s <= t when given).
    """
    times = np.asarray(times, dtype=float)
    radii = np.asarray(radii, dtype=float)
    values = np.abs(np.asarray(values, dtype=float)).reshape(len(times), -1)
    if t is not None:
        keep = times <= t
        times, values = times[keep], values[keep]
    if len(times) == 0:
        return np.zeros(0)
    z = spec.value_r(times[:, None], radii[None, :])
    per = np.max(bracket(radii)[None, :] * z * values, axis=1)
    return np.maximum.accumulate(per)


class RunningSup:
    """Incremental form of :func:`weighted_sup_norm` for use inside a run."""

    def __init__(self, spec: WeightSpec):
        self.spec = spec
        self.value = 0.0

    def update(self, t: float, radii, values) -> float:
        z = self.spec.value_r(t, np.asarray(radii))
        self.value = max(self.value, float(np.max(bracket(radii) * z * np.abs(values), initial=0.0)))
        return self.value


# -- Z-norms of time-independent data ---------------------------------------

SPATIAL_Z = (1, 2, 3, 4, 5, 6)
"""Indices of the spatial vector fields d1, d2, d3, Omega12, Omega13, Omega23."""

SAMPLE_DIRECTIONS = np.array(
    [
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0] / np.sqrt(2.0),
        [1.0, 1.0, 1.0] / np.sqrt(3.0),
        [0.0, 0.6, 0.8],
    ]
)


def _static(f):
    return lambda t, x: f(x)


def data_norm_B(rho: float, k: int, data: InitialData, dr: float = 0.05, h: float = 1e-3) -> float:
    """Discrete B_{rho,k}: sup over sample points of <|y|>^rho (|phi|_k + |grad phi|_k + |psi|_k).

    Samples lie on rays along :data:`SAMPLE_DIRECTIONS` and through every
    profile centre, with radial spacing ``dr`` covering every support; Z-derivatives are nested centred
    differences with step ``h`` (see :mod:`nullwave.exterior.vectorfields`).
    The norm is taken for the summed components.
    """
    from .exterior.vectorfields import zk_norm

    profiles = data.profiles
    if not profiles or data.amplitude == 0:
        return 0.0
    hi = max(float(np.linalg.norm(p.center)) + p.s_max for p in profiles)
    r = np.arange(0.0, hi + dr, dr)
    # off-centre profiles get a ray through their centre so the sup sees their peak
    dirs = [d for d in SAMPLE_DIRECTIONS]
    for p in profiles:
        n = float(np.linalg.norm(p.center))
        if n > 0:
            dirs.append(np.asarray(p.center, dtype=float) / n)
    pts = (r[:, None, None] * np.array(dirs)[None, :, :]).reshape(-1, 3)
    total = np.zeros(len(pts))
    eps = data.amplitude
    for ph, ps in zip(data.phi, data.psi):
        if ph is not None:
            total += eps * zk_norm(_static(ph), k, 0.0, pts, h, SPATIAL_Z)
            for j in range(3):
                dj = lambda x, j=j, ph=ph: ph.gradient(x)[..., j]  # noqa: E731
                total += eps * zk_norm(_static(dj), k, 0.0, pts, h, SPATIAL_Z)
        if ps is not None:
            total += eps * zk_norm(_static(ps), k, 0.0, pts, h, SPATIAL_Z)
    return float(np.max(bracket(np.linalg.norm(pts, axis=-1)) ** rho * total))


# -- monitor e_k on radial fields -----------------------------------------


def radial_jet_norms(r, u, ut, ur, utt=None, utr=None, urr=None, k: int = 0):
    """|u|_k and |du|_k for a radial field sampled at x = r e1.

    Rotations annihilate radial functions, and at x = r e1 the only nonzero
    spatial derivative of order one is d1 = d_r; second derivatives are
    d1d1 = u_rr, d2d2 = d3d3 = u_r / r, and d_t d1 = u_tr. Supports k <= 1
    for |du|_k and k + 1 <= 2 for |u|_{k+1}.
    """
    r = np.asarray(r, dtype=float)
    if k > 1:
        raise ValueError("radial jet norms support k <= 1")
    abs_ = np.abs
    u_k = [abs_(u), abs_(ut) + abs_(ur)]
    du_k = [abs_(ut) + abs_(ur)]
    if utt is not None:
        second = abs_(utt) + 2 * abs_(utr) + abs_(urr) + 2 * abs_(ur / r)
        u_k.append(u_k[1] + second)
        du_k.append(du_k[0] + second)
    return u_k, du_k


def monitor_e_radial(t: float, r, c: float, u, ut, ur, utt, utr, urr, k: int = 0) -> float:
    """sup over r of the three-term monitor for one radial component.

    The jet entries are arrays over the radial nodes. ``k`` may be 0 or 1; the
    D+ sum runs over |alpha| <= k - 1 and is empty for k = 0.
    """
    if k not in (0, 1):
        raise ValueError("monitor_e supports k in {0, 1} on radial runs")
    r = np.asarray(r, dtype=float)
    if len(r) == 0:
        return 0.0
    u_k, du_k = radial_jet_norms(r, u, ut, ur, utt, utr, urr, k=k)
    term1 = bracket(t + r) * phi_r(0.0, c * t, r) * u_k[k + 1]
    term2 = bracket(r) * bracket(c * t - r) * du_k[k]
    total = term1 + term2
    if k >= 1:
        dplus = np.abs(ut + c * ur)
        total = total + bracket(r) * bracket(t + r) / np.log(2.0 + t + r) * dplus
    return float(np.max(total))


def monitor_e(field: Field, k: int, speeds: tuple[float, ...] | None = None) -> np.ndarray:
    """Per-component monitor at the middle time level of a radial field slab.

    Requires three time levels (for d_t and d_t^2) and at least three nodes.
    """
    if field.mode != "radial":
        raise ValueError("monitor_e is implemented for radial fields")
    if field.values.shape[0] < 3:
        raise ValueError("monitor_e needs three time levels")
    speeds = speeds or field.speeds
    dt = field.dt
    r = field.coords
    dr = r[1] - r[0]
    mid = field.center
    t = float(field.times[mid])
    out = []
    for i, c in enumerate(speeds):
        lev = field.values[:, i]
        u = lev[mid]
        ut = (lev[mid + 1] - lev[mid - 1]) / (2 * dt)
        utt = (lev[mid + 1] - 2 * u + lev[mid - 1]) / dt**2
        ur = np.gradient(u, dr, edge_order=2)
        urr = np.gradient(ur, dr, edge_order=2)
        utr = np.gradient(ut, dr, edge_order=2)
        out.append(monitor_e_radial(t, r, c, u, ut, ur, utt, utr, urr, k=k))
    return np.array(out)


def multi_indices(fields, k: int):
    """Nondecreasing sequences over ``fields`` of length <= k (the multi-indices |alpha| <= k)."""
    for m in range(k + 1):
        yield from itertools.combinations_with_replacement(fields, m)


def cross_speed_constant(cj: float, ck: float, t, r, speeds) -> float:
    """Empirical C in <c_j t - r>^-1 <c_k t - r>^-1 <= C <t + r>^-1 min_l <c_l t - r>^-1."""
    if cj == ck:
        raise ValueError("the cross-speed bound needs distinct speeds")
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    lhs = 1.0 / (bracket(cj * t - r) * bracket(ck * t - r))
    rhs = 1.0 / (bracket(t + r) * _min_bracket(t, r, speeds, None))
    return float(np.max(lhs / rhs))


def phi0_inverse_constant(mu: float, c: float, t, r) -> float:
    """Empirical C in Phi_0(ct, x)^-1 <= C <t + r>^mu <ct - r>^-mu."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    lhs = 1.0 / phi_r(0.0, c * t, r)
    rhs = bracket(t + r) ** mu * bracket(c * t - r) ** (-mu)
    return float(np.max(lhs / rhs))


__all__ = [
    "bracket",
    "phi",
    "phi_r",
    "weight_w",
    "weight_wc",
    "weight_w_r",
    "weight_wc_r",
    "WeightSpec",
    "parse_weight_name",
    "weighted_sup_norm",
    "RunningSup",
    "data_norm_B",
    "monitor_e",
    "monitor_e_radial",
    "radial_jet_norms",
    "multi_indices",
    "cross_speed_constant",
    "phi0_inverse_constant",
]
