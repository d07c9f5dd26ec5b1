"""Analytic, compactly supported initial profiles.

Every profile is radially symmetric about its own ``center``: its value at
``x`` is ``g(|x - center|)`` and it vanishes unless ``s_min <= |x - center| <=
s_max``. The free-space solvers use that support shell to restrict sphere
quadratures to the band that actually meets the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError(f"points must have trailing dimension 3, got shape {x.shape}")
    return x


def _bump(xi):
    """exp(1 - 1/(1 - xi^2)) on |xi| < 1, zero elsewhere; peak value 1."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    inside = np.abs(xi) < 1.0
    q = 1.0 - xi[inside] ** 2
    out[inside] = np.exp(1.0 - 1.0 / q)
    return out


def _bump_d1(xi):
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    inside = np.abs(xi) < 1.0
    x = xi[inside]
    q = 1.0 - x**2
    out[inside] = np.exp(1.0 - 1.0 / q) * (-2.0 * x / q**2)
    return out


def _smooth_step(y):
    """C-infinity step: 0 for y <= 0, 1 for y >= 1."""
    y = np.asarray(y, dtype=float)
    f = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    g = np.where(y < 1, np.exp(-1.0 / np.where(y < 1, 1.0 - y, 1.0)), 0.0)
    return f / (f + g)


def _smooth_step_d1(y):
    y = np.asarray(y, dtype=float)
    pos = (y > 0) & (y < 1)
    out = np.zeros_like(y)
    yy = y[pos]
    f = np.exp(-1.0 / yy)
    g = np.exp(-1.0 / (1.0 - yy))
    df = f / yy**2
    dg = -g / (1.0 - yy) ** 2  # d/dy of exp(-1/(1-y))
    out[pos] = (df * (f + g) - f * (df + dg)) / (f + g) ** 2
    return out


@dataclass(frozen=True, kw_only=True)
class ShellProfile:
    """Base for profiles of the form g(|x - center|)."""

    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    # subclasses implement radial(s) and radial_d1(s)
    def radial(self, s):
        raise NotImplementedError

    def radial_d1(self, s):
        raise NotImplementedError

    @property
    def s_min(self) -> float:
        raise NotImplementedError

    @property
    def s_max(self) -> float:
        raise NotImplementedError

    @property
    def inner_radius(self) -> float:
        """Smallest |x| on the support."""
        d = float(np.linalg.norm(self.center))
        if d == 0.0:
            return self.s_min
        return max(0.0, d - self.s_max)

    @property
    def outer_radius(self) -> float:
        """Largest |x| on the support."""
        return float(np.linalg.norm(self.center)) + self.s_max

    @property
    def centered(self) -> bool:
        return not any(self.center)

    def __call__(self, x):
        x = _as_points(x)
        s = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return self.radial(s)

    def gradient(self, x):
        x = _as_points(x)
        d = x - np.asarray(self.center)
        s = np.linalg.norm(d, axis=-1)
        safe = np.where(s > 0, s, 1.0)
        g1 = np.where(s > 0, self.radial_d1(s) / safe, 0.0)
        return d * g1[..., None]


@dataclass(frozen=True, kw_only=True)
class RadialBump(ShellProfile):
    """height * exp(1 - 1/(1 - xi^2)), xi = (|x - center| - radius) / half_width."""

    radius: float = 2.5
    half_width: float = 0.5
    height: float = 1.0

    def radial(self, s):
        return self.height * _bump((np.asarray(s, dtype=float) - self.radius) / self.half_width)

    def radial_d1(self, s):
        return self.height * _bump_d1((np.asarray(s, dtype=float) - self.radius) / self.half_width) / self.half_width

    @property
    def s_min(self) -> float:
        return max(0.0, self.radius - self.half_width)

    @property
    def s_max(self) -> float:
        return self.radius + self.half_width


@dataclass(frozen=True, kw_only=True)
class TruncatedGaussian(ShellProfile):
    """height * exp(-s^2 / (2 sigma^2)) tapered smoothly to zero on [cutoff/2, cutoff]."""

    sigma: float = 0.5
    cutoff: float = 2.0
    height: float = 1.0

    def radial(self, s):
        s = np.asarray(s, dtype=float)
        return self.height * np.exp(-0.5 * (s / self.sigma) ** 2) * _smooth_step(2.0 - 2.0 * s / self.cutoff)

    def radial_d1(self, s):
        s = np.asarray(s, dtype=float)
        gauss = np.exp(-0.5 * (s / self.sigma) ** 2)
        taper = _smooth_step(2.0 - 2.0 * s / self.cutoff)
        dtaper = -2.0 / self.cutoff * _smooth_step_d1(2.0 - 2.0 * s / self.cutoff)
        return self.height * (gauss * dtaper - s / self.sigma**2 * gauss * taper)

    @property
    def s_min(self) -> float:
        return 0.0

    @property
    def s_max(self) -> float:
        return self.cutoff


@dataclass(frozen=True, kw_only=True)
class OutgoingVelocity(ShellProfile):
    """psi = -c (phi' + phi / r) for a profile phi centered at the origin.

    With this velocity the radial field r*u starts as a purely outgoing pulse.
    """

    base: ShellProfile = RadialBump()
    speed: float = 1.0

    def __post_init__(self):
        if not self.base.centered:
            raise ValueError("outgoing velocity needs a profile centered at the origin")

    def radial(self, s):
        s = np.asarray(s, dtype=float)
        safe = np.where(s > 0, s, 1.0)
        return -self.speed * (self.base.radial_d1(s) + np.where(s > 0, self.base.radial(s) / safe, 0.0))

    def radial_d1(self, s):
        # second derivative of the base by centred differences is enough here;
        # the velocity gradient is only used in optional diagnostics
        h = 1e-5
        return (self.radial(np.asarray(s) + h) - self.radial(np.asarray(s) - h)) / (2 * h)

    @property
    def s_min(self) -> float:
        return self.base.s_min

    @property
    def s_max(self) -> float:
        return self.base.s_max


PROFILE_KINDS = {
    "radial_bump": RadialBump,
    "truncated_gaussian": TruncatedGaussian,
}


def profile_from_dict(d: dict, *, speed: float | None = None) -> ShellProfile:
    """Build a profile from a config table (``kind`` plus constructor fields)."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "outgoing":
        base = profile_from_dict(d.pop("base"))
        if d:
            raise ValueError(f"unknown keys for outgoing profile: {sorted(d)}")
        if speed is None:
            raise ValueError("outgoing velocity needs the component speed")
        return OutgoingVelocity(base=base, speed=speed)
    if kind not in PROFILE_KINDS:
        raise ValueError(f"unknown profile kind {kind!r}; expected one of {sorted(PROFILE_KINDS)} or 'outgoing'")
    cls = PROFILE_KINDS[kind]
    allowed = {f for f in cls.__dataclass_fields__}
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unknown keys for {kind}: {sorted(unknown)}")
    if "center" in d:
        d["center"] = tuple(float(v) for v in d["center"])
    return cls(**d)


def profile_to_dict(p: ShellProfile) -> dict:
    if isinstance(p, OutgoingVelocity):
        return {"kind": "outgoing", "base": profile_to_dict(p.base)}
    for kind, cls in PROFILE_KINDS.items():
        if type(p) is cls:
            out = {"kind": kind}
            for name in cls.__dataclass_fields__:
                v = getattr(p, name)
                out[name] = list(v) if isinstance(v, tuple) else v
            return out
    raise TypeError(f"cannot serialize profile of type {type(p).__name__}")
