"""Canonical scenarios behind the shipped configs and the acceptance suite."""

from __future__ import annotations

from .config import DiagnosticsConfig, Scenario
from .model import Grid, InitialData, NonlinearitySpec, Q0Term, QuadraticTerm, WaveSystem
from .profiles import OutgoingVelocity, RadialBump

# (d_t u)^2 and Q0(u, u; c) for a single component
DT_SQUARED = NonlinearitySpec(quadratic=(QuadraticTerm(0, 0, 0, 0, 0, 1.0),))
Q0_SELF = NonlinearitySpec(q0=(Q0Term(0, 0, 0, 1.0),))

LIFESPAN_BASE = RadialBump(radius=3.0, half_width=0.5, height=0.7)


def _padded_r_max(outer: float, c: float, t_max: float) -> float:
    return outer + c * t_max + 3.0


def local_decay_scenario(c: float = 0.2, angular_mode: int = 1, t_max: float = 120.0, dr: float = 0.02) -> Scenario:
    """Linear run of one spherical-harmonic mode; E_b(t) for b = 4 is the fitted quantity.

    The default mode l = 1 and slow speed keep the reflected energy inside B_4
    long enough to resolve its exponential decay; for l = 0 the local energy
    vanishes identically after a finite time.
    """
    phi = RadialBump(radius=2.5, half_width=0.5)
    return Scenario(
        WaveSystem((c,)),
        InitialData(1.0, (phi,), (None,), 1.5),
        Grid(mode="radial", t_max=t_max, dr=dr, r_max=_padded_r_max(3.0, c, t_max), angular_mode=angular_mode),
        DiagnosticsConfig(sample_every=5, local_radii=(4.0,), monitor_k=-1),
    )


def linear_decay_scenario(outgoing: bool = False, t_max: float = 200.0, dr: float = 0.05, eps: float = 1.0) -> Scenario:
    """Linear c = 1 run from a bump on [2, 3]; with ``outgoing`` the data launch a purely outgoing pulse."""
    phi = RadialBump(radius=2.5, half_width=0.5)
    psi = OutgoingVelocity(base=phi, speed=1.0) if outgoing else None
    return Scenario(
        WaveSystem((1.0,)),
        InitialData(eps, (phi,), (psi,), 1.5),
        Grid(mode="radial", t_max=t_max, dr=dr, r_max=_padded_r_max(3.0, 1.0, t_max)),
        DiagnosticsConfig(
            sample_every=4,
            local_radii=(4.0,),
            weights=("W(1,1)", "phi(0)"),
            monitor_k=0,
            rays=(2.5,) if outgoing else (),
        ),
    )


def lifespan_scenario(nonlinearity: NonlinearitySpec, eps: float, t_max: float) -> Scenario:
    """c = 1 outgoing pulse of height 0.7 eps on [2.5, 3.5] under the given quadratic nonlinearity."""
    psi = OutgoingVelocity(base=LIFESPAN_BASE, speed=1.0)
    return Scenario(
        WaveSystem((1.0,), nonlinearity),
        InitialData(eps, (LIFESPAN_BASE,), (psi,), 2.0),
        Grid(mode="radial", t_max=t_max, dr=0.05, r_max=_padded_r_max(3.5, 1.0, t_max)),
        DiagnosticsConfig(sample_every=50, local_radii=(), monitor_k=-1),
    )
