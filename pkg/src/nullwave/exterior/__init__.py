"""Exterior solvers (radial and Cartesian) and discrete vector fields."""

from __future__ import annotations

from .cartesian import CartesianSolver
from .radial import (
    RadialSolver,
    discrete_energy,
    images_solution,
    local_energy,
    radial_derivative,
    u_from_U,
    ur_from_U,
)
from .vectorfields import apply_vector_field


def step_radial(solver: RadialSolver) -> bool:
    """Advance a radial solver by dt = dr / c_max; False once blow-up is flagged."""
    return solver.step()


def step_cartesian(solver: CartesianSolver) -> bool:
    """Advance a Cartesian solver by its dt; False once blow-up is flagged."""
    return solver.step()


def energies(solver, b: float) -> tuple[float, float]:
    """(total, local) energy 1/2 int |u_t|^2 + c^2 |grad u|^2, local over 1 <= |x| <= b.

    The total is the scheme's conserved leapfrog energy. For radial solvers the
    local part integrates the centred-difference jets of the last two levels
    by the trapezoid rule.
    """
    if isinstance(solver, CartesianSolver):
        return solver.energies(b)
    total = 0.0
    local = 0.0
    for st in solver.states:
        if len(st.levels) < 2:
            continue
        dti = st.times[-1] - st.times[-2]
        Un, Um = st.levels[-1], st.levels[-2]
        pot = solver.potential if solver.ell else None
        total += discrete_energy(Un, Um, st.speed, solver.dr, dti, pot)
        Uh = 0.5 * (Un + Um)
        r = solver.r
        u = u_from_U(Uh, r, solver.dr)
        ut = u_from_U((Un - Um) / dti, r, solver.dr)
        ur = ur_from_U(Uh, radial_derivative(Uh, solver.dr), r)
        local += local_energy(u, ut, ur, r, st.speed, b, solver.ell)
    return total, local


__all__ = [
    "CartesianSolver",
    "RadialSolver",
    "apply_vector_field",
    "energies",
    "images_solution",
    "step_cartesian",
    "step_radial",
]
