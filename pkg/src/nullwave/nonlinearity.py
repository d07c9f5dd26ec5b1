"""Null forms, the exact null-condition decision and the speed-pattern split.

Quadratic parts are handled in a canonical monomial basis: the key
``((j, a), (k, b))`` with ``(j, a) <= (k, b)`` stands for the product
``(d_a u_j)(d_b u_k)``, slot 0 being the time derivative. All algebra on
these keys uses :class:`fractions.Fraction`, so the null-condition decision
and the split are exact for any finite float input.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import U_SLOT, WaveSystem

Key = tuple[tuple[int, int], tuple[int, int]]
Tensor = dict[Key, Fraction]


def q0(v_grad, w_grad, c: float):
    """Q0(v, w; c) = v_t w_t - c^2 grad v . grad w; gradients on the last axis as (t, x1, x2, x3)."""
    v = np.asarray(v_grad, dtype=float)
    w = np.asarray(w_grad, dtype=float)
    return v[..., 0] * w[..., 0] - c * c * np.sum(v[..., 1:4] * w[..., 1:4], axis=-1)


def qab(v_grad, w_grad, a: int, b: int):
    """Q_ab(v, w) = d_a v d_b w - d_b v d_a w for 0 <= a < b <= 3."""
    if not (0 <= a < b <= 3):
        raise ValueError(f"Q_ab needs 0 <= a < b <= 3, got a={a}, b={b}")
    v = np.asarray(v_grad, dtype=float)
    w = np.asarray(w_grad, dtype=float)
    return v[..., a] * w[..., b] - v[..., b] * w[..., a]


def _key(j: int, a: int, k: int, b: int) -> Key:
    p, q = (j, a), (k, b)
    return (p, q) if p <= q else (q, p)


def _add(t: Tensor, key: Key, val: Fraction) -> None:
    v = t.get(key, Fraction(0)) + val
    if v:
        t[key] = v
    else:
        t.pop(key, None)


def canonical_quadratic(sys: WaveSystem) -> list[Tensor]:
    """Merge every quadratic term of ``sys`` into one exact tensor per equation."""
    out: list[Tensor] = [dict() for _ in range(sys.n_components)]
    nl = sys.nonlinearity
    for t in nl.q0:
        c2 = Fraction(sys.speeds[t.component]) ** 2
        coef = Fraction(t.coef)
        _add(out[t.component], _key(t.j, 0, t.k, 0), coef)
        for l in (1, 2, 3):
            _add(out[t.component], _key(t.j, l, t.k, l), -c2 * coef)
    for t in nl.qab:
        coef = Fraction(t.coef)
        _add(out[t.component], _key(t.j, t.a, t.k, t.b), coef)
        _add(out[t.component], _key(t.j, t.b, t.k, t.a), -coef)
    for t in nl.quadratic:
        _add(out[t.component], _key(t.j, t.a, t.k, t.b), Fraction(t.coef))
    return out


# -- exact null-condition decision ------------------------------------------


@dataclass(frozen=True)
class ConeVector:
    """A point X of the cone X0^2 = c^2 |X'|^2, held in exact arithmetic."""

    X: tuple[Fraction, Fraction, Fraction, Fraction]
    speed: Fraction

    def __post_init__(self):
        x0, *xs = self.X
        if x0 * x0 != self.speed**2 * sum(v * v for v in xs):
            raise ValueError(f"{self.X} is not on the cone of speed {self.speed}")

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.X])


@dataclass(frozen=True)
class NullWitness:
    """Data exposing a violation: F_i(lambda, V(mu, X), W(nu, X)) = value != 0."""

    component: int
    lam: tuple[Fraction, ...]
    mu: tuple[Fraction, ...]
    nu: tuple[Fraction, ...]
    X: ConeVector
    value: Fraction
    pair: tuple[int, int]

    def describe(self) -> str:
        fmt = lambda v: "(" + ",".join(str(x) for x in v) + ")"  # noqa: E731
        return (
            f"component {self.component}: witness X={fmt(self.X.X)} c={self.X.speed} "
            f"lambda={fmt(self.lam)} mu={fmt(self.mu)} nu={fmt(self.nu)} "
            f"pair={self.pair} value={self.value}"
        )


@dataclass(frozen=True)
class NullResult:
    holds: bool
    witness: NullWitness | None = None
    per_component: tuple[NullWitness | None, ...] = ()

    def __bool__(self) -> bool:
        return self.holds


def _pair_form(t: Tensor, j: int, k: int) -> list[list[Fraction]]:
    """Coefficients p[a][b] of X_a X_b in the mu_j mu_k coefficient of F(V(mu, X))."""
    p = [[Fraction(0)] * 4 for _ in range(4)]
    for ((jj, a), (kk, b)), coef in t.items():
        if (jj, kk) == (j, k):
            p[a][b] += coef
    return p


def _reduced_form(p: list[list[Fraction]], c2: Fraction) -> dict[tuple[int, int], Fraction]:
    """Reduce sum p_ab X_a X_b modulo X0^2 - c^2 |X'|^2; keys (a, b) with a <= b."""
    red: dict[tuple[int, int], Fraction] = {}
    for a in range(4):
        for b in range(a, 4):
            red[(a, b)] = p[a][b] + (p[b][a] if a != b else 0)
    x00 = red.pop((0, 0))
    for l in (1, 2, 3):
        red[(l, l)] += c2 * x00
    return {k: v for k, v in red.items() if v}


def _eval_form(p, X) -> Fraction:
    return sum((p[a][b] * X[a] * X[b] for a in range(4) for b in range(4)), Fraction(0))


def _cone_candidates(c: Fraction):
    three, four, five = Fraction(3), Fraction(4), Fraction(5)
    dirs = [
        (1, 0, 0),
        (0, 1, 0),
        (0, 0, 1),
        (three / five, four / five, 0),
        (three / five, 0, four / five),
        (0, three / five, four / five),
    ]
    for sign in (1, -1):
        for d in dirs:
            yield ConeVector((sign * c, *(Fraction(v) for v in d)), c)


def _evaluate_exact(t: Tensor, grads: dict[int, tuple[Fraction, ...]]) -> Fraction:
    total = Fraction(0)
    for ((j, a), (k, b)), coef in t.items():
        if j in grads and k in grads:
            total += coef * grads[j][a] * grads[k][b]
    return total


def _component_witness(sys: WaveSystem, i: int, t: Tensor) -> NullWitness | None:
    lam_set = sys.same_speed(i)
    c = Fraction(sys.speeds[i])
    c2 = c * c
    for j, k in itertools.combinations_with_replacement(lam_set, 2):
        p = _pair_form(t, j, k)
        if not _reduced_form(p, c2):
            continue
        for X in _cone_candidates(c):
            if _eval_form(p, X.X) == 0:
                continue
            e = lambda m: tuple(Fraction(int(n == m)) for n in range(sys.n_components))  # noqa: E731
            trials = [e(j)] if j == k else [
                tuple(x + y for x, y in zip(e(j), e(k))),
                tuple(x - y for x, y in zip(e(j), e(k))),
            ]
            for mu in trials:
                grads = {m: tuple(mu[m] * x for x in X.X) for m in range(sys.n_components) if mu[m]}
                value = _evaluate_exact(t, grads)
                if value:
                    return NullWitness(i, mu, mu, mu, X, value, (j, k))
        raise AssertionError("reduced form nonzero but no candidate cone point exposes it")
    return None


def check_null_condition(sys: WaveSystem) -> NullResult:
    """Decide exactly whether the quadratic part vanishes on every matching-speed cone.

    Only the first-derivative slots enter; slots for second derivatives are
    not modelled and therefore impose no condition.
    """
    tensors = canonical_quadratic(sys)
    found = tuple(_component_witness(sys, i, t) for i, t in enumerate(tensors))
    first = next((w for w in found if w is not None), None)
    return NullResult(first is None, first, found)


# -- split of the quadratic part --------------------------------------------


@dataclass
class ComponentSplit:
    A: dict[tuple[int, int], Fraction] = field(default_factory=dict)
    B: dict[tuple[int, int, int, int], Fraction] = field(default_factory=dict)
    r_I: Tensor = field(default_factory=dict)
    r_II: Tensor = field(default_factory=dict)
    residual: Tensor = field(default_factory=dict)

    @property
    def residual_norm2(self) -> Fraction:
        return sum((v * v for v in self.residual.values()), Fraction(0))


@dataclass
class QuadraticSplit:
    speeds: tuple[float, ...]
    components: list[ComponentSplit]

    @property
    def null_condition_holds(self) -> bool:
        return all(not cs.residual for cs in self.components)

    def recompose(self, i: int) -> Tensor:
        cs = self.components[i]
        c2 = Fraction(self.speeds[i]) ** 2
        out: Tensor = {}
        for (j, k), A in cs.A.items():
            _add(out, _key(j, 0, k, 0), A)
            for l in (1, 2, 3):
                _add(out, _key(j, l, k, l), -c2 * A)
        for (j, k, a, b), B in cs.B.items():
            _add(out, _key(j, a, k, b), B)
            _add(out, _key(j, b, k, a), -B)
        for part in (cs.r_I, cs.r_II, cs.residual):
            for key, v in part.items():
                _add(out, key, v)
        return out


def split_quadratic(sys: WaveSystem) -> QuadraticSplit:
    """Partition by speed pattern and project the same-speed block onto the null forms.

    Within the block the Q0 and Q_ab patterns are mutually orthogonal in the
    Frobenius inner product on coefficient arrays, so the least-squares
    coefficients are plain inner-product quotients.
    """
    comps = []
    for i, t in enumerate(canonical_quadratic(sys)):
        cs = ComponentSplit()
        ci = sys.speeds[i]
        c2 = Fraction(ci) ** 2
        same: dict[tuple[int, int], Tensor] = {}
        for key, coef in t.items():
            (j, _), (k, _) = key
            if sys.speeds[j] != sys.speeds[k]:
                cs.r_I[key] = coef
            elif sys.speeds[j] != ci:
                cs.r_II[key] = coef
            else:
                same.setdefault((j, k), {})[key] = coef
        for (j, k), block in same.items():
            get = lambda a, b: block.get(_key(j, a, k, b), Fraction(0))  # noqa: E731
            A = (get(0, 0) - c2 * sum(get(l, l) for l in (1, 2, 3))) / (1 + 3 * c2 * c2)
            if j != k:
                # Q_ab(u_j, u_j) vanishes, so only distinct pairs carry B
                for a, b in itertools.combinations(range(4), 2):
                    B = (get(a, b) - get(b, a)) / 2
                    if B:
                        cs.B[(j, k, a, b)] = B
            if A:
                cs.A[(j, k)] = A
            res = dict(block)
            if A:
                _add(res, _key(j, 0, k, 0), -A)
                for l in (1, 2, 3):
                    _add(res, _key(j, l, k, l), c2 * A)
            for (jj, kk, a, b), B in cs.B.items():
                if (jj, kk) == (j, k):
                    _add(res, _key(j, a, k, b), -B)
                    _add(res, _key(j, b, k, a), B)
            cs.residual.update(res)
        comps.append(cs)
    return QuadraticSplit(sys.speeds, comps)


# -- pointwise evaluation ---------------------------------------------------


@functools.lru_cache(maxsize=64)
def _compiled(sys: WaveSystem):
    quad = [
        [(j, a, k, b, float(v)) for ((j, a), (k, b)), v in sorted(t.items())]
        for t in canonical_quadratic(sys)
    ]
    cubic = [[] for _ in range(sys.n_components)]
    for term in sys.nonlinearity.cubic:
        cubic[term.component].append((term.factors, term.coef))
    return quad, cubic


def evaluate_nonlinearity(sys: WaveSystem, u, du) -> np.ndarray:
    """F(u, du) for every equation.

    ``u`` has shape (N, *S) and ``du`` shape (N, 4, *S) with derivative
    slots (t, x1, x2, x3). Returns shape (N, *S).
    """
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    quad, cubic = _compiled(sys)
    out = np.zeros_like(u)
    for i in range(sys.n_components):
        acc = out[i]
        for j, a, k, b, coef in quad[i]:
            acc += coef * du[j, a] * du[k, b]
        for factors, coef in cubic[i]:
            prod = coef
            for comp, slot in factors:
                prod = prod * (u[comp] if slot == U_SLOT else du[comp, slot])
            acc += prod
    return out


# -- radial-tangential identity -------------------------------------------


def q0_identity_residual(v, w, c: float, points, h: float) -> np.ndarray:
    """Q0(v,w;c) - (D+v D-w + D-v D+w)/2 + (c^2/r^2) sum_{i<j} (Omega_ij v)(Omega_ij w).

    ``v`` and ``w`` are callables (t, x); ``points`` holds (t, x) pairs with
    x != 0. Q0 uses Cartesian centred differences, D+/- differences along
    x/|x| and the rotations differences along their orbits, all with step h,
    so the residual of the exact identity is O(h^2).
    """
    from .exterior.vectorfields import apply_dpm, apply_z

    d = {a: (apply_z(v, a, h), apply_z(w, a, h)) for a in range(4)}
    dp = (apply_dpm(v, c, +1, h), apply_dpm(w, c, +1, h))
    dm = (apply_dpm(v, c, -1, h), apply_dpm(w, c, -1, h))
    rot = [(apply_z(v, z, h, orbit=True), apply_z(w, z, h, orbit=True)) for z in (4, 5, 6)]
    out = []
    for t, x in points:
        x = np.asarray(x, dtype=float)
        r2 = float(np.sum(x * x))
        gv = np.array([float(d[a][0](t, x)) for a in range(4)])
        gw = np.array([float(d[a][1](t, x)) for a in range(4)])
        lhs = q0(gv, gw, c)
        rhs = 0.5 * (dp[0](t, x) * dm[1](t, x) + dm[0](t, x) * dp[1](t, x))
        rhs -= c * c / r2 * sum(rv(t, x) * rw(t, x) for rv, rw in rot)
        out.append(float(lhs - rhs))
    return np.array(out)


# -- radial compatibility ---------------------------------------------------


def radial_compatibility(sys: WaveSystem) -> tuple[list[str], list[str]]:
    """Errors and warnings for running ``sys`` on radially symmetric fields.

    A term is admissible when it is rotation invariant: spatial derivatives may
    enter only through grad u_j . grad u_k or through Q_lm with l, m >= 1. The
    latter vanish identically on radial fields and are reported as inert.
    """
    errors: list[str] = []
    warnings: list[str] = []
    for i, t in enumerate(canonical_quadratic(sys)):
        pairs = sorted({(j, k) for ((j, _), (k, _)) in t})
        for j, k in pairs:
            p = _pair_form(t, j, k)
            if j == k:
                sym = [[p[a][b] if a == b else (p[min(a, b)][max(a, b)]) / 2 for b in range(4)] for a in range(4)]
                anti_spatial = False
            else:
                sym = [[(p[a][b] + p[b][a]) / 2 for b in range(4)] for a in range(4)]
                anti_spatial = any(p[a][b] != p[b][a] for a in (1, 2, 3) for b in (1, 2, 3))
            if any(p[0][l] or p[l][0] for l in (1, 2, 3)):
                errors.append(f"equation {i}: time-space mixed product of u_{j}, u_{k} is not rotation invariant")
            if any(sym[a][b] for a in (1, 2, 3) for b in (1, 2, 3) if a != b) or len(
                {sym[l][l] for l in (1, 2, 3)}
            ) > 1:
                errors.append(f"equation {i}: spatial block for u_{j}, u_{k} is not a multiple of grad . grad")
            if anti_spatial:
                warnings.append(f"equation {i}: Q_lm(u_{j}, u_{k}) terms vanish on radial fields (inert)")
    for term in sys.nonlinearity.cubic:
        if any(slot >= 1 for _, slot in term.factors):
            errors.append(f"equation {term.component}: cubic term with spatial derivative is not supported radially")
    return errors, warnings
