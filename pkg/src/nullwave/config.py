"""Scenario configuration: TOML parse/emit, strict key checking and a stable hash.

Layout::

    [system]
    speeds = [1.0]

    [nonlinearity]
    q0 = [{component = 0, j = 0, k = 0, coef = 1.0}]
    qab = [{component = 0, j = 0, k = 0, a = 0, b = 1, coef = 1.0}]
    quadratic = [{component = 0, j = 0, a = 0, k = 0, b = 0, coef = 1.0}]
    cubic = [{component = 0, factors = ["u0", "d0u0", "d1u0"], coef = 1.0}]

    [data]
    amplitude = 0.1
    support_inner_radius = 2.0
    [[data.components]]
    phi = {kind = "radial_bump", radius = 3.0, half_width = 0.5}
    psi = {kind = "outgoing", base = {kind = "radial_bump", radius = 3.0, half_width = 0.5}}

    [grid]
    mode = "radial"
    t_max = 50.0
    dr = 0.05
    r_max = 60.0

    [diagnostics]
    sample_every = 10
    local_radii = [4.0]
    weights = ["W(1,1)", "phi(0)"]

A cubic factor ``"uJ"`` is u_J and ``"dAuJ"`` is d_A u_J. Every table is
checked against its allowed keys; unknown keys raise :class:`ConfigError`.
"""

from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import tomli_w

from .model import (
    U_SLOT,
    CubicTerm,
    Grid,
    InitialData,
    NonlinearitySpec,
    Q0Term,
    QabTerm,
    QuadraticTerm,
    WaveSystem,
)
from .profiles import profile_from_dict, profile_to_dict

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class DiagnosticsConfig:
    """What a run records.

    sample_every:
        Diagnostic sampling stride in global time steps.
    local_radii:
        Radii b of the local energies E_b.
    weights:
        Weighted sup norms by name, e.g. ``"W(1,1)"``, ``"Wc(0,1,2)"``,
        ``"phi(0)"``. phi weights multiply |u|, W and Wc weights multiply |du|.
    monitor_k:
        Order of the monitor e_k (0 or 1); -1 disables it.
    rays:
        Start radii r0 of outgoing rays r = r0 + c t along which D+ u and du
        are recorded.
    probes:
        Number of random probe radii (drawn from the run seed) whose u values
        are written to the probe table.
    snapshot_every:
        Snapshot stride in global steps; 0 disables snapshots.
    epsilons:
        Amplitudes for lifespan sweeps.
    """

    sample_every: int = 10
    local_radii: tuple[float, ...] = (4.0,)
    weights: tuple[str, ...] = ()
    monitor_k: int = 0
    rays: tuple[float, ...] = ()
    probes: int = 0
    snapshot_every: int = 0
    epsilons: tuple[float, ...] = ()

    def __post_init__(self):
        if self.sample_every < 1:
            raise ConfigError("sample_every must be at least 1")
        if self.monitor_k not in (-1, 0, 1):
            raise ConfigError("monitor_k must be -1, 0 or 1")
        if self.probes < 0 or self.snapshot_every < 0:
            raise ConfigError("probes and snapshot_every must be non-negative")


@dataclass(frozen=True)
class Scenario:
    system: WaveSystem
    data: InitialData
    grid: Grid
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)

    def with_amplitude(self, eps: float) -> Scenario:
        return replace(self, data=self.data.with_amplitude(eps))

    def with_grid(self, **changes) -> Scenario:
        return replace(self, grid=replace(self.grid, **changes))


# -- helpers ---------------------------------------------------------------------

_FACTOR = re.compile(r"^(?:d([0-3]))?u(\d+)$")


def _check_keys(table: dict, allowed: set[str], where: str, required: set[str] = frozenset()) -> None:
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")
    missing = set(required) - set(table)
    if missing:
        raise ConfigError(f"missing keys in [{where}]: {sorted(missing)}")


def parse_factor(text: str) -> tuple[int, int]:
    m = _FACTOR.match(text.strip())
    if not m:
        raise ConfigError(f"bad cubic factor {text!r}; expected 'uJ' or 'dAuJ'")
    slot = U_SLOT if m.group(1) is None else int(m.group(1))
    return int(m.group(2)), slot


def format_factor(factor: tuple[int, int]) -> str:
    comp, slot = factor
    return f"u{comp}" if slot == U_SLOT else f"d{slot}u{comp}"


_TERM_KEYS = {
    "q0": ({"component", "j", "k", "coef"}, Q0Term),
    "qab": ({"component", "j", "k", "a", "b", "coef"}, QabTerm),
    "quadratic": ({"component", "j", "a", "k", "b", "coef"}, QuadraticTerm),
}


def _parse_nonlinearity(table: dict) -> NonlinearitySpec:
    _check_keys(table, {"q0", "qab", "quadratic", "cubic"}, "nonlinearity")
    out = {}
    for name, (keys, cls) in _TERM_KEYS.items():
        terms = []
        for k, entry in enumerate(table.get(name, [])):
            _check_keys(entry, keys, f"nonlinearity.{name}[{k}]", keys - {"coef"})
            args = {key: int(entry[key]) for key in keys - {"coef"}}
            terms.append(cls(coef=float(entry.get("coef", 1.0)), **args))
        out[name] = tuple(terms)
    cubic = []
    for k, entry in enumerate(table.get("cubic", [])):
        _check_keys(entry, {"component", "factors", "coef"}, f"nonlinearity.cubic[{k}]", {"component", "factors"})
        facs = tuple(parse_factor(f) for f in entry["factors"])
        if len(facs) != 3:
            raise ConfigError("cubic terms need exactly three factors")
        cubic.append(CubicTerm(int(entry["component"]), facs, float(entry.get("coef", 1.0))))
    return NonlinearitySpec(cubic=tuple(cubic), **out)


def _emit_nonlinearity(nl: NonlinearitySpec) -> dict:
    out: dict = {}
    for name in ("q0", "qab", "quadratic"):
        terms = getattr(nl, name)
        if terms:
            out[name] = [asdict(t) for t in terms]
    if nl.cubic:
        out["cubic"] = [
            {"component": t.component, "factors": [format_factor(f) for f in t.factors], "coef": t.coef}
            for t in nl.cubic
        ]
    return out


_GRID_KEYS = {f.name for f in fields(Grid)}
_DIAG_KEYS = {f.name for f in fields(DiagnosticsConfig)}


def scenario_from_dict(d: dict) -> Scenario:
    """Build a scenario from nested tables; raises :class:`ConfigError` on any problem."""
    _check_keys(d, {"system", "nonlinearity", "data", "grid", "diagnostics"}, "root", {"system", "data", "grid"})
    try:
        _check_keys(d["system"], {"speeds"}, "system", {"speeds"})
        nl = _parse_nonlinearity(d.get("nonlinearity", {}))
        system = WaveSystem(tuple(float(c) for c in d["system"]["speeds"]), nl)

        dd = d["data"]
        _check_keys(dd, {"amplitude", "support_inner_radius", "components"}, "data", {"amplitude", "components"})
        comps = dd["components"]
        if len(comps) != system.n_components:
            raise ConfigError(f"[data] lists {len(comps)} components, system has {system.n_components}")
        phis, psis = [], []
        for i, comp in enumerate(comps):
            _check_keys(comp, {"phi", "psi"}, f"data.components[{i}]")
            c = system.speeds[i]
            phis.append(profile_from_dict(comp["phi"], speed=c) if "phi" in comp else None)
            psis.append(profile_from_dict(comp["psi"], speed=c) if "psi" in comp else None)
        profiles = [p for p in phis + psis if p is not None]
        inner = dd.get("support_inner_radius", min((p.inner_radius for p in profiles), default=2.0))
        data = InitialData(float(dd["amplitude"]), tuple(phis), tuple(psis), float(inner))

        _check_keys(d["grid"], _GRID_KEYS, "grid")
        grid = Grid(**d["grid"])

        diag = dict(d.get("diagnostics", {}))
        _check_keys(diag, _DIAG_KEYS, "diagnostics")
        for key in ("local_radii", "weights", "rays", "epsilons"):
            if key in diag:
                diag[key] = tuple(diag[key])
        diagnostics = DiagnosticsConfig(**diag)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return Scenario(system, data, grid, diagnostics)


def scenario_to_dict(s: Scenario) -> dict:
    comps = []
    for ph, ps in zip(s.data.phi, s.data.psi):
        entry = {}
        if ph is not None:
            entry["phi"] = profile_to_dict(ph)
        if ps is not None:
            entry["psi"] = profile_to_dict(ps)
        comps.append(entry)
    grid = {k: v for k, v in asdict(s.grid).items() if v is not None}
    diag = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(s.diagnostics).items()}
    return {
        "system": {"speeds": list(s.system.speeds)},
        "nonlinearity": _emit_nonlinearity(s.system.nonlinearity),
        "data": {
            "amplitude": s.data.amplitude,
            "support_inner_radius": s.data.support_inner_radius,
            "components": comps,
        },
        "grid": grid,
        "diagnostics": diag,
    }


def parse_toml(text: str) -> Scenario:
    try:
        d = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from exc
    return scenario_from_dict(d)


def emit_toml(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


def load(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_toml(text)


def config_hash(s: Scenario) -> str:
    """SHA-256 of the canonical JSON form (sorted keys), independent of table order in the file."""
    blob = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
