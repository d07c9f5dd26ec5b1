"""Command-line entry point: ``nullwave <subcommand> ...``.

Exit codes: 0 success / check passed, 1 check failed, 2 bad input
(unreadable or malformed config, scenario validation failure, bad flags).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

from . import __version__, constants
from .config import ConfigError, Scenario, config_hash, load

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

SUITES = ("decomposition", "kirchhoff", "commutators", "nullform-identity", "klainerman-sobolev")


def _constants_epilog() -> str:
    lines = ["tolerances and thresholds (nullwave.constants):"]
    for name, value in constants.table():
        lines.append(f"  {name:<28} {value!r}")
    return "\n".join(lines)


def _resolve_workers(flag: int | None) -> int:
    env = os.environ.get("NULLWAVE_WORKERS")
    if env:
        return max(1, int(env))
    if flag:
        return max(1, flag)
    return os.cpu_count() or 1


def _apply_overrides(scn: Scenario, t_max: float | None, scale: float) -> Scenario:
    grid = scn.grid
    changes = {}
    if scale != 1.0:
        changes["dr"] = grid.dr / scale
        changes["dx"] = grid.dx / scale
        if grid.dt is not None:
            changes["dt"] = grid.dt / scale
    if t_max is not None:
        changes["t_max"] = t_max
        need = scn.data.outer_radius + scn.system.c_max * t_max + constants.PADDING_MARGIN + 1.0
        if grid.mode == "radial" and grid.r_max < need:
            changes["r_max"] = need
    return scn.with_grid(**changes) if changes else scn


def _load(args) -> Scenario:
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    scn = load(args.config)
    return _apply_overrides(scn, args.t_max, args.resolution_scale)


def _write_manifest(out: Path, scn: Scenario | None, args, files: list[str], wall: float, extra=None) -> None:
    manifest = {
        "manifest_version": 1,
        "tool_version": __version__,
        "command": args.command,
        "config_hash": config_hash(scn) if scn is not None else None,
        "grid": asdict(scn.grid) if scn is not None else None,
        "speeds": list(scn.system.speeds) if scn is not None else None,
        "sponge": bool(scn.grid.sponge_width > 0) if scn is not None else False,
        "seed": args.seed,
        "wall_time_s": round(wall, 3),
        "outputs": files,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- subcommands --------------------------------------------------------------------


def cmd_check_null(args) -> int:
    from .nonlinearity import check_null_condition, split_quadratic

    scn = _load(args)
    res = check_null_condition(scn.system)
    split = split_quadratic(scn.system)
    for i, comp in enumerate(split.components):
        w = res.per_component[i]
        line = (
            f"component {i}: {'holds' if w is None else 'violated'}; "
            f"Q0={len(comp.A)} Qab={len(comp.B)} R_I={len(comp.r_I)} R_II={len(comp.r_II)} "
            f"residual^2={comp.residual_norm2}"
        )
        if w is not None:
            line += "; " + w.describe().split(": ", 1)[1]
        print(line)
    return EXIT_OK if res.holds else EXIT_FAIL


def cmd_run(args) -> int:
    from .runner import run_scenario, write_outputs

    scn = _load(args)
    out = Path(args.out)
    t0 = time.perf_counter()
    res = run_scenario(scn, seed=args.seed)
    files = write_outputs(res, out)
    verdict = f"blow-up at t = {res.lifespan:g}" if res.blowup_flag else f"survived to t = {scn.grid.t_max:g}"
    _write_manifest(out, scn, args, files, time.perf_counter() - t0, {"verdict": verdict, "peak_u": res.peak_u})
    print(f"{verdict}; sup|u| = {res.peak_u:.6g}; wrote {', '.join(files)} to {out}")
    return EXIT_OK


def cmd_sweep_lifespan(args) -> int:
    from .diagnostics import sweep_lifespan

    scn = _load(args)
    eps = args.eps or list(scn.diagnostics.epsilons) or list(constants.LIFESPAN_EPSILONS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    sweep = sweep_lifespan(scn, eps, workers=_resolve_workers(args.workers), seed=args.seed)
    with open(out / "lifespan.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "lifespan", "survived", "peak_u", "error"])
        for e, T, p, err in zip(sweep.epsilons, sweep.lifespans, sweep.peaks, sweep.errors):
            w.writerow([repr(e), "" if T is None else repr(T), int(T is None and not err), repr(p), err])
    for e, T, p in zip(sweep.epsilons, sweep.lifespans, sweep.peaks):
        state = f"T = {T:g}" if T is not None else f"survived to {sweep.t_max:g}"
        print(f"eps = {e:g}: {state}, sup|u| = {p:.6g}")
    extra = {"epsilons": list(sweep.epsilons)}
    if sweep.correlation is not None:
        print(f"log T = {sweep.intercept:.4g} + {sweep.slope:.4g} / eps, correlation {sweep.correlation:.4f}")
        extra.update(slope=sweep.slope, intercept=sweep.intercept, correlation=sweep.correlation)
    else:
        print(f"fewer than 3 blow-ups ({len(sweep.blowups)}); no regression")
    _write_manifest(out, scn, args, ["lifespan.csv"], time.perf_counter() - t0, extra)
    return EXIT_OK


def _decomposition_suite(args) -> int:
    from .decomposition import reference_homogeneous, reference_inhomogeneous

    dr = constants.DECOMP_DEFAULT_DR / args.resolution_scale
    ok = True
    rows = []
    for name, fn in (("homogeneous", reference_homogeneous), ("inhomogeneous", reference_inhomogeneous)):
        rep = fn(dr)
        ok &= rep.passed
        print(f"decomposition {name}: dr = {dr:g}, max residual {rep.max_residual:.3e}, "
              f"tolerance {rep.tolerance:.3e} -> {'pass' if rep.passed else 'FAIL'}")
        for row in rep.rows():
            rows.append({"identity": name, **row})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "decomposition.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return EXIT_OK if ok else EXIT_FAIL


def _kirchhoff_suite(args) -> int:
    from .diagnostics import kirchhoff_study
    from .freefield import DEFAULT_QUADRATURE, SphereQuadrature

    base = DEFAULT_QUADRATURE
    quad = SphereQuadrature(
        max(2, round(base.n_polar * args.resolution_scale)), max(4, round(base.n_azimuth * args.resolution_scale))
    )
    coarse = SphereQuadrature(max(2, quad.n_polar // 2), max(4, quad.n_azimuth // 2))
    (_, e_coarse), (_, e) = kirchhoff_study(seed=args.seed, quads=[coarse, quad])
    ok = e <= constants.KIRCHHOFF_REL_TOL and e < e_coarse
    print(f"kirchhoff: {quad.n_polar}x{quad.n_azimuth} rel err {e:.3e} (half nodes {e_coarse:.3e}), "
          f"tolerance {constants.KIRCHHOFF_REL_TOL:g} -> {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def _commutator_suite(args) -> int:
    from .diagnostics import commutator_residuals

    res = commutator_residuals(seed=args.seed)
    worst = max(res.values())
    ok = worst <= constants.COMMUTATOR_ABS_TOL
    for z, v in res.items():
        print(f"[Z_{z}, box_c] residual {v:.3e}")
    print(f"commutators: max {worst:.3e}, tolerance {constants.COMMUTATOR_ABS_TOL:g} -> {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def _identity_suite(args) -> int:
    from .diagnostics import q0_identity_study

    study = q0_identity_study()
    ok = study.order >= constants.IDENTITY_MIN_ORDER
    for h, r in zip(study.steps, study.residuals):
        print(f"h = {h:g}: residual {r:.3e}")
    print(f"nullform-identity: observed order {study.order:.3f}, required {constants.IDENTITY_MIN_ORDER:g} -> "
          f"{'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def _ks_suite(args) -> int:
    from .diagnostics import check_klainerman_sobolev

    rep = check_klainerman_sobolev()
    for row in rep.rows:
        print(f"{row.name:<24} lhs {row.lhs:.4e} rhs {row.rhs:.4e} ratio {row.ratio:.4e}")
    print(f"klainerman-sobolev: max ratio {rep.max_ratio:.4e} (bound {rep.bound:g}), scale error "
          f"{rep.scale_error:.1e} -> {'pass' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_FAIL


_SUITE_FUNCS = {
    "decomposition": _decomposition_suite,
    "kirchhoff": _kirchhoff_suite,
    "commutators": _commutator_suite,
    "nullform-identity": _identity_suite,
    "klainerman-sobolev": _ks_suite,
}


def cmd_verify(args) -> int:
    return _SUITE_FUNCS[args.suite](args)


def cmd_verify_decomposition(args) -> int:
    return _decomposition_suite(args)


def cmd_fit_local_decay(args) -> int:
    from .diagnostics import fit_local_energy_decay
    from .runner import run_scenario

    scn = _load(args)
    b = args.radius
    if b not in scn.diagnostics.local_radii:
        scn = replace(scn, diagnostics=replace(scn.diagnostics, local_radii=(*scn.diagnostics.local_radii, b)))
    res = run_scenario(scn, seed=args.seed)
    fit = fit_local_energy_decay(res, b)
    if fit.degenerate:
        print(f"E_b (b = {b:g}) fit degenerate on [{fit.window[0]:g}, {fit.window[1]:g}]: {fit.reason}")
        return EXIT_FAIL
    ok = fit.rate > 0 and fit.goodness >= constants.LED_MIN_GOODNESS
    print(f"E_b (b = {b:g}) ~ exp(-sigma t) on [{fit.window[0]:g}, {fit.window[1]:g}]: sigma = {fit.rate:.6g}, "
          f"R^2 = {fit.goodness:.6f} ({fit.n_points} samples) -> {'pass' if ok else 'FAIL'}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "local_decay.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", f"E_b({b:g})", "fit"])
            for t, E in zip(res.times, res.local_energy[b]):
                w.writerow([repr(float(t)), repr(float(E)), repr(math.exp(fit.intercept - fit.rate * t))])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_norms(args) -> int:
    from .weights import data_norm_B

    scn = _load(args)
    for k in range(args.k + 1):
        print(f"B({args.rho:g},{k}) = {data_norm_B(args.rho, k, scn.data):.6g}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario TOML file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, default=None, help="worker processes (NULLWAVE_WORKERS overrides)")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled probe sets")
    common.add_argument("--t-max", type=float, default=None, help="override grid.t_max (r_max is padded to match)")
    common.add_argument("--resolution-scale", type=float, default=1.0,
                        help="divide grid spacings by this factor (verify suites: refine quadrature/grids)")

    p = argparse.ArgumentParser(
        prog="nullwave",
        description="Multi-speed semilinear wave systems outside the unit ball: null-condition checks, "
        "exterior solvers, decay diagnostics and identity verifiers.",
        epilog=_constants_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"nullwave {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("check-null", parents=[common], help="decide the null condition for the configured system")
    sp = sub.add_parser("run", parents=[common], help="run a scenario and write CSV time series")
    sp.set_defaults(out="nullwave-out")
    sp = sub.add_parser("sweep-lifespan", parents=[common], help="lifespans over an amplitude list")
    sp.add_argument("--eps", type=float, nargs="+", help="amplitudes (default: diagnostics.epsilons)")
    sp.set_defaults(out="nullwave-sweep")
    sub.add_parser("verify-decomposition", parents=[common], help="check the cut-off decomposition identities")
    sp = sub.add_parser("verify", parents=[common], help="run a verification suite")
    sp.add_argument("suite", choices=SUITES)
    sp = sub.add_parser("fit-local-decay", parents=[common], help="fit exponential decay of the local energy")
    sp.add_argument("--radius", type=float, default=constants.LED_RADIUS, help="ball radius b")
    sp = sub.add_parser("norms", parents=[common], help="data norms B(rho, k)")
    sp.add_argument("--rho", type=float, default=2.0)
    sp.add_argument("--k", type=int, default=1)
    return p


_COMMANDS = {
    "check-null": cmd_check_null,
    "run": cmd_run,
    "sweep-lifespan": cmd_sweep_lifespan,
    "verify-decomposition": cmd_verify_decomposition,
    "verify": cmd_verify,
    "fit-local-decay": cmd_fit_local_decay,
    "norms": cmd_norms,
}


def main(argv: list[str] | None = None) -> int:
    from .runner import ScenarioError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    if args.resolution_scale <= 0:
        print("error: --resolution-scale must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
