"""Batch command-line interface.

Subcommands:
    trace       trace a wall's level set and export the curve as CSV
    phase       solve an eikonal phase and export a debug table
    pack        build a wavepacket field and dump it as a binary snapshot
    solve       run a PDE solver from an initial binary field
    experiment  run one of E1..E6 / props from a config file
    report      aggregate report CSVs; exit 1 if any criterion failed

Usage errors exit 2 (argparse), failed acceptance criteria exit 1,
success exits 0.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import pde
from .config import (
    ExperimentConfig,
    branch_from_config,
    envelope_from_config,
    load_config,
    model_from_config,
    wall_from_config,
)
from .eikonal import solve_phase
from .errors import ConfigError, WallwaveError
from .experiments import run_experiment
from .fields import GridSpec2D, read_field, write_field
from .geometry import RectificationMap, trace_level_set
from .pde import DiracSolver, KGSolver
from .report import all_passed, read_rows, write_rows
from .spectral import Model
from .wavepacket import (
    RealEnvelope,
    WavepacketSpec,
    assemble_pair_rectified,
    assemble_rectified,
    evaluate_physical,
    relativistic_mode,
    relativistic_pair,
)


def _add_common(p):
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    p.add_argument("--seed", type=int, default=None, help="random seed override")


def _load(args):
    cfg = load_config(args.config)
    if args.out is not None:
        cfg.out_dir = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    if args.seed is not None:
        cfg.seed = args.seed
    pde.set_threads(cfg.threads)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _curve_of(cfg):
    wall = wall_from_config(cfg.section("wall"))
    tr = cfg.section("trace")
    seed_pt = tr.get("seed")
    if seed_pt is None:
        seed_pt = (wall.params["radius"], 0.0) if wall.kind == "circle" else (0.0, 0.0)
    return wall, trace_level_set(
        wall, tuple(seed_pt), step=float(tr.get("step", 0.01)),
        max_length=float(tr.get("max_length", 200.0)),
    )


def cmd_trace(args):
    cfg, out = _load(args)
    wall, curve = _curve_of(cfg)
    path = out / "curve.csv"
    curve.to_csv(path)
    total = curve.total_length if curve.closed else (curve.x[-1] - curve.x[0])
    print(f"traced {'closed' if curve.closed else 'open'} curve, "
          f"{len(curve.x)} samples, length {total:.9g} -> {path}")
    return 0


def cmd_phase(args):
    cfg, out = _load(args)
    wall, curve = _curve_of(cfg)
    model = model_from_config(cfg.section("model"))
    branch = branch_from_config(cfg.section("branch"))
    pk = cfg.section("packet")
    env = envelope_from_config(cfg.section("envelope"))
    ph = solve_phase(model, branch, curve, float(pk.get("x0", 0.0)), env.support)
    path = out / "phase.csv"
    xs = np.linspace(ph.valid_range[0], ph.valid_range[1], 41)
    qs = np.linspace(env.support[0], env.support[1], 21)
    ph.to_csv(path, xs, qs)
    print(f"phase table ({len(xs)}x{len(qs)}) -> {path}")
    return 0


def _build_grid(cfg, eps):
    g = cfg.section("grid")
    xlim = tuple(g.get("xlim", (-2.0, 2.0)))
    ylim = tuple(g.get("ylim", (-1.0, 1.0)))
    nx = int(g.get("nx", 0)) or max(64, int(np.ceil((xlim[1] - xlim[0]) / (np.sqrt(eps) / 8))))
    ny = int(g.get("ny", 0)) or max(64, int(np.ceil((ylim[1] - ylim[0]) / (np.sqrt(eps) / 8))))
    return GridSpec2D.from_box(xlim, ylim, nx, ny)


def cmd_pack(args):
    cfg, out = _load(args)
    wall, curve = _curve_of(cfg)
    model = model_from_config(cfg.section("model"))
    branch = branch_from_config(cfg.section("branch"))
    env = envelope_from_config(cfg.section("envelope"))
    pk = cfg.section("packet")
    x0 = float(pk.get("x0", 0.0))
    t0 = float(pk.get("t", 0.0))
    rmap = RectificationMap(curve, eta=cfg.section("wall").get("eta"))
    grid = _build_grid(cfg, model.epsilon)
    from .fields import Field

    if isinstance(env, RealEnvelope):
        if model.model is Model.KLEIN_GORDON:
            u, du = relativistic_pair(model, branch, rmap, env, x0, t0, grid)
            fld = Field(
                grid, np.concatenate([u.values, du.values]),
                time=t0, epsilon=model.epsilon, model="klein_gordon",
            )
        else:
            fld = relativistic_mode(model, branch, rmap, env, x0, t0, grid)
    else:
        ph = solve_phase(model, branch, curve, x0, env.support)
        spec = WavepacketSpec(model=model, branch=branch, phase=ph, envelope=env, x0=x0)
        if model.model is Model.KLEIN_GORDON:
            # KG state needs (u, eps du/dt); assemble on the physical grid
            # (flat-wall identification) and stack the pair.
            v, w = assemble_pair_rectified(spec, t0, grid.x, grid.y)
            fld = Field(
                grid, np.concatenate([v.values, w.values]),
                time=t0, epsilon=model.epsilon, model="klein_gordon",
            )
        else:
            fld = evaluate_physical(spec, rmap, t0, grid)
    fld.model = model.model.value
    path = out / "pack.bin"
    write_field(path, fld)
    print(f"packed field ncomp={fld.ncomp} grid={grid.nx}x{grid.ny} -> {path}")
    return 0


def cmd_solve(args):
    cfg, out = _load(args)
    fld = read_field(args.init)
    wall = wall_from_config(cfg.section("wall"))
    model = model_from_config(cfg.section("model"))
    tsec = cfg.section("time")
    t_end = float(tsec.get("t_end", 1.0))
    snaps = [float(s) for s in tsec.get("snapshots", [])]
    if model.model is Model.DIRAC:
        sol = DiracSolver(model, wall, fld.grid)
        dt = float(tsec.get("dt", 0.0)) or (1e-3 * model.epsilon**2.5 / 0.4) ** 0.25
        final, snaplist = sol.evolve(
            fld, t_end, dt, order=int(tsec.get("order", 4)), snapshot_times=snaps
        )
    else:
        sol = KGSolver(model, wall, fld.grid, mass_mode=cfg.section("model").get("kg_mass", "grad_norm"))
        dt = float(tsec.get("dt", 0.0)) or 0.45 * sol.stable_dt()
        final, snaplist, drift = sol.evolve(fld, t_end, dt, snapshot_times=snaps)
        print(f"kg discrete energy drift: {drift:.3e}")
    write_field(out / "final.bin", final)
    for s in snaplist:
        write_field(out / f"snap_t{s.time:.6g}.bin", s)
    import csv

    with open(out / "observables.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "norm", "max_amp", "center", "spread_y"])
        for s in [fld] + snaplist + [final]:
            comps = (0,) if model.model is Model.KLEIN_GORDON and s.ncomp == 2 else None
            ob = pde.observables(s, comps=comps)
            w.writerow([f"{s.time:.9g}", f"{ob['norm']:.9g}", f"{ob['max_amp']:.9g}",
                        f"{ob['center']:.9g}", f"{ob['spread_y']:.9g}"])
    print(f"solved to t={t_end:.6g} -> {out / 'final.bin'}")
    return 0


def cmd_experiment(args):
    cfg, out = _load(args)
    rows = run_experiment(cfg)
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"[{status}] {r.experiment} {r.metric} = {r.value:.9g} (tol {r.tolerance})")
    return 0 if all_passed(rows) else 1


def cmd_report(args):
    rows = []
    for path in args.reports:
        rows.extend(read_rows(path))
    n_fail = sum(1 for r in rows if not r.passed)
    if args.out:
        write_rows(args.out, rows)
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"[{status}] {r.experiment} {r.metric} = {r.value:.9g} (tol {r.tolerance})")
    print(f"{len(rows) - n_fail}/{len(rows)} criteria passed")
    return 0 if n_fail == 0 else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="wallwave",
        description="Semiclassical wavepackets on domain walls: batch experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (
        ("trace", cmd_trace),
        ("phase", cmd_phase),
        ("pack", cmd_pack),
        ("experiment", cmd_experiment),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("solve")
    _add_common(p)
    p.add_argument("--init", required=True, help="initial field .bin")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("report")
    p.add_argument("reports", nargs="+", help="report.csv files to aggregate")
    p.add_argument("--out", default=None, help="write the merged CSV here")
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except WallwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
