"""Command line: ``pbforce solve|energy|force|validate <config> [--threads N] [--out DIR]``."""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConfigError, PBForceError

EXIT_FAIL = 1
EXIT_CONFIG = 2


def set_threads(n):
    import numba

    if n is None:
        env = os.environ.get("PBFORCE_THREADS")
        n = int(env) if env else None
    if n is not None:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def _prepare(cfg):
    from .pb_solver import compute_auxiliary, solve_pb

    sys_ = cfg.system()
    ls = cfg.levelset()
    aux = compute_auxiliary(sys_, ls, tol=cfg.aux_tol)
    sol = solve_pb(sys_, ls, tol=cfg.tol, max_newton=cfg.max_newton, aux=aux)
    return sys_, ls, sol


def cmd_solve(cfg, out):
    from .io import save_levelset, write_grid_binary, write_vtk_structured_points
    from .pb_solver import format_log

    _, ls, sol = _prepare(cfg)
    grid = sol.grid
    write_grid_binary(out / "u.grid", grid, sol.u.values)
    write_grid_binary(out / "reaction.grid", grid, sol.reaction_grid())
    save_levelset(out / "levelset.grid", ls)
    write_vtk_structured_points(out / "solution.vtk", grid, {
        "phi": ls.values, "u": sol.u.values, "reaction": sol.reaction_grid(),
        "phi_Gamma_inf": sol.aux.p.values})
    (out / "newton.log").write_text(format_log(sol))
    print(f"converged in {sol.iterations} Newton iterations, residual {sol.residual:.3e}")
    return 0


def cmd_energy(cfg, out):
    from .free_energy import energy_csv, energy_reformulated, energy_via_concentrations

    _, _, sol = _prepare(cfg)
    eb = energy_reformulated(sol)
    F = energy_via_concentrations(sol)
    (out / "energy.csv").write_text(energy_csv(eb, F))
    rel = abs(eb.total - F) / abs(eb.total) if eb.total else abs(F)
    print(eb)
    print(f"  concentration form  {F: .10e}")
    print(f"  relative discrepancy {rel:.3e}")
    return 0


def cmd_force(cfg, out):
    from .boundary_force import compute_force
    from .geometry.interface import extract_interface
    from .geometry.velocity import RadialBump
    from .io import write_vtk_polydata

    _, ls, sol = _prepare(cfg)
    mesh = extract_interface(ls)
    report, _ = compute_force(sol, mesh, model=cfg.trace_model)
    for i, (center, radius) in enumerate(cfg.spheres):
        report.add_variation(f"radial_bump_{i}", RadialBump(center, radius, cfg.bump_flat,
                                                             cfg.bump_width))
    (out / "force.csv").write_text(report.to_csv())
    (out / "variations.csv").write_text(report.variations_csv())
    d = report.density
    write_vtk_polydata(out / "force.vtk", mesh.points, {
        f"{report.tag}_q": d.q, "normal_term": d.normal_term, "tangential_term": d.tangential_term,
        "boltzmann_term": d.boltzmann_term, "dS": mesh.weights}, normals=mesh.normals)
    q = report.q
    print(f"{len(q)} samples, q mean {q.mean():.6e}, min {q.min():.6e}, max {q.max():.6e}")
    for k, v in report.variations.items():
        print(f"  variation {k}: {v:.10e}")
    return 0


def cmd_validate(cfg, out):
    from .validation import checks_csv, run_validation

    checks, extras = run_validation(cfg)
    (out / "validation.csv").write_text(checks_csv(checks))
    for exp in extras["experiments"]:
        (out / f"variation_{exp.name}.csv").write_text(exp.to_csv())
    ok = True
    for c in checks:
        status = "PASS" if c.passed else ("FAIL" if c.asserted else "INFO")
        print(f"{status:4s} {c.name}: {c.value:.6g} (threshold {c.threshold:.3g}) {c.note}")
        ok &= c.passed or not c.asserted
    print(f"validation {'passed' if ok else 'FAILED'} in {extras['seconds']:.1f} s")
    return 0 if ok else EXIT_FAIL


COMMANDS = dict(solve=cmd_solve, energy=cmd_energy, force=cmd_force, validate=cmd_validate)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="pbforce", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("config")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    set_threads(args.threads)
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, out)
    except PBForceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
