"""Command-line entry point: ``pdcrack <subcommand> [options]``.

Exit status is 0 on success, 1 when a check fails (or a run goes
unstable) and 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    energy_balance_study,
    griffith_flat_crack_check,
    griffith_setup,
    horizon_refinement_study,
    monotone_decreasing,
    quiescent_elasticity_check,
)
from .config import ConfigError, RunConfig, parse_config, resolve_config_path
from .constitutive import (
    calibrate,
    dimensionless_beta,
    effective_moduli,
    fracture_toughness_quadrature,
    max_force_profile,
)
from .cracks import branch_time
from .dynamics import SimulationUnstable, critical_time_step
from .energetics import energy_bound_check
from .output import provenance, write_crack_paths, write_run_ledger, write_snapshot
from .simulation import Simulation

log = logging.getLogger("pdcrack")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(path: str) -> RunConfig:
    return parse_config(resolve_config_path(path))


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# ---------------------------------------------------------------- commands


def cmd_calibrate(args) -> int:
    cfg = _load(args.config)
    mat = cfg.material_constants()
    p = calibrate(mat, cfg.domain.horizon, 2, r_break_factor=cfg.model.r_break_factor)
    Gc = mat.fracture_energy
    mu_q, _ = effective_moduli(p)
    rows = [
        ("g_inf [J/m^2]", p.g_inf),
        ("beta [1/m]", p.beta),
        ("r_c [m^0.5]", p.r_c),
        ("r_break [m^0.5]", p.r_break),
        ("mu = lambda [Pa]", p.mu),
        ("max force profile", max_force_profile(p)),
        ("L * beta (dimensionless)", dimensionless_beta(cfg.domain.length, p)),
        ("Verlet dt limit [s]", critical_time_step(p, cfg.domain.spacing)),
        ("g_inf / (3 pi Gc)", p.g_inf / (3.0 * math.pi * Gc)),
        ("beta g_inf / (48 mu)", p.beta * p.g_inf / (48.0 * p.mu)),
        ("Gc by quadrature [J/m^2]", fracture_toughness_quadrature(p)),
        ("mu by quadrature [Pa]", mu_q),
    ]
    print(f"# {provenance(cfg)}")
    for name, val in rows:
        print(f"{name:<28s} {val:.10g}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args.config)
    overrides = {}
    if args.out:
        overrides["output"] = {"directory": args.out}
    if args.snapshot_every:
        overrides["time"] = {"snapshot_every": args.snapshot_every}
    if args.t_end is not None:
        overrides.setdefault("time", {})["t_end"] = args.t_end
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    csv = "csv" in cfg.output.formats
    png = "png" in cfg.output.formats and not args.no_plots
    if png:
        from . import plotting

    sim = Simulation(cfg)
    log.info("grid %dx%d, %d bonds, %d steps", sim.grid.nx, sim.grid.ny, sim.bonds.n_bonds, cfg.n_steps)

    def on_snapshot(snap, crack):
        stem = f"snapshot_{snap.step:07d}"
        if csv:
            write_snapshot(out / "snapshots" / f"{stem}.csv", snap, cfg)
        if png:
            plotting.plot_snapshot(sim.grid, snap, crack, out / "figures", stem)
        log.info("t=%.1f us, components=%d, tip x=%.4f", snap.t * 1e6, crack.component_count, crack.tip[0])

    try:
        result = sim.run(keep_snapshots=False, on_snapshot=on_snapshot)
    except SimulationUnstable as exc:
        print(f"run unstable: {exc}", file=sys.stderr)
        write_run_ledger(out / "ledger.csv", sim.audit.ledger, cfg)
        return EXIT_FAIL
    write_run_ledger(out / "ledger.csv", result.ledger, cfg)
    write_crack_paths(out / "crack_path.csv", result.cracks, cfg)
    if png:
        plotting.plot_ledger(result.ledger, out / "figures" / "ledger.png")
        plotting.plot_crack_history(result.cracks, out / "figures" / "crack_history.png")

    arr = result.ledger.as_array()
    w_peak = float(np.abs(arr[:, 5]).max())
    res = float(np.abs(arr[:, 6]).max())
    tb = branch_time(result.cracks)
    last = result.cracks[-1]
    print(f"steps {result.state.step}, wall {result.wall_time:.1f} s, broken bonds {result.damage.n_broken}")
    print(f"final tip x {last.tip[0]:.4f} m, components {last.component_count}")
    print("branch time " + ("none" if tb is None else f"{tb * 1e6:.1f} us"))
    print(f"max |residual| {res:.4e} J/m ({res / w_peak if w_peak > 0 else float('nan'):.3%} of peak W_ext)")
    print(f"energy bound holds: {energy_bound_check(result.ledger)}")
    print(f"outputs in {out}")
    return EXIT_OK


def cmd_check_griffith(args) -> int:
    cfg = _load(args.config)
    h = cfg.domain.spacing
    eps = h * args.horizon_ratio if args.horizon_ratio else cfg.domain.horizon
    grid, bonds, params = griffith_setup(cfg, h, eps)
    res = griffith_flat_crack_check(grid, bonds, args.length, params, mode=args.mode)
    ok = abs(res.rel_error) <= args.tol
    print(f"h={h:g} m eps={eps:g} m length={args.length:g} m mode={res.mode} bonds={res.n_bonds}")
    print(f"F={res.computed:.6g} J/m target Gc*l={res.target:.6g} J/m rel_error={res.rel_error:+.4%} "
          f"tol={args.tol:.2%} {_status(ok)}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_elastic(args) -> int:
    cfg = _load(args.config)
    eps = cfg.domain.horizon
    p = calibrate(cfg.material_constants(), eps, 2, r_break_factor=cfg.model.r_break_factor)
    a = args.strain
    cases = {"dilation": [[a, 0.0], [0.0, a]], "pure shear": [[0.0, a], [a, 0.0]]}
    ok_all = True
    for name, F in cases.items():
        res = quiescent_elasticity_check(F, eps, p, ratio=args.horizon_ratio)
        ok = abs(res.rel_error) <= args.tol
        ok_all &= ok
        print(f"{name:<11s} W_bond={res.W_bond:.6g} W_closed={res.W_closed_form:.6g} "
              f"rel_error={res.rel_error:+.4%} tol={args.tol:.2%} {_status(ok)}")
    return EXIT_OK if ok_all else EXIT_FAIL


def cmd_check_balance(args) -> int:
    cfg = _load(args.config)
    rows = energy_balance_study(cfg, args.steps)
    for sub, res, w in rows:
        print(f"dt={sub:.4g} s max|residual|={res:.4e} J/m peak W_ext={w:.4e} J/m ratio={res / w:.4%}")
    rel_ok = rows[0][1] <= args.tol * rows[0][2]
    ratio = rows[0][1] / rows[1][1] if rows[1][1] > 0 else math.inf
    shrink_ok = ratio >= args.min_shrink
    print(f"residual within {args.tol:.2%} of peak W_ext: {_status(rel_ok)}")
    print(f"residual shrink under dt halving {ratio:.2f}x (need >= {args.min_shrink:g}x): {_status(shrink_ok)}")
    return EXIT_OK if rel_ok and shrink_ok else EXIT_FAIL


def cmd_refine_horizon(args) -> int:
    cfg = _load(args.config)
    if args.horizons:
        horizons = args.horizons
    else:
        h0 = cfg.domain.spacing
        horizons = [24 * h0, 12 * h0, 6 * h0]
    rows = horizon_refinement_study(cfg, horizons, ratio=args.horizon_ratio, t_end=args.t_end, workers=args.threads)
    diffs = [r.l2_difference for r in rows]
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        with (out / "refinement.csv").open("w") as fh:
            fh.write(f"# {provenance(cfg)}\n")
            fh.write("horizon_coarse,horizon_fine,l2_difference\n")
            for r in rows:
                fh.write(f"{r.horizon_coarse:.9e},{r.horizon_fine:.9e},{r.l2_difference:.9e}\n")
    for r in rows:
        print(f"eps {r.horizon_coarse:.4g} -> {r.horizon_fine:.4g} m: |du|_L2 = {r.l2_difference:.4e}")
    ok = monotone_decreasing(diffs)
    print(f"successive differences decrease: {_status(ok)}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    def common(p, config="straight.cfg"):
        # added per subcommand: argparse parents share action objects, so
        # per-command defaults would leak between subcommands
        p.add_argument("--config", default=config,
                       help="config file path or bundled recipe name (default: %(default)s)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker processes for independent runs (default: available cores)")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        return p

    ap = _Parser(prog="pdcrack", description="Peridynamic dynamic-fracture simulator and verification checks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = common(sub.add_parser("calibrate", help="print calibrated model constants and identities"))
    p.set_defaults(func=cmd_calibrate)

    p = common(sub.add_parser("run", help="run a simulation and write ledger, snapshots and figures"))
    p.add_argument("--out", help="output directory (overrides output.directory)")
    p.add_argument("--snapshot-every", type=int, help="steps between snapshots")
    p.add_argument("--t-end", type=float, help="end time in seconds (overrides time.t_end)")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p.set_defaults(func=cmd_run)

    p = common(sub.add_parser("check-griffith", help="flat-crack failure energy against Gc * length"))
    p.add_argument("--length", type=float, default=0.24, help="segment length in metres (default: %(default)s)")
    p.add_argument("--horizon-ratio", type=float, default=6.0,
                   help="use horizon = ratio * spacing; 0 keeps the config horizon (default: %(default)s)")
    p.add_argument("--mode", choices=("central", "full"), default="central")
    p.add_argument("--tol", type=float, default=0.05)
    p.set_defaults(func=cmd_check_griffith)

    p = common(sub.add_parser("check-elastic", help="affine-field energy density against linear elasticity"))
    p.add_argument("--strain", type=float, default=1e-5)
    p.add_argument("--horizon-ratio", type=float, default=6.0)
    p.add_argument("--tol", type=float, default=0.03)
    p.set_defaults(func=cmd_check_elastic)

    p = common(sub.add_parser("check-balance", help="energy-balance residual and its dt-halving trend"), "oscillation.cfg")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--tol", type=float, default=0.005)
    p.add_argument("--min-shrink", type=float, default=2.0)
    p.set_defaults(func=cmd_check_balance)

    p = common(sub.add_parser("refine-horizon", help="L2 differences across a horizon sequence"), "refinement.cfg")
    p.add_argument("--horizons", type=float, nargs="+", help="decreasing horizons in metres (default: 24, 12, 6 h)")
    p.add_argument("--horizon-ratio", type=float, default=None, help="eps / h for every run (default: from config)")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--out", help="directory for refinement.csv")
    p.set_defaults(func=cmd_refine_horizon)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if not getattr(args, "command", None):
        ap.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        ap.error("--threads must be >= 1")
    t0 = time.perf_counter()
    try:
        status = args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log.info("%s finished in %.1f s", args.command, time.perf_counter() - t0)
    return status


if __name__ == "__main__":
    sys.exit(main())
