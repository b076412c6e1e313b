"""Command-line driver.

    solitonlab simulate     PDE run with modulation tracking
    solitonlab compare      PDE vs effective and Newton ODEs at one h
    solitonlab sweep        scaling of the errors over several h
    solitonlab spectral     linearized-operator checks
    solitonlab ode-compare  perturbed vs exact point dynamics

Exit codes: 0 success, 2 a check failed, 3 the run diverged or left the
soliton tube.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments
from .experiments import ExperimentConfig

EXIT_OK = 0
EXIT_CHECK = 2
EXIT_DIVERGED = 3


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    common.add_argument("--out", help="output directory")
    common.add_argument("--h", type=float, nargs="+", help="slowness parameter(s)")
    common.add_argument("--delta", type=float)
    common.add_argument("--a0", type=float, help="initial soliton position")
    common.add_argument("--v0", type=float, help="initial soliton velocity")
    common.add_argument("--n", type=int, help="grid points")
    common.add_argument("--box", type=float, help="periodic box length")
    common.add_argument("--dt", type=float, help="PDE time step")
    common.add_argument("--t-end", type=float, help="fixed run length")
    common.add_argument("--t-rule", choices=("fixed", "delta_log"))
    common.add_argument("--seed", type=int)
    common.add_argument("--perturb-scale", type=float,
                        help="add a seeded perturbation of H1 size scale*h^(2-delta) to the data")
    common.add_argument("--workers", type=int, help="parallel sweep workers (default: one per h)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="solitonlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("simulate", "PDE run with modulation tracking"),
        ("compare", "PDE against the effective and Newton ODEs"),
        ("sweep", "error scaling over several h"),
        ("spectral", "linearized-operator checks"),
        ("ode-compare", "perturbed vs exact point dynamics"),
    ):
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    hs = args.h or []
    changes = dict(
        out=args.out, delta=args.delta, a0=args.a0, v0=args.v0, n=args.n, box=args.box,
        dt=args.dt, t_end=args.t_end, t_rule=args.t_rule, seed=args.seed,
        perturb_scale=args.perturb_scale, workers=args.workers,
    )
    if len(hs) == 1:
        changes["h"] = hs[0]
    elif len(hs) > 1:
        changes["h_list"] = tuple(hs)
    return cfg.updated(**changes)


def _print_summary(summary: dict) -> None:
    for key in sorted(summary):
        print(f"{key}: {summary[key]}")


def cmd_simulate(cfg: ExperimentConfig) -> int:
    run = experiments.simulate(cfg)
    _print_summary({"status": run.status, **run.checks})
    return EXIT_DIVERGED if run.diverged else EXIT_OK


def cmd_compare(cfg: ExperimentConfig) -> int:
    cmp = experiments.compare(cfg, cfg.h, cfg.horizon(cfg.h))
    summary = experiments.write_comparison(cmp, Path(cfg.out), cfg)
    _print_summary(summary)
    return EXIT_DIVERGED if cmp.pde.diverged else EXIT_OK


def cmd_sweep(cfg: ExperimentConfig) -> int:
    result = experiments.sweep(cfg)
    print("h,t_end,E,A,A_N,w_h1,status")
    for r in result.rows:
        print(f"{r.h:g},{r.t_end:g},{r.E:.6g},{r.A:.6g},{r.A_N:.6g},{r.w_h1:.6g},{r.status}")
    print(f"p_E: {result.p_E:.4f}  p_A: {result.p_A:.4f}  p_A_N: {result.p_A_N:.4f}")
    print(f"E(h0)/E(h1): {result.halving_factor:.4f}")
    return EXIT_DIVERGED if any(r.status != "ok" for r in result.rows) else EXIT_OK


def cmd_spectral(cfg: ExperimentConfig) -> int:
    checks = experiments.spectral_report(cfg)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} (tolerance {c.tolerance:g})")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_ode_compare(cfg: ExperimentConfig) -> int:
    rows = experiments.ode_compare_report(cfg)
    for r in rows:
        print(f"{'PASS' if r['passed'] else 'FAIL'} h={r['h']:g} delta={r['delta']:g} "
              f"{r['shape']}: |a-abar|={r['gap_a']:.3e} <= {r['bound_a']:.3e}, "
              f"|v-vbar|={r['gap_v']:.3e} <= {r['bound_v']:.3e}")
    failed = [r for r in rows if not r["passed"]]
    for r in failed:
        print(f"bound violated at h={r['h']:g}, delta={r['delta']:g} ({r['shape']})", file=sys.stderr)
    return EXIT_CHECK if failed else EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "spectral": cmd_spectral,
    "ode-compare": cmd_ode_compare,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
