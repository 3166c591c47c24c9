"""Command line interface: ``cmbf gen|solve|suite|stats``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import bench
from .bnb import SolverConfig, solve_exact
from .heuristic import HeuristicConfig, solve_heuristic
from .model import PRESETS, InstanceFormatError, ProblemInstance, generate_instance, read_instance, residual, write_instance


def _cmd_gen(args) -> int:
    inst = generate_instance(args.n, args.k, args.preset, seed=args.seed)
    if args.tol is not None:
        inst = ProblemInstance(inst.channel, inst.desired, args.tol)
    write_instance(inst, args.out)
    print(f"wrote {args.out}: N={inst.n_antennas} K={inst.n_users} tol={inst.tol:.6g}")
    return 0


def _cmd_solve(args) -> int:
    try:
        inst = read_instance(args.input)
    except (OSError, InstanceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.tol is not None:
        inst = ProblemInstance(inst.channel, inst.desired, args.tol)
    variant = args.variant
    hconf = HeuristicConfig(max_iter=args.restarts, max_count=args.swaps, seed=args.seed)
    out = {"variant": variant}
    initial = None
    if variant.endswith("heur"):
        h = solve_heuristic(inst, hconf)
        out.update(heur_card=h.cardinality, heur_status=h.status, heur_error=h.error, heur_time_s=h.time_s)
        x = h.x
        initial = h.x if h.success else None
    if variant != "heur":
        config = SolverConfig(time_limit_s=args.time_limit, eps=args.eps,
                              modulus_handler=variant.startswith("modulus"), initial_solution=initial)
        report = solve_exact(inst, config)
        out.update(status=report.status.value, opt_card=report.cardinality, nodes=report.nodes,
                   dual_bound=report.dual_bound, time_s=report.time_s)
        x = report.x
    if x is not None:
        out["error"] = residual(inst, x)
        out["x"] = [[float(v.real), float(v.imag)] for v in np.asarray(x)]
    text = json.dumps(out, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_suite(args) -> int:
    grid = dict(bench.FULL_GRID if args.grid == "full" else bench.DESK_GRID)
    if args.n:
        grid["N"] = tuple(args.n)
    if args.k:
        grid["K"] = tuple(args.k)
    if args.presets:
        grid["presets"] = tuple(args.presets)
    config = bench.SuiteConfig(
        grid=grid, seeds=args.seeds, variants=tuple(args.variants or bench.VARIANTS),
        time_limit_s=args.time_limit, eps=args.eps, master_seed=args.master_seed, workers=args.workers,
        heuristic=HeuristicConfig(max_iter=args.restarts, max_count=args.swaps),
    )
    records = bench.run_suite(config, args.csv)
    print(bench.format_summary(bench.summarize(records)))
    return 0


def _cmd_stats(args) -> int:
    try:
        records = bench.read_csv(args.csv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(bench.format_summary(bench.summarize(records)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmbf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random instance file")
    gen.add_argument("--n", type=int, required=True, help="number of antennas")
    gen.add_argument("--k", type=int, required=True, help="number of users")
    gen.add_argument("--preset", choices=sorted(PRESETS), default="0.1q")
    gen.add_argument("--tol", type=float, help="error bound overriding the preset")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    def heuristic_options(p):
        p.add_argument("--restarts", type=int, default=1000, help="heuristic restarts per level")
        p.add_argument("--swaps", type=int, default=1000, help="swap proposals per restart")

    solve = sub.add_parser("solve", help="solve one instance file")
    solve.add_argument("--in", dest="input", required=True)
    solve.add_argument("--out")
    solve.add_argument("--variant", choices=bench.VARIANTS, default="modulus")
    solve.add_argument("--time-limit", type=float, default=3600.0)
    solve.add_argument("--eps", type=float, default=1e-5)
    solve.add_argument("--tol", type=float, help="error bound overriding the file")
    solve.add_argument("--seed", type=int, default=0, help="heuristic seed")
    heuristic_options(solve)
    solve.set_defaults(func=_cmd_solve)

    suite = sub.add_parser("suite", help="run a benchmark suite")
    suite.add_argument("--grid", choices=("desk", "full"), default="desk")
    suite.add_argument("--n", type=int, nargs="+")
    suite.add_argument("--k", type=int, nargs="+")
    suite.add_argument("--presets", nargs="+", choices=sorted(PRESETS))
    suite.add_argument("--variants", nargs="+", choices=bench.VARIANTS)
    suite.add_argument("--seeds", type=int, default=3, help="instances per cell")
    suite.add_argument("--master-seed", type=int, default=0)
    suite.add_argument("--workers", type=int, default=1)
    suite.add_argument("--time-limit", type=float, default=300.0)
    suite.add_argument("--eps", type=float, default=1e-5)
    suite.add_argument("--csv", required=True)
    heuristic_options(suite)
    suite.set_defaults(func=_cmd_suite)

    stats = sub.add_parser("stats", help="summarize a suite CSV")
    stats.add_argument("--csv", required=True)
    stats.set_defaults(func=_cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
