"""Command line entry point.

Subcommands
-----------
run             execute a figure preset and write its CSV
validate        run the numeric invariant suite
oracle-compare  compare the matching heuristic against exhaustive search

Exit codes: 0 success / all checks pass, 1 check failure or unexpected
error, 2 bad configuration, 3 guarded problem size exceeded, 4 numeric
domain violation.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DomainError, SizeGuardError, SkynomaError
from .harness import PRESETS, make_spec, oracle_compare, run_experiment, validate
from .scenario import ScenarioConfig, generate_topology, load_config
from .channel import build_channel_set

_EXIT_CODES = [
    (ConfigError, 2),
    (SizeGuardError, 3),
    (DomainError, 4),
    (SkynomaError, 1),
]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="skynoma",
        description="Energy-efficiency simulator for aerial NOMA downlinks")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a figure preset")
    run_p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    run_p.add_argument("--config", help="key = value scenario file")
    run_p.add_argument("--trials", type=int, default=None)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--out", help="CSV output path (default <preset>.csv)")
    run_p.add_argument("--workers", type=int, default=1,
                       help="parallel trial processes")
    run_p.add_argument("--dump-channels", metavar="PATH",
                       help="also write the seed-0 channel table to PATH")

    val_p = sub.add_parser("validate", help="run the numeric invariant suite")
    val_p.add_argument("--config", help="key = value scenario file")
    val_p.add_argument("--seed", type=int, default=0)

    orc_p = sub.add_parser("oracle-compare",
                           help="matching heuristic vs exhaustive search")
    orc_p.add_argument("--instances", type=int, default=100)
    orc_p.add_argument("--config", help="key = value scenario file "
                       "(must stay within the exhaustive size guard)")
    orc_p.add_argument("--seed", type=int, default=0)
    return parser


def _load(args):
    return load_config(args.config) if args.config else None


def _cmd_run(args):
    config = _load(args)
    out = args.out if args.out else f"{args.preset}.csv"
    spec = make_spec(args.preset, config=config, trials=args.trials,
                     seed=args.seed, out=out, workers=args.workers)
    if args.dump_channels:
        topo = generate_topology(spec.base_config, seed=spec.seed)
        build_channel_set(topo, spec.base_config, seed=spec.seed).dump_csv(
            args.dump_channels)
    result = run_experiment(spec)
    print(f"wrote {out}: {len(result.rows)} rows, "
          f"{len(result.failures)} failed trials")
    for value, trial, err in result.failures:
        print(f"  failed trial {trial} at {spec.sweep_variable}={value}: {err}")
    return 0


def _cmd_validate(args):
    report = validate(_load(args), seed=args.seed)
    print(report.render())
    return 0 if report.passed else 1


def _cmd_oracle(args):
    stats = oracle_compare(_load(args), n_instances=args.instances,
                           seed=args.seed)
    ok = stats.min_ratio <= 1.0 + 1e-9 and stats.mean_ratio > stats.mean_random_ratio
    print(f"instances: {len(stats.ratios)}")
    print(f"heuristic/optimal ratio: mean {stats.mean_ratio:.6f}, "
          f"min {stats.min_ratio:.6f}")
    print(f"random-matching ratio:   mean {stats.mean_random_ratio:.6f}")
    print("bound holds and heuristic beats random on average"
          if ok else "FAIL: oracle comparison violated")
    return 0 if ok else 1


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate,
               "oracle-compare": _cmd_oracle}[args.command]
    try:
        return handler(args)
    except SkynomaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for klass, code in _EXIT_CODES:
            if isinstance(exc, klass):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
