"""Command line entry point: ``advlsh <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness
from .adversary import AttackConfig, find_isolated_origin, run_walk
from .datasets import generate, load_points, save_points, format_points
from .hamming import child_rng
from .index import build_index, derive_params

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master seed (u64)")
    p.add_argument("--trials", type=int, help="trials per grid point")
    p.add_argument("--out", help="output path (CSV for sweeps)")
    p.add_argument("--config", help="YAML experiment description")
    p.add_argument("--json", action="store_true", help="also emit a JSON series file")
    p.add_argument("--workers", type=int, help="worker processes")


def _params_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", default="zero", help="zero | random | sparse | path to a point file")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=300)
    p.add_argument("--r", type=int, default=30)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--lam", type=float, default=4.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="advlsh", description="Adaptive false-negative attacks on Hamming-space LSH.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-data", help="write a synthetic point file")
    _common(p)
    p.add_argument("--kind", choices=("zero", "random", "sparse"), default="random")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=300)
    p.add_argument("--p", type=float, default=1 / 15, help="bit density for 'sparse'")

    p = sub.add_parser("attack", help="run one adaptive attack and print the outcome")
    _common(p)
    _params_args(p)
    p.add_argument("--algo", choices=("fast", "simple"), default="fast")
    p.add_argument("--start-distance", type=int)
    p.add_argument("--target-distance", type=int)

    for name, help_ in (("sweep", "success rate over a parameter grid"),
                        ("compare", "adaptive walk vs random sampling"),
                        ("defense-eval", "attack robustified indexes")):
        p = sub.add_parser(name, help=help_)
        _common(p)

    p = sub.add_parser("verify", help="numeric checks of the analysis' lemmas")
    _common(p)
    p.add_argument("--quick", action="store_true", help="fewer repetitions")
    return parser


def _load_spec(args) -> harness.ExperimentSpec:
    if not args.config:
        raise UsageError("--config is required")
    spec = harness.ExperimentSpec.from_yaml(args.config)
    if args.seed is not None:
        spec.seed = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise UsageError("--trials must be positive")
        spec.trials = args.trials
    if args.workers is not None:
        spec.workers = args.workers
    return spec


def _emit(result: harness.SweepResult, args) -> None:
    if args.out:
        json_path = args.out.rsplit(".", 1)[0] + ".json" if args.json else None
        result.write(args.out, json_path)
    else:
        sys.stdout.write(result.to_json() + "\n" if args.json else result.to_csv())


def _cmd_gen_data(args) -> int:
    data = generate(args.kind, args.n, args.d, child_rng(args.seed or 0, 0), p=args.p)
    if args.out:
        save_points(data, args.out)
    else:
        sys.stdout.write(format_points(data))
    return EXIT_OK


def _cmd_attack(args) -> int:
    seed = args.seed or 0
    if args.dataset in ("zero", "random", "sparse"):
        data = generate(args.dataset, args.n, args.d, child_rng(seed, 0))
    else:
        data = load_points(args.dataset)
    params = derive_params(data.n, data.d, args.r, args.c, args.lam)
    index = build_index(data, params, child_rng(seed, 1))
    z, isolation = find_isolated_origin(data)
    config = AttackConfig(algo=args.algo, start_distance=args.start_distance,
                          target_distance=args.target_distance)
    outcome = run_walk(index, z, config, child_rng(seed, 2))
    report = {
        "success": outcome.success,
        "lsh_queries": outcome.lsh_queries_used,
        "outer_iterations": outcome.outer_iterations,
        "isolation": isolation,
        "k": params.k,
        "L": params.L,
        "reason": outcome.reason,
        "query": "".join(map(str, outcome.query)) if outcome.success else None,
    }
    if args.json:
        print(json.dumps(report))
    else:
        for key, value in report.items():
            print(f"{key}: {value}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    _emit(harness.run_sweep(_load_spec(args)), args)
    return EXIT_OK


def _cmd_compare(args) -> int:
    _emit(harness.compare_adaptive_random(_load_spec(args)), args)
    return EXIT_OK


def _cmd_defense(args) -> int:
    spec = _load_spec(args)
    if spec.defense.get("kind", "none") == "none":
        logging.getLogger(__name__).info("no defense configured: evaluating plain LSH")
    _emit(harness.defense_eval(spec), args)
    return EXIT_OK


def _cmd_verify(args) -> int:
    checks = harness.verify_lemmas(seed=args.seed or 0, quick=args.quick)
    if args.json:
        print(json.dumps([c.__dict__ for c in checks], default=str))
    else:
        for check in checks:
            print(check.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


COMMANDS = {
    "gen-data": _cmd_gen_data,
    "attack": _cmd_attack,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "defense-eval": _cmd_defense,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"advlsh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"advlsh: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"advlsh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
