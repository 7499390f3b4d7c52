"""Command-line interface.

    singletqaoa <verb> --config FILE [--out-dir DIR] [--seed N]
                [--threads N] [--strict]

Verbs: optimize, evaluate, heatmap, robustness, trajectory, baseline,
search, fit-decay, report, total-protocol. The verb must match the
config's task (or the config may omit the task and inherit the verb).

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 optimizer non-convergence under --strict.
"""
from __future__ import annotations

import argparse
import sys

from .errors import NonConvergenceError, NumericalError, SchemaError
from .runner import run_experiment

VERBS = ("optimize", "evaluate", "heatmap", "robustness", "trajectory",
         "baseline", "search", "fit-decay", "report", "total-protocol")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singletqaoa",
        description="Design and evaluate pulse schedules that convert "
                    "magnetization to long-lived singlet order.")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", required=(verb != "report"),
                       help="experiment config JSON")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sweeps and searches")
        p.add_argument("--strict", action="store_true",
                       help="exit 4 when an optimizer fails to converge")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config is not None:
            from .config import load_config
            config = load_config(args.config)
            config.setdefault("task", args.verb)
            if config["task"] != args.verb:
                raise SchemaError(
                    f"config task {config['task']!r} does not match verb "
                    f"{args.verb!r}", keys=("task",))
        else:
            config = {"task": args.verb}
        summary = run_experiment(config, args.out_dir, seed=args.seed,
                                 threads=args.threads, strict=args.strict)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        if exc.keys:
            print("offending keys: " + ", ".join(exc.keys), file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 4
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for path in summary["outputs"]:
        print(path)
    print(summary["manifest"])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
