"""Command-line front end: run, sweep, trace, serve.

Every flag can also be set through an environment variable with the
SEC_ prefix: --batch-size becomes SEC_BATCH_SIZE, --eval-every becomes
SEC_EVAL_EVERY, and so on.  A flag given on the command line always
wins over its environment default.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

from .bandit import BanditConfig
from .categories import build_registry, load_registry
from .errors import BadConfig, CurriculumError
from .harness import (
    CURRICULA,
    ESTIMATORS,
    RunConfig,
    difficulty_trace,
    run,
    sweep,
)
from .scenarios import load_scenario, shipped_scenarios
from .serialize import emit_line, format_real
from .server import serve

ENV_PREFIX = "SEC_"

TRUE_WORDS = frozenset({"1", "true", "yes", "on"})


def _env_name(flag: str) -> str:
    return ENV_PREFIX + flag.upper().replace("-", "_")


def _env_default(flag: str, fallback):
    return os.environ.get(_env_name(flag), fallback)


def _env_flag(flag: str) -> bool:
    return str(_env_default(flag, "")).strip().lower() in TRUE_WORDS


def _comma_list(convert):
    def parse(text):
        if isinstance(text, list):
            return text
        return [convert(item) for item in str(text).split(",")]

    return parse


def _add_run_flags(parser: argparse.ArgumentParser, grid: bool = False) -> None:
    """Shared run/sweep flags.  In grid mode the swept flags take comma lists."""
    conv_str = _comma_list(str) if grid else str
    conv_float = _comma_list(float) if grid else float
    conv_int = _comma_list(int) if grid else int
    plural = "(s, comma-separated)" if grid else ""
    parser.add_argument(
        "--curriculum",
        type=conv_str,
        default=_env_default("curriculum", "sec"),
        help=f"curriculum{plural}: one of {', '.join(CURRICULA)} (default sec)",
    )
    parser.add_argument(
        "--scenario",
        type=str,
        default=_env_default("scenario", "single-task-3lvl"),
        help=f"shipped scenario name ({', '.join(shipped_scenarios())}) or a JSON file path",
    )
    parser.add_argument(
        "--steps",
        type=int,
        default=int(_env_default("steps", 400)),
        help="training steps T (default 400)",
    )
    parser.add_argument(
        "--eval-every",
        type=int,
        default=int(_env_default("eval-every", 50)),
        help="evaluate every this many steps (default 50)",
    )
    parser.add_argument(
        "--alpha",
        type=conv_float,
        default=_env_default("alpha", "0.5"),
        help=f"Q update rate{plural} in (0, 1] (default 0.5)",
    )
    parser.add_argument(
        "--tau",
        type=conv_float,
        default=_env_default("tau", "1.0"),
        help=f"sampling temperature{plural} > 0 (default 1.0)",
    )
    parser.add_argument(
        "--batch-size",
        type=int,
        default=int(_env_default("batch-size", 64)),
        help="problems per step (default 64)",
    )
    parser.add_argument(
        "--seed",
        type=conv_int,
        default=_env_default("seed", "0"),
        help=f"run seed{plural} (default 0)",
    )
    parser.add_argument(
        "--estimator",
        type=str,
        choices=sorted(ESTIMATORS),
        default=_env_default("estimator", "grpo"),
        help="advantage estimator (default grpo)",
    )
    parser.add_argument(
        "--bins",
        type=int,
        default=_env_default("bins", None),
        help="re-partition problems into this many success-rate bins as the arms",
    )
    parser.add_argument(
        "--rollouts",
        type=int,
        default=_env_default("rollouts", None),
        help="override the scenario's rollouts per problem",
    )
    parser.add_argument(
        "--dedupe-within-batch",
        action="store_true",
        default=_env_flag("dedupe-within-batch"),
        help="redraw batch slots that repeat a problem while the pool allows",
    )
    parser.add_argument(
        "--out",
        type=str,
        default=_env_default("out", None),
        help="output directory (steps.jsonl, evals.jsonl, run.json)"
        if not grid
        else "sweep output directory (per-run subdirectories plus sweep.jsonl)",
    )


def _scalar_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        curriculum=args.curriculum,
        scenario=args.scenario,
        steps=args.steps,
        eval_every=args.eval_every,
        alpha=float(args.alpha),
        tau=float(args.tau),
        batch_size=args.batch_size,
        seed=int(args.seed),
        estimator=args.estimator,
        bins=None if args.bins is None else int(args.bins),
        rollouts=None if args.rollouts is None else int(args.rollouts),
        dedupe_within_batch=args.dedupe_within_batch,
        out=args.out,
    )


def _as_list(value, convert) -> list:
    if isinstance(value, list):
        return value
    return _comma_list(convert)(value)


def _grid_specs(args: argparse.Namespace) -> list[dict]:
    """Cross product in nesting order curriculum > alpha > tau > seed."""
    specs = []
    for curriculum in _as_list(args.curriculum, str):
        for alpha in _as_list(args.alpha, float):
            for tau in _as_list(args.tau, float):
                for seed in _as_list(args.seed, int):
                    specs.append(
                        dict(
                            curriculum=curriculum,
                            scenario=args.scenario,
                            steps=args.steps,
                            eval_every=args.eval_every,
                            alpha=alpha,
                            tau=tau,
                            batch_size=args.batch_size,
                            seed=seed,
                            estimator=args.estimator,
                            bins=None if args.bins is None else int(args.bins),
                            rollouts=None
                            if args.rollouts is None
                            else int(args.rollouts),
                            dedupe_within_batch=args.dedupe_within_batch,
                        )
                    )
    return specs


def _cmd_run(args: argparse.Namespace) -> int:
    report = run(_scalar_config(args))
    sys.stdout.write(emit_line(report.summary))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    rows = sweep(_grid_specs(args), out_dir=args.out, jobs=args.jobs)
    for row in rows:
        sys.stdout.write(emit_line(row))
    return 1 if any(row["status"] == "error" for row in rows) else 0


def _cmd_trace(args: argparse.Namespace) -> int:
    trace = difficulty_trace(args.run, window=args.window)
    if args.out == "-":
        out = sys.stdout
        close = False
    else:
        out = open(args.out, "w", encoding="utf-8", newline="\n")
        close = True
    try:
        for step, value in trace:
            out.write(f"{step}\t{format_real(value)}\n")
    finally:
        if close:
            out.close()
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    if (args.scenario is None) == (args.registry is None):
        raise BadConfig("serve needs exactly one of --scenario or --registry")
    if args.registry is not None:
        registry = load_registry(args.registry)
    else:
        registry = build_registry(load_scenario(args.scenario).build_problems())
    config = BanditConfig(
        alpha=float(args.alpha),
        tau=float(args.tau),
        batch_size=args.batch_size,
        seed=int(args.seed),
        dedupe_within_batch=args.dedupe_within_batch,
    )
    log_stream = None
    if args.log is not None:
        log_stream = open(args.log, "a", encoding="utf-8", newline="\n")
    try:
        serve(
            registry,
            config,
            transport=args.transport,
            log_stream=log_stream,
            checkpoint_path=args.checkpoint,
            restore_path=args.restore,
            max_connections=args.max_connections,
        )
    finally:
        if log_stream is not None:
            log_stream.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sec-curriculum",
        description="Curriculum bandit over problem categories: "
        "experiment harness and sidecar server.",
        epilog=f"Flags read defaults from {ENV_PREFIX}* environment variables "
        "(--batch-size from SEC_BATCH_SIZE, and so on).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one curriculum against the simulated learner")
    _add_run_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a grid of configurations")
    _add_run_flags(p_sweep, grid=True)
    p_sweep.add_argument(
        "--jobs",
        type=int,
        default=int(_env_default("jobs", 1)),
        help="parallel worker processes (default 1)",
    )
    p_sweep.set_defaults(func=_cmd_sweep)

    p_trace = sub.add_parser(
        "trace", help="smoothed mean-difficulty table from a finished run"
    )
    p_trace.add_argument(
        "--run",
        required=True,
        help="run directory or steps.jsonl file",
    )
    p_trace.add_argument(
        "--window",
        type=int,
        default=int(_env_default("window", 20)),
        help="centered moving-average window (default 20)",
    )
    p_trace.add_argument(
        "--out",
        type=str,
        default=_env_default("out", "-"),
        help="output file, - for stdout (two tab-separated columns: step, value)",
    )
    p_trace.set_defaults(func=_cmd_trace)

    p_serve = sub.add_parser("serve", help="serve the engine over the sidecar protocol")
    p_serve.add_argument(
        "--scenario",
        type=str,
        default=_env_default("scenario", None),
        help="build the problem registry from this scenario",
    )
    p_serve.add_argument(
        "--registry",
        type=str,
        default=_env_default("registry", None),
        help="load the problem registry from this JSONL file",
    )
    p_serve.add_argument(
        "--transport",
        type=str,
        default=_env_default("transport", "stdio"),
        help="stdio or tcp:PORT (default stdio)",
    )
    p_serve.add_argument(
        "--alpha", type=float, default=_env_default("alpha", "0.5"),
        help="Q update rate (default 0.5)",
    )
    p_serve.add_argument(
        "--tau", type=float, default=_env_default("tau", "1.0"),
        help="sampling temperature (default 1.0)",
    )
    p_serve.add_argument(
        "--batch-size", type=int, default=int(_env_default("batch-size", 64)),
        help="problems per batch (default 64)",
    )
    p_serve.add_argument(
        "--seed", type=int, default=int(_env_default("seed", 0)),
        help="engine seed (default 0)",
    )
    p_serve.add_argument(
        "--dedupe-within-batch",
        action="store_true",
        default=_env_flag("dedupe-within-batch"),
        help="redraw batch slots that repeat a problem while the pool allows",
    )
    p_serve.add_argument(
        "--log", type=str, default=_env_default("log", None),
        help="append step records to this file",
    )
    p_serve.add_argument(
        "--checkpoint", type=str, default=_env_default("checkpoint", None),
        help="write a checkpoint here whenever a connection ends",
    )
    p_serve.add_argument(
        "--restore", type=str, default=_env_default("restore", None),
        help="start from this checkpoint (engine flags above are then ignored)",
    )
    p_serve.add_argument(
        "--max-connections", type=int, default=None,
        help="serve this many connections then exit (default: until EOF/forever)",
    )
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CurriculumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
