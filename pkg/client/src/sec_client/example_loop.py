"""Runnable toy trainer loop against a curriculum sidecar.

Spawns a `sec-curriculum serve` subprocess, then plays the trainer's
side of the protocol: fetch a batch, roll out the toy learner on it,
report mean absolute advantages, repeat.  Flags mirror the server
harness where they are meaningful client-side.

    python3 -m sec_client.example_loop --steps 100 --batch-size 16 --seed 3

The loop starts at whatever step the server greets with, so pointing it
at a server restored from a checkpoint continues the run (the toy's own
skill state is process-local and starts fresh; a real trainer owns its
model state the same way).
"""

from __future__ import annotations

import argparse
import shlex
import sys
from importlib import resources

from . import wire
from .errors import ClientError
from .session import connect
from .toy import ESTIMATORS, ToyLearner, load_toy_scenario


def default_scenario_path() -> str:
    ref = resources.files(__package__).joinpath("scenarios").joinpath("toy-3lvl.json")
    with resources.as_file(ref) as path:
        return str(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sec-client-example",
        description="Toy trainer loop driving a curriculum server over stdio.",
    )
    parser.add_argument(
        "--scenario",
        default=None,
        help="scenario JSON file for the toy learner and the server "
        "(default: the packaged 3-level toy scenario)",
    )
    parser.add_argument("--steps", type=int, default=100, help="training steps (default 100)")
    parser.add_argument("--batch-size", type=int, default=16, help="problems per step (default 16)")
    parser.add_argument("--alpha", type=float, default=0.5, help="server Q update rate (default 0.5)")
    parser.add_argument("--tau", type=float, default=1.0, help="server sampling temperature (default 1.0)")
    parser.add_argument("--seed", type=int, default=0, help="seed for server draws and toy rollouts (default 0)")
    parser.add_argument(
        "--estimator", choices=ESTIMATORS, default="grpo", help="advantage estimator (default grpo)"
    )
    parser.add_argument("--rollouts", type=int, default=None, help="override the scenario's rollouts per problem")
    parser.add_argument(
        "--dedupe-within-batch",
        action="store_true",
        help="ask the server to redraw batch slots that repeat a problem",
    )
    parser.add_argument("--log", default=None, help="server-side step log file")
    parser.add_argument(
        "--server-cmd",
        default="sec-curriculum",
        help="server command to spawn, split shell-style (default sec-curriculum)",
    )
    return parser


def server_argv(args: argparse.Namespace, scenario_path: str) -> list[str]:
    argv = shlex.split(args.server_cmd) + [
        "serve",
        "--scenario",
        scenario_path,
        "--batch-size",
        str(args.batch_size),
        "--seed",
        str(args.seed),
        "--alpha",
        str(args.alpha),
        "--tau",
        str(args.tau),
        "--transport",
        "stdio",
    ]
    if args.dedupe_within_batch:
        argv.append("--dedupe-within-batch")
    if args.log:
        argv.extend(["--log", args.log])
    return argv


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    scenario_path = args.scenario or default_scenario_path()
    scenario = load_toy_scenario(scenario_path)
    if args.rollouts is not None:
        scenario.rollouts = args.rollouts
    learner = ToyLearner(scenario, args.seed, args.estimator)
    try:
        with connect(server_argv(args, scenario_path)) as session:
            for _ in range(session.step, args.steps):
                entries = session.next_batch()
                values = learner.batch_advantages(entries)
                learner.train(entries, values)
                session.report_advantages(values)
            summary = {
                "steps": session.step,
                "final_q": [list(pair) for pair in session.snapshot()],
                "success_probability": learner.evaluate(),
            }
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(wire.emit_json(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
