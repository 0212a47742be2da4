"""Command line entry points.

Subcommands: ``gen`` (emit a scenario file), ``plan`` (plan an attack),
``simulate`` (Monte Carlo evaluation of a plan), ``experiment`` (grid runs
with CSV output) and ``calibrate`` (fit the worked-example update chains).

Exit codes: 0 success, 1 usage error, 2 invalid scenario or plan,
3 resource bound exceeded.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    BenchmarkParams,
    CalibrationError,
    ResourceBoundError,
    build_global_pomdp,
    calibrate_chains,
    experiment_csv,
    generate_benchmark,
    random_scenario,
    run_experiment,
    worked_example_scenario,
)
from .netmodel import ScenarioError
from .planner import ComponentSizeError, plan_attack
from .report import ReportError, format_plan, plan_from_yaml, plan_to_yaml
from .scenario import emit_scenario, parse_scenario
from .sim import SimulationError, format_trace, monte_carlo, rollout, sample_ground_truth, scenario_beliefs
from .solver import solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_RESOURCE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _read_scenario(path: str):
    with open(path) as fh:
        return parse_scenario(fh.read())


def build_parser() -> _Parser:
    parser = _Parser(prog="pentestplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a scenario file")
    gen.add_argument(
        "--preset",
        choices=["benchmark", "random", "example"],
        default="benchmark",
        help="scenario family (default: benchmark)",
    )
    gen.add_argument("--machines", type=int, default=10)
    gen.add_argument("--exploits", type=int, default=13)
    gen.add_argument("--days", type=int, default=50, help="days since the last pentest")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=None, help="output file (default: stdout)")

    plan = sub.add_parser("plan", help="plan an attack on a scenario")
    plan.add_argument("scenario")
    plan.add_argument("--seed", type=int, default=0, help="accepted for uniformity; planning is deterministic")
    plan.add_argument("--out", default=None, help="write the plan as YAML")
    plan.add_argument("--report", action="store_true", help="print the readable report")
    plan.add_argument("--component-size-limit", type=int, default=12)
    plan.add_argument(
        "--baseline",
        action="store_true",
        help="solve the exact whole-network model instead (value only)",
    )
    plan.add_argument("--max-global-states", type=int, default=200_000)

    simulate = sub.add_parser("simulate", help="Monte Carlo evaluation of a plan")
    simulate.add_argument("scenario")
    simulate.add_argument("plan", help="plan YAML produced by the plan subcommand")
    simulate.add_argument("--rollouts", type=int, default=1000)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--trace", action="store_true", help="print one rollout trace")

    experiment = sub.add_parser("experiment", help="grid runs over benchmark sizes")
    experiment.add_argument("--mode", choices=["decomposed", "global", "both"], default="decomposed")
    experiment.add_argument("--machines", type=int, nargs="+", default=[1, 2, 3])
    experiment.add_argument("--exploits", type=int, nargs="+", default=[1, 2, 3])
    experiment.add_argument("--repetitions", type=int, default=2000)
    experiment.add_argument("--days", type=int, default=50)
    experiment.add_argument("--seed", type=int, default=0)
    experiment.add_argument("--max-global-states", type=int, default=200_000)
    experiment.add_argument("--component-size-limit", type=int, default=12)
    experiment.add_argument("--out", default=None, help="CSV output file (default: stdout)")

    calibrate = sub.add_parser("calibrate", help="fit the worked-example update chains")
    calibrate.add_argument(
        "--emit-scenario", action="store_true", help="emit the calibrated scenario file"
    )
    calibrate.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the fit is deterministic")
    calibrate.add_argument("--out", default=None)
    return parser


def _cmd_gen(args) -> int:
    if args.preset == "benchmark":
        spec = generate_benchmark(
            BenchmarkParams(
                machines=args.machines,
                exploits=args.exploits,
                elapsed_days=args.days,
                seed=args.seed,
            )
        )
    elif args.preset == "random":
        spec = random_scenario(args.seed, max_machines=args.machines, max_exploits=args.exploits)
    else:
        spec = worked_example_scenario()
    _write(emit_scenario(spec), args.out)
    return EXIT_OK


def _cmd_plan(args) -> int:
    spec = _read_scenario(args.scenario)
    if args.baseline:
        gp = build_global_pomdp(spec, max_states=args.max_global_states)
        result = solve(gp.pomdp)
        print(f"value {result.value:.6f}")
        return EXIT_OK
    plan = plan_attack(spec, component_size_limit=args.component_size_limit)
    if args.out is not None:
        _write(plan_to_yaml(plan), args.out)
    if args.report or args.out is None:
        print(format_plan(plan))
    else:
        print(f"value {plan.value:.6f}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = _read_scenario(args.scenario)
    with open(args.plan) as fh:
        plan = plan_from_yaml(fh.read(), spec.actions)
    if args.trace:
        truth = sample_ground_truth(scenario_beliefs(spec), args.seed)
        print(format_trace(rollout(spec, plan, truth), args.seed))
        return EXIT_OK
    mean, stderr = monte_carlo(spec, plan, args.rollouts, args.seed)
    print(f"mean {mean:.6f} stderr {stderr:.6f} rollouts {args.rollouts}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    cells = run_experiment(
        args.mode,
        args.machines,
        args.exploits,
        repetitions=args.repetitions,
        elapsed_days=args.days,
        seed=args.seed,
        max_global_states=args.max_global_states,
        component_size_limit=args.component_size_limit,
    )
    _write(experiment_csv(cells), args.out)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    result = calibrate_chains()
    if args.emit_scenario:
        _write(emit_scenario(worked_example_scenario(result)), args.out)
        return EXIT_OK
    lines = [
        f"protection enable rate per day: {result.dep_enable_daily:.4f}",
        f"service A keep rate per day:    {result.sa_keep_daily:.4f}",
        f"service A patch share:          {result.sa_patch_share:.4f}",
        f"service B keep rate per day:    {result.cau_keep_daily:.4f}",
        f"achieved at day {result.days}: "
        f"enabled={result.achieved[0]:.4f} "
        f"exploit|open={result.achieved[1]:.4f} "
        f"exploit|open,failed={result.achieved[2]:.4f}",
    ]
    _write("\n".join(lines), args.out)
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "plan": _cmd_plan,
    "simulate": _cmd_simulate,
    "experiment": _cmd_experiment,
    "calibrate": _cmd_calibrate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ResourceBoundError, ComponentSizeError) as exc:
        print(f"resource bound exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ScenarioError, ReportError, SimulationError, CalibrationError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
