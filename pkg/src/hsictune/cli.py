"""Command line entry point tying search, analysis, reduction, and
optimization together.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analysis as an
from . import reports
from .harness import TrialFileError, load_trials, run_random_search
from .hsic import EstimationError
from .objectives import OBJECTIVE_NAMES, build_objective
from .space import SpaceError, parse_space
from .twostep import Budgets, FixingPolicy, two_step_optimize

__all__ = ["cli", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _goal_from_args(args) -> an.GoalSet:
    if getattr(args, "goal", "best") == "best":
        return an.best_percentile(args.percentile)
    return an.worst_percentile(args.percentile)


def _load(path):
    manifest, trials = load_trials(path)
    space = parse_space(json.dumps(manifest.space))
    return manifest, space, trials


def _print_ranking(report):
    for g in report.groups:
        print(f"group {g.group.id}  (n={g.n_rows}, goal={g.n_goal})")
        bar = g.floor.value
        for name, s in g.entries:
            mark = "*" if name in g.impactful() else " "
            print(f"  {mark} {name:<24} hsic={s.value:.4e}  se={s.std_error:.1e}")
        print(f"    {'[noise floor]':<24} hsic={bar:.4e}  se={g.floor.std_error:.1e}")
    pairs = report.interacting_pairs()
    if pairs:
        print("interacting pairs:", ", ".join(f"({a},{b})" for a, b in pairs))


def _build_parser() -> _Parser:
    parser = _Parser(prog="hsic-tune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run a random search and persist trials")
    p.add_argument("--objective", required=True, choices=OBJECTIVE_NAMES)
    p.add_argument("--space", help="JSON space file (defaults to the objective's)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("analyze", help="rank hyperparameters from a trial file")
    p.add_argument("trials")
    p.add_argument("--percentile", type=float, default=0.1)
    p.add_argument("--goal", choices=("best", "worst"), default="best")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report bundle here")
    p.add_argument("--full-interactions", action="store_true")

    p = sub.add_parser("reduce", help="interval-reduction curves for parameters")
    p.add_argument("trials")
    p.add_argument("--param", action="append", required=True)
    p.add_argument("--percentile", type=float, default=0.1)
    p.add_argument("--goal", choices=("best", "worst"), default="best")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("optimize", help="two-step optimization from a trial file")
    p.add_argument("trials")
    p.add_argument("--objective", required=True, choices=OBJECTIVE_NAMES)
    p.add_argument("--mode", choices=("acc", "acc+speed"), default="acc+speed")
    p.add_argument("--budget-step1", type=int, default=25)
    p.add_argument("--budget-step2", type=int, default=25)
    p.add_argument("--init", type=int, default=10)
    p.add_argument("--percentile", type=float, default=0.1)
    p.add_argument("--speed", action="append", default=[],
                   help="name=minimize|maximize, repeatable")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the result JSON here")

    p = sub.add_parser("report", help="emit CSV/JSON plot data from a trial file")
    p.add_argument("trials")
    p.add_argument("--percentile", type=float, default=0.1)
    p.add_argument("--goal", choices=("best", "worst"), default="best")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("demo", help="run a built-in objective end to end")
    p.add_argument("name", choices=OBJECTIVE_NAMES)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--percentile", type=float, default=0.1)
    p.add_argument("--out")
    return parser


def _cmd_search(args) -> int:
    objective = build_objective(args.objective)
    space = objective.space
    if args.space:
        with open(args.space, encoding="utf-8") as fh:
            space = parse_space(fh.read())
    run_random_search(space, objective, args.n, jobs=args.jobs,
                      master_seed=args.seed, out_path=args.out)
    print(f"wrote {args.n} trials to {args.out}")
    return 0


def _goal_for_trials(trials, args):
    scores = [t.score for t in trials if t.ok]
    binary = scores and set(scores) <= {0.0, 1.0}
    if binary and getattr(args, "goal", "best") == "best":
        # indicator objectives: the goal is exactly the success set
        return an.threshold(0.5, "le")
    return _goal_from_args(args)


def _cmd_analyze(args) -> int:
    _, space, trials = _load(args.trials)
    goal = _goal_for_trials(trials, args)
    report = an.run_algorithm1(space, trials, goal, args.seed,
                               full_interactions=args.full_interactions)
    _print_ranking(report)
    if args.out:
        reports.save_report_bundle(report, args.out)
        print(f"report bundle written to {args.out}")
    return 0


def _cmd_reduce(args) -> int:
    _, space, trials = _load(args.trials)
    goal = _goal_for_trials(trials, args)
    report = an.run_algorithm1(space, trials, goal, args.seed)
    matrix = an.normalize_trials(space, trials, args.seed)
    for name in args.param:
        curve = an.interval_reduction(space.param(name), trials, matrix, goal,
                                      report.noise_floor, seed=args.seed)
        reports.save_reduction_curve(curve, args.out)
        cut = "none" if curve.cutoff is None else str(curve.cutoff)
        print(f"{name}: suggested cutoff c* = {cut}")
    return 0


def _cmd_optimize(args) -> int:
    _, space, trials = _load(args.trials)
    objective = build_objective(args.objective)
    directions = {}
    for item in args.speed:
        name, _, direction = item.partition("=")
        directions[name] = direction or "minimize"
    policy = FixingPolicy(
        mode="accuracy_and_speed" if args.mode == "acc+speed" else "accuracy_only",
        speed_directions=directions,
    )
    budgets = Budgets(args.init, args.budget_step1, args.init, args.budget_step2)
    goal = _goal_for_trials(trials, args)
    result = two_step_optimize(space, trials, objective, goal, policy,
                               budgets, seed=args.seed)
    best = result.incumbent
    print(f"fixed: {result.fixed}")
    print(f"step1 dims: {list(result.step1_dims)}  step2 dims: {list(result.step2_dims)}")
    print(f"best error: {best.score:.6g}  config: {best.config}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
    return 0


def _cmd_report(args) -> int:
    _, space, trials = _load(args.trials)
    goal = _goal_for_trials(trials, args)
    report = an.run_algorithm1(space, trials, goal, args.seed)
    reports.save_report_bundle(report, args.out)
    z = an.make_goal_flags(trials, goal)
    matrix = an.normalize_trials(space, trials, args.seed)
    reports.save_histograms(matrix, z, args.out)
    print(f"report bundle written to {args.out}")
    return 0


def _cmd_demo(args) -> int:
    objective = build_objective(args.name)
    trials = run_random_search(objective.space, objective, args.n,
                               jobs=args.jobs, master_seed=args.seed)
    scores = [t.score for t in trials if t.ok]
    binary = scores and set(scores) <= {0.0, 1.0}
    goal = an.threshold(0.5, "le") if binary else an.best_percentile(args.percentile)
    report = an.run_algorithm1(objective.space, trials, goal, args.seed)
    print(f"{args.name}: {len(trials)} trials, "
          f"{sum(t.status != 'ok' for t in trials)} not ok")
    _print_ranking(report)
    if args.out:
        reports.save_report_bundle(report, args.out)
    return 0


_COMMANDS = {
    "search": _cmd_search,
    "analyze": _cmd_analyze,
    "reduce": _cmd_reduce,
    "optimize": _cmd_optimize,
    "report": _cmd_report,
    "demo": _cmd_demo,
}


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (SpaceError, EstimationError, TrialFileError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli())
