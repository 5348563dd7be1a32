"""Command-line interface.

Subcommands:
  plan   - task and motion planning only
  insert - compliant insertion from the pre-assembly poses
  run    - full pipeline (plan, then insert); --mode selects a subset
  sweep  - Monte-Carlo robustness sweep over injected errors

Exit codes: 0 success, 1 planning failure, 2 insertion failure, 3 input error.
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .controller import SPIRAL_CENTERED, SPIRAL_LITERAL
from .scenario import ScenarioError, bundled_scenarios, load_scenario


def _add_common(p):
    p.add_argument("--scenario", required=True,
                   help="scenario file path or bundled scenario name")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario RNG seed")
    p.add_argument("--report-out", default=None, help="write the run report (TOML)")
    p.add_argument("--trace-out", default=None, help="write the controller trace (CSV)")
    p.add_argument("--dump-graph", default=None,
                   help="write the mating regrasp graph to a text file")
    p.add_argument("--spiral-mode", choices=[SPIRAL_LITERAL, SPIRAL_CENTERED],
                   default=None, help="override the spiral accumulation mode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pihsim",
        description="Dual-arm regrasp planning and compliant peg-in-hole insertion.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="plan only")
    _add_common(p_plan)

    p_insert = sub.add_parser("insert", help="insertion only (from pre-assembly poses)")
    _add_common(p_insert)

    p_run = sub.add_parser("run", help="full pipeline")
    _add_common(p_run)
    p_run.add_argument("--mode", choices=[pipeline.MODE_PLAN_ONLY,
                                          pipeline.MODE_CONTROL_ONLY,
                                          pipeline.MODE_FULL],
                       default=pipeline.MODE_FULL)

    p_sweep = sub.add_parser("sweep", help="Monte-Carlo error sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--trials", type=int, default=20)
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="parallel worker processes")

    p_list = sub.add_parser("list", help="list bundled scenarios")
    return parser


def _load(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
        scenario.planner.seed = args.seed
    return scenario


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in bundled_scenarios():
            print(name)
        return pipeline.EXIT_OK

    try:
        scenario = _load(args)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return pipeline.EXIT_INPUT_ERROR

    overrides = {}
    if args.spiral_mode:
        overrides["spiral_mode"] = args.spiral_mode

    if args.command == "sweep":
        sweep = pipeline.batch_sweep(scenario, args.trials, jobs=args.jobs,
                                     controller_overrides=overrides or None)
        text = pipeline.sweep_to_toml(sweep)
        if args.report_out:
            pipeline.write_report(text, args.report_out)
        agg = sweep["aggregate"]
        print(f"{agg['n_success']}/{agg['n_trials']} trials succeeded "
              f"(rate {agg['success_rate']:.3f})")
        return pipeline.EXIT_OK

    mode = {"plan": pipeline.MODE_PLAN_ONLY,
            "insert": pipeline.MODE_CONTROL_ONLY,
            "run": pipeline.MODE_FULL}[args.command]
    if args.command == "run":
        mode = args.mode

    report, trace = pipeline.run_pipeline(
        scenario, mode, dump_graph_path=args.dump_graph,
        controller_overrides=overrides or None)
    text = pipeline.report_to_toml(report)
    if args.report_out:
        pipeline.write_report(text, args.report_out)
    if args.trace_out and trace is not None and len(trace) > 0:
        pipeline.emit_trace_csv(trace, args.trace_out)
    print(text, end="")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
