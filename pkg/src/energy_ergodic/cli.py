"""Command-line entry point.

    ergo-sim --scenario cooperative.json --horizons 14 --out run1/ --emit-svg
    ergo-sim replay run1/trace.csv

Exit status: 0 on success, 1 on a configuration or input error, 2 when the
mission loses continuity (some horizon had no agent able to explore).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import plots, scenario, traceio
from .mission import ContinuityBroken, run_mission

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CONTINUITY = 2


def _run_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergo-sim", description="Energy-aware multi-agent ergodic search.",
                                epilog="Use 'ergo-sim replay TRACE' to summarize an existing trace.")
    p.add_argument("--scenario", required=True,
                   help="scenario JSON file, or the name of a packaged scenario")
    p.add_argument("--horizons", type=int, help="override mission.horizons")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--seed", type=int, help="override solver.seed (unsigned 64-bit)")
    p.add_argument("--validate-only", action="store_true", help="check the scenario and exit")
    p.add_argument("--emit-svg", action="store_true", help="also write trajectories.svg and ergodicity.svg")
    p.add_argument("--quiet", action="store_true", help="only print errors")
    return p


def _replay_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergo-sim replay", description="Summary statistics of a trace.csv.")
    p.add_argument("trace", help="trace.csv written by a previous run")
    p.add_argument("--plan", help="plan.json giving the expected record count (default: next to the trace)")
    return p


def _err(msg: str) -> None:
    print(f"ergo-sim: error: {msg}", file=sys.stderr)


def replay(trace_path, plan_path=None) -> dict:
    """Statistics of a written trace; uses plan.json for the expected record count when present."""
    rows = traceio.read_trace(trace_path)
    plan_path = Path(plan_path) if plan_path else Path(trace_path).with_name("plan.json")
    expected = None
    if plan_path.is_file():
        doc = traceio.read_plan(plan_path)
        expected = doc["num_horizons"] * doc["steps_N"] * doc["num_agents"]
    return traceio.statistics(rows, expected)


def _replay_main(argv) -> int:
    args = _replay_parser().parse_args(argv)
    try:
        stats = replay(args.trace, args.plan)
    except (OSError, traceio.MalformedTrace, KeyError, ValueError) as exc:
        _err(f"{args.trace}: {exc}")
        return EXIT_CONFIG
    sys.stdout.write(traceio.format_statistics(stats))
    return EXIT_OK if stats["continuity"] == "OK" else EXIT_CONTINUITY


def _run_main(argv) -> int:
    args = _run_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    logging.getLogger("numba").setLevel(logging.WARNING)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        _err("--seed must be an unsigned 64-bit integer")
        return EXIT_CONFIG
    if args.horizons is not None and args.horizons < 1:
        _err("--horizons must be positive")
        return EXIT_CONFIG
    try:
        doc = scenario.load(args.scenario)
        config = scenario.build(doc, args.horizons, args.seed)
    except (scenario.ScenarioError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    if args.validate_only:
        if not args.quiet:
            print(f"{args.scenario}: valid")
        return EXIT_OK

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _err(f"cannot create {out}: {exc}")
        return EXIT_CONFIG
    try:
        log = run_mission(config)
    except ContinuityBroken as exc:
        _err(f"continuity broken at {exc}")
        return EXIT_CONTINUITY

    problem = config.problem_template
    rows = traceio.rows_from_log(log)
    traceio.write_trace(out / "trace.csv", rows)
    plan = traceio.plan_document(log, doc.get("name", Path(args.scenario).stem), problem.settings.seed,
                                 problem.horizon_T, problem.gamma, problem.epsilon)
    traceio.write_plan(out / "plan.json", plan)
    if args.emit_svg:
        plots.write_svgs(out, rows, problem.distribution, config.stations, problem.gamma)
    if not args.quiet:
        sys.stdout.write(traceio.format_statistics(traceio.statistics(rows, log.expected_records())))
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "replay":
        return _replay_main(argv[1:])
    return _run_main(argv)


if __name__ == "__main__":
    sys.exit(main())
