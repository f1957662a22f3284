"""Command-line front end: single runs, sweeps, witness search, validation.

Exit codes: 0 success, 1 usage or input-file error, 2 runtime failure
(including tripped invariant assertions).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .connectivity import critical_radius, epsilon_for_probability
from .core import load_scenario, scenario_to_dict
from .engine import InvariantViolation, NonTermination, SimConfig, run
from .harness import (
    ExperimentPlan,
    find_nonmonotone_witness,
    load_plan,
    quality,
    run_experiment,
    write_results_csv,
    write_summary_json,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here is 1 for usage errors
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt", type=float, default=1.0, help="step length in seconds (default 1)")
    p.add_argument("--max-time", type=float, default=None, help="termination guard override")
    p.add_argument("--seed", type=int, default=0, help="engine seed (default 0)")
    p.add_argument(
        "--assert",
        dest="assertion_level",
        choices=("off", "cheap", "full"),
        default="cheap",
        help="runtime invariant checking level (default cheap)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="commfleet", description=__doc__)
    parser.add_argument("--version", action="version", version=f"commfleet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario file under one strategy")
    p_run.add_argument("--scenario", required=True, help="scenario JSON file")
    p_run.add_argument("--strategy", required=True, choices=("rba", "ststc", "greedy"))
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--trajectory-stride", type=int, default=0,
                       help="sample robot positions every N steps (0 = off)")
    _add_engine_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="run a Monte Carlo experiment plan")
    p_sweep.add_argument("--plan", required=True, help="experiment plan JSON file")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")

    p_wit = sub.add_parser("witness", help="search for a range-nonmonotonicity witness")
    p_wit.add_argument("--n", type=int, required=True)
    p_wit.add_argument("--m", type=int, required=True)
    p_wit.add_argument("--edge", type=float, required=True)
    p_wit.add_argument("--r-low", type=float, required=True)
    p_wit.add_argument("--r-high", type=float, required=True)
    p_wit.add_argument("--max-scenarios", type=int, default=500)
    p_wit.add_argument("--seed", type=int, default=0)
    p_wit.add_argument("--dt", type=float, default=1.0)
    p_wit.add_argument("--out", default=None, help="optional directory for witness.json")

    p_rad = sub.add_parser("radius", help="critical communication radius calculator")
    p_rad.add_argument("--robots", type=int, required=True)
    group = p_rad.add_mutually_exclusive_group()
    group.add_argument("--epsilon", type=float, default=5.0)
    group.add_argument("--probability", type=float, default=None,
                       help="target connectivity probability in (0,1)")
    p_rad.add_argument("--edge", type=float, required=True)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("--scenario", required=True)
    return parser


def _cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    cfg = SimConfig(
        strategy=args.strategy,
        dt=args.dt,
        max_time=args.max_time,
        assertion_level=args.assertion_level,
        seed=args.seed,
        trajectory_stride=args.trajectory_stride,
    )
    result = run(scn, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = result.to_dict()
    doc["q"] = quality(result, scn)
    doc["scenario"] = scenario_to_dict(scn)
    with open(out / "result.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "events.jsonl", "w", encoding="utf-8") as fh:
        for event in result.events:
            fh.write(event.to_json())
            fh.write("\n")
    print(f"f={result.total_f:.3f}s q={doc['q']:.4f} events={len(result.events)} -> {out}")
    return 0


def _cmd_sweep(args) -> int:
    plan = load_plan(args.plan)
    rows, records = run_experiment(plan, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(out / "results.csv", records)
    write_summary_json(out / "summary.json", plan, rows)
    for row in rows:
        print(
            f"r={row.r:9.2f} {row.strategy:7s} mean_q={row.mean_q:7.4f} "
            f"std_q={row.std_q:7.4f} runs={row.runs}"
        )
    print(f"wrote {out / 'results.csv'} and {out / 'summary.json'}")
    return 0


def _cmd_witness(args) -> int:
    witness = find_nonmonotone_witness(
        args.n,
        args.m,
        args.edge,
        [(args.r_low, args.r_high)],
        args.max_scenarios,
        args.seed,
        dt=args.dt,
    )
    if witness is None:
        print("no witness found")
        return 0
    doc = {
        "scenario_seed": witness.scenario_seed,
        "r_low": witness.r_low,
        "r_high": witness.r_high,
        "f_low": witness.f_low,
        "f_high": witness.f_high,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "witness.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_radius(args) -> int:
    eps = args.epsilon
    if args.probability is not None:
        eps = epsilon_for_probability(args.probability)
    r = critical_radius(args.robots, eps, args.edge)
    print(f"{r:.1f}")
    return 0


def _cmd_validate(args) -> int:
    scn = load_scenario(args.scenario)
    issues = []
    for label, pts in (("target", scn.targets), ("robot", scn.robot_starts)):
        for i, p in enumerate(pts):
            if not (0.0 <= p.x <= scn.edge_length and 0.0 <= p.y <= scn.edge_length):
                issues.append(f"{label} {i} at ({p.x}, {p.y}) is outside the workspace")
    if not 0 <= scn.seed < 2**64:
        issues.append("seed does not fit in 64 unsigned bits")
    if issues:
        for line in issues:
            print(line, file=sys.stderr)
        return 1
    print(f"ok: n={scn.n} m={scn.m} edge={scn.edge_length} r={scn.comm_range} seed={scn.seed}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "witness": _cmd_witness,
    "radius": _cmd_radius,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InvariantViolation, NonTermination, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
