"""Monte Carlo experiment orchestration: batches, range sweeps, aggregation.

A plan fixes (n, m, edge length, scenario count, master seed, range grid,
strategies). Scenario i draws its positions from a seed derived from
(plan.seed, i); the same seed drives the engine for every (range, strategy)
run of that scenario, so any results row can be replayed from its
scenario_seed column alone. Workers run independent jobs; aggregation is a
sequential reduce in run-index order, so parallelism never changes output.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .cmga import GaConfig
from .connectivity import critical_radius
from .core import Scenario, derive_seed, generate_scenario
from .engine import STRATEGIES, InvariantViolation, SimConfig, run
from .tours import f_mst_bound

__all__ = [
    "ExperimentPlan",
    "RunRecord",
    "AggregateRow",
    "Witness",
    "quality",
    "resolve_range_grid",
    "run_experiment",
    "find_nonmonotone_witness",
    "write_results_csv",
    "write_summary_json",
    "plan_to_dict",
    "plan_from_dict",
    "load_plan",
]

DEFAULT_FRACTIONS = tuple((i + 1) / 8 for i in range(8))

RESULTS_COLUMNS = (
    "scenario_seed",
    "n",
    "m",
    "E_l",
    "r",
    "strategy",
    "f_seconds",
    "f_mst",
    "q",
    "wall_ms",
)


@dataclass(frozen=True)
class ExperimentPlan:
    """A reproducible sweep over communication ranges.

    range_grid entries are fractions of the critical radius when range_unit
    is "rc_fraction" (the default, using epsilon), or absolute meters when
    it is "meters".
    """

    n: int
    m: int
    edge_length: float
    scenario_count: int = 100
    seed: int = 0
    range_grid: tuple[float, ...] = DEFAULT_FRACTIONS
    range_unit: str = "rc_fraction"
    strategies: tuple[str, ...] = ("rba", "ststc", "greedy")
    epsilon: float = 5.0
    dt: float = 1.0
    max_time: float | None = None
    assertion_level: str = "cheap"
    # sweeps cap stagnant solver effort by default; set stall_generations=None
    # to force the full generation budget on every solve
    ga: GaConfig = field(default_factory=lambda: GaConfig(stall_generations=60))

    def __post_init__(self):
        if self.scenario_count < 1:
            raise ValueError("scenario_count must be at least 1")
        if not self.range_grid:
            raise ValueError("range grid must be non-empty")
        if self.range_unit not in ("rc_fraction", "meters"):
            raise ValueError(f"unknown range_unit {self.range_unit!r}")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}")
        if not self.strategies:
            raise ValueError("need at least one strategy")


@dataclass(frozen=True)
class RunRecord:
    scenario_index: int
    scenario_seed: int
    n: int
    m: int
    edge_length: float
    r: float
    strategy: str
    f_seconds: float
    f_mst: float
    q: float
    wall_ms: float


@dataclass(frozen=True)
class AggregateRow:
    r: float
    strategy: str
    mean_q: float
    std_q: float
    mean_f: float
    runs: int


@dataclass(frozen=True)
class Witness:
    """A scenario where a longer range made the decentralized strategy worse."""

    scenario_seed: int
    r_low: float
    r_high: float
    f_low: float
    f_high: float


def quality(result, scn: Scenario) -> float:
    """Solution quality: total travel time over the spanning-tree lower bound."""
    bound = f_mst_bound(scn)
    if bound <= 0.0:
        raise ValueError("degenerate bound: all points coincident")
    return result.total_f / bound


def resolve_range_grid(plan: ExperimentPlan) -> tuple[float, ...]:
    """Absolute communication ranges for the plan's grid."""
    if plan.range_unit == "meters":
        return tuple(float(r) for r in plan.range_grid)
    rc = critical_radius(plan.m, plan.epsilon, plan.edge_length)
    return tuple(float(f) * rc for f in plan.range_grid)


def _sim_config(plan: ExperimentPlan, strategy: str, seed: int) -> SimConfig:
    return SimConfig(
        strategy=strategy,
        dt=plan.dt,
        max_time=plan.max_time,
        assertion_level=plan.assertion_level,
        ga=plan.ga,
        seed=seed,
    )


def _execute_run(args: tuple[ExperimentPlan, int, int, float, str]) -> RunRecord:
    plan, index, scenario_seed, r, strategy = args
    scn = generate_scenario(plan.n, plan.m, plan.edge_length, r, scenario_seed)
    started = time.perf_counter()
    result = run(scn, _sim_config(plan, strategy, scenario_seed))
    wall_ms = (time.perf_counter() - started) * 1000.0
    q = quality(result, scn)
    if q < 1.0 - 1e-9:
        raise InvariantViolation(
            f"quality {q} below 1 for seed {scenario_seed}, r={r}, strategy={strategy}"
        )
    return RunRecord(
        scenario_index=index,
        scenario_seed=scenario_seed,
        n=plan.n,
        m=plan.m,
        edge_length=plan.edge_length,
        r=r,
        strategy=strategy,
        f_seconds=result.total_f,
        f_mst=result.f_mst,
        q=q,
        wall_ms=wall_ms,
    )


def run_experiment(
    plan: ExperimentPlan, jobs: int = 1
) -> tuple[list[AggregateRow], list[RunRecord]]:
    """Run the full scenario x range x strategy grid and aggregate.

    Engine errors abort the batch; the offending scenario seed is in the
    exception message.
    """
    grid = resolve_range_grid(plan)
    specs = []
    for i in range(plan.scenario_count):
        scenario_seed = derive_seed(plan.seed, i)
        for r in grid:
            for strategy in plan.strategies:
                specs.append((plan, i, scenario_seed, r, strategy))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_execute_run, specs, chunksize=4))
    else:
        records = [_execute_run(s) for s in specs]

    rows = aggregate(records, grid, plan.strategies)
    return rows, records


def aggregate(
    records: Sequence[RunRecord], grid: Sequence[float], strategies: Sequence[str]
) -> list[AggregateRow]:
    rows = []
    for r in grid:
        for strategy in strategies:
            qs = [rec.q for rec in records if rec.r == r and rec.strategy == strategy]
            fs = [rec.f_seconds for rec in records if rec.r == r and rec.strategy == strategy]
            if not qs:
                continue
            rows.append(
                AggregateRow(
                    r=r,
                    strategy=strategy,
                    mean_q=float(np.mean(qs)),
                    std_q=float(np.std(qs)),
                    mean_f=float(np.mean(fs)),
                    runs=len(qs),
                )
            )
    return rows


def find_nonmonotone_witness(
    n: int,
    m: int,
    edge_length: float,
    r_pairs: Sequence[tuple[float, float]],
    max_scenarios: int,
    seed: int,
    *,
    dt: float = 1.0,
    ga: GaConfig | None = None,
    assertion_level: str = "cheap",
) -> Witness | None:
    """Search seeded scenarios for one where a longer range hurts.

    Returns the first scenario (in seed order) whose decentralized total
    travel time at r_high strictly exceeds the one at r_low; None when no
    witness shows up within max_scenarios. A degenerate pair (equal ranges)
    can never produce a witness and simply never matches.
    """
    for r_low, r_high in r_pairs:
        if r_low > r_high:
            raise ValueError("pairs must satisfy r_low <= r_high")
    ga = ga or GaConfig(stall_generations=60)
    for i in range(max_scenarios):
        scenario_seed = derive_seed(seed, i)
        for r_low, r_high in r_pairs:
            base = generate_scenario(n, m, edge_length, r_low, scenario_seed)
            cfg = SimConfig(
                strategy="ststc", dt=dt, assertion_level=assertion_level, ga=ga, seed=scenario_seed
            )
            f_low = run(base, cfg).total_f
            f_high = run(replace(base, comm_range=r_high), cfg).total_f
            if f_high > f_low + 1e-6:
                return Witness(
                    scenario_seed=scenario_seed,
                    r_low=r_low,
                    r_high=r_high,
                    f_low=f_low,
                    f_high=f_high,
                )
    return None


# ---------- output files ----------


def write_results_csv(path, records: Sequence[RunRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    rec.scenario_seed,
                    rec.n,
                    rec.m,
                    repr(rec.edge_length),
                    repr(rec.r),
                    rec.strategy,
                    repr(rec.f_seconds),
                    repr(rec.f_mst),
                    repr(rec.q),
                    f"{rec.wall_ms:.3f}",
                ]
            )


def write_summary_json(path, plan: ExperimentPlan, rows: Sequence[AggregateRow]) -> None:
    doc = {
        "plan": plan_to_dict(plan),
        "aggregates": [
            {
                "r": row.r,
                "strategy": row.strategy,
                "mean_q": row.mean_q,
                "std_q": row.std_q,
                "mean_f": row.mean_f,
                "runs": row.runs,
            }
            for row in rows
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def plan_to_dict(plan: ExperimentPlan) -> dict:
    d = {
        "n": plan.n,
        "m": plan.m,
        "edge_length": plan.edge_length,
        "scenario_count": plan.scenario_count,
        "seed": plan.seed,
        "range_grid": list(plan.range_grid),
        "range_unit": plan.range_unit,
        "strategies": list(plan.strategies),
        "epsilon": plan.epsilon,
        "dt": plan.dt,
        "max_time": plan.max_time,
        "assertion_level": plan.assertion_level,
        "ga": {
            "population_count": plan.ga.population_count,
            "population_size": plan.ga.population_size,
            "generations": plan.ga.generations,
            "migration_interval": plan.ga.migration_interval,
            "migration_count": plan.ga.migration_count,
            "crossover_rate": plan.ga.crossover_rate,
            "mutation_rate": plan.ga.mutation_rate,
            "elitism_count": plan.ga.elitism_count,
            "seed": plan.ga.seed,
            "stall_generations": plan.ga.stall_generations,
        },
    }
    return d


def plan_from_dict(d: dict) -> ExperimentPlan:
    try:
        ga = GaConfig(**d["ga"]) if "ga" in d else GaConfig(stall_generations=60)
        return ExperimentPlan(
            n=int(d["n"]),
            m=int(d["m"]),
            edge_length=float(d["edge_length"]),
            scenario_count=int(d.get("scenario_count", 100)),
            seed=int(d.get("seed", 0)),
            range_grid=tuple(float(x) for x in d.get("range_grid", DEFAULT_FRACTIONS)),
            range_unit=str(d.get("range_unit", "rc_fraction")),
            strategies=tuple(d.get("strategies", ("rba", "ststc", "greedy"))),
            epsilon=float(d.get("epsilon", 5.0)),
            dt=float(d.get("dt", 1.0)),
            max_time=(None if d.get("max_time") is None else float(d["max_time"])),
            assertion_level=str(d.get("assertion_level", "cheap")),
            ga=ga,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed plan document: {exc}") from exc


def load_plan(path) -> ExperimentPlan:
    with open(path, encoding="utf-8") as fh:
        return plan_from_dict(json.load(fh))


def save_plan(plan: ExperimentPlan, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plan_to_dict(plan), fh, indent=2, sort_keys=True)
        fh.write("\n")
