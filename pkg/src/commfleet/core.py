"""Geometry primitives, scenarios, seeded randomness, and shared result records.

Units: one unit system throughout. Coordinates are meters, robots move at
1 m/s, so every time quantity in seconds is numerically a distance in meters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Point2D",
    "Scenario",
    "VisitRecord",
    "Event",
    "SimResult",
    "distance",
    "center_of_gravity",
    "generate_scenario",
    "substream",
    "derive_seed",
    "scenario_to_dict",
    "scenario_from_dict",
    "save_scenario",
    "load_scenario",
]


@dataclass(frozen=True)
class Point2D:
    """A position in the workspace, meters."""

    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Scenario:
    """A problem instance: workspace, targets, robot starts, range, and seed.

    Target ids are indices 0..n-1 into ``targets``; robot ids 0..m-1 into
    ``robot_starts``.
    """

    edge_length: float
    targets: tuple[Point2D, ...]
    robot_starts: tuple[Point2D, ...]
    comm_range: float
    seed: int

    def __post_init__(self):
        if len(self.targets) < 1 or len(self.robot_starts) < 1:
            raise ValueError("scenario needs at least one target and one robot")
        if self.edge_length <= 0:
            raise ValueError("edge_length must be positive")
        if self.comm_range < 0:
            raise ValueError("comm_range must be nonnegative")
        for p in (*self.targets, *self.robot_starts):
            if not (math.isfinite(p.x) and math.isfinite(p.y)):
                raise ValueError("non-finite coordinate")

    @property
    def n(self) -> int:
        return len(self.targets)

    @property
    def m(self) -> int:
        return len(self.robot_starts)


@dataclass(frozen=True)
class VisitRecord:
    """One arrival of a robot at a target. Targets may be visited repeatedly."""

    target_id: int
    robot_id: int
    time: float


@dataclass(frozen=True)
class Event:
    """An entry in the run's event log.

    kind is one of: meeting, reassignment, visit, stop, restart.
    """

    t: float
    kind: str
    robots: tuple[int, ...]
    target: int | None = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "kind": self.kind,
                "robots": list(self.robots),
                "target": self.target,
                "detail": self.detail,
            },
            sort_keys=True,
        )


@dataclass(frozen=True)
class SimResult:
    """Outcome of one simulation run.

    per_robot_time holds each robot's travel time (distance moved at unit
    speed); total_f is their sum, the objective value. duration is the
    simulated wall-clock at termination, which can exceed total_f because
    robots pause at waypoints for the remainder of a step and may wait.
    """

    strategy: str
    seed: int
    per_robot_time: tuple[float, ...]
    total_f: float
    duration: float
    f_mst: float
    visits: tuple[VisitRecord, ...]
    events: tuple[Event, ...]
    trajectories: dict[int, tuple[tuple[float, float, float], ...]] | None = None
    check_counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "strategy": self.strategy,
            "seed": self.seed,
            "per_robot_time": list(self.per_robot_time),
            "total_f": self.total_f,
            "duration": self.duration,
            "f_mst": self.f_mst,
            "visits": [
                {"target": v.target_id, "robot": v.robot_id, "time": v.time}
                for v in self.visits
            ],
            "check_counts": dict(self.check_counts),
        }
        if self.trajectories is not None:
            d["trajectories"] = {
                str(j): [list(s) for s in samples]
                for j, samples in self.trajectories.items()
            }
        return d


def distance(a: Point2D, b: Point2D) -> float:
    """Euclidean distance in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


def center_of_gravity(targets: Sequence[Point2D]) -> Point2D:
    """Component-wise mean of the target positions."""
    if len(targets) == 0:
        raise ValueError("no targets")
    return Point2D(
        sum(p.x for p in targets) / len(targets),
        sum(p.y for p in targets) / len(targets),
    )


def substream(*keys: int) -> np.random.Generator:
    """A PCG64 generator keyed by a tuple of integers.

    Identical keys give bit-identical streams on every platform; distinct
    keys give statistically independent streams. Used for per-scenario and
    per-solve substreams in Monte Carlo batches.
    """
    return np.random.default_rng(np.random.SeedSequence(list(keys)))


def derive_seed(*keys: int) -> int:
    """A stable 64-bit seed derived from a tuple of integers."""
    ss = np.random.SeedSequence(list(keys))
    return int(ss.generate_state(1, np.uint64)[0])


def generate_scenario(n: int, m: int, edge_length: float, comm_range: float, seed: int) -> Scenario:
    """Draw n targets and m robot starts i.i.d. uniform over the square.

    Reproducible: the same arguments give a bit-identical scenario.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    if edge_length <= 0:
        raise ValueError("edge_length must be positive")
    if comm_range < 0:
        raise ValueError("comm_range must be nonnegative")
    rng = substream(int(seed))
    pts = rng.uniform(0.0, edge_length, size=(n + m, 2))
    targets = tuple(Point2D(float(x), float(y)) for x, y in pts[:n])
    robots = tuple(Point2D(float(x), float(y)) for x, y in pts[n:])
    return Scenario(
        edge_length=float(edge_length),
        targets=targets,
        robot_starts=robots,
        comm_range=float(comm_range),
        seed=int(seed),
    )


# ---------- scenario file format ----------
# {"edge_length": E, "comm_range": r, "seed": s,
#  "targets": [[x, y], ...], "robots": [[x, y], ...]}


def scenario_to_dict(scn: Scenario) -> dict:
    return {
        "edge_length": scn.edge_length,
        "comm_range": scn.comm_range,
        "seed": scn.seed,
        "targets": [[p.x, p.y] for p in scn.targets],
        "robots": [[p.x, p.y] for p in scn.robot_starts],
    }


def scenario_from_dict(d: dict) -> Scenario:
    try:
        targets = tuple(Point2D(float(x), float(y)) for x, y in d["targets"])
        robots = tuple(Point2D(float(x), float(y)) for x, y in d["robots"])
        return Scenario(
            edge_length=float(d["edge_length"]),
            targets=targets,
            robot_starts=robots,
            comm_range=float(d["comm_range"]),
            seed=int(d["seed"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scenario document: {exc}") from exc


def save_scenario(scn: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scn), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def points_in_square(points: Iterable[Point2D], edge_length: float, tol: float = 0.0) -> bool:
    """True when every point lies inside [0, edge_length]^2 (with slack tol)."""
    lo, hi = -tol, edge_length + tol
    return all(lo <= p.x <= hi and lo <= p.y <= hi for p in points)
