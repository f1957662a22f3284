"""Discrete-time fleet simulation under three assignment strategies.

Strategies:
  rba    - all robots converge on the targets' center of gravity until the
           fleet is one connected component, then an elected leader divides
           every target centrally and robots execute their routes.
  ststc  - every robot starts on the cheapest ride of a shared closed tour
           over all targets; connected subgroups merge what they know each
           step and re-divide a cooperative target set whenever the group's
           membership changes, adopting the new division only if it strictly
           reduces the group's planned remaining time.
  greedy - robots chase the nearest target they believe unvisited and only
           talk when connected robots contest the same target.

A run is strictly sequential and deterministic for a given (scenario,
config): identical inputs give byte-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cmga import AssignmentProblem, GaConfig, solve
from .connectivity import build_graph
from .core import (
    Event,
    Point2D,
    Scenario,
    SimResult,
    VisitRecord,
    center_of_gravity,
    derive_seed,
    distance,
)
from .tours import christofides, distance_matrix, f_mst_bound, initial_route_on_tour

__all__ = [
    "STRATEGIES",
    "SimConfig",
    "RobotInfoTuple",
    "FleetState",
    "InvariantViolation",
    "NonTermination",
    "step",
    "run",
    "run_rba",
    "run_ststc",
    "run_greedy",
    "cooperative_targets",
]

STRATEGIES = ("rba", "ststc", "greedy")
ASSERTION_LEVELS = ("off", "cheap", "full")

_SNAP = 1e-9


class InvariantViolation(AssertionError):
    """A runtime check of the model's guarantees failed; the run is aborted."""


class NonTermination(RuntimeError):
    """The non-termination guard tripped before all targets were visited."""


@dataclass(frozen=True)
class SimConfig:
    strategy: str
    dt: float = 1.0
    max_time: float | None = None  # None: 2 * m * (sqrt(2)*E + 1.5*L(tour))
    assertion_level: str = "cheap"
    ga: GaConfig = field(default_factory=GaConfig)
    seed: int = 0
    trajectory_stride: int = 0
    # stopped robots only receive new work when a moving robot is present in
    # the component; information still flows between any in-range pair
    restart_requires_moving_peer: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.assertion_level not in ASSERTION_LEVELS:
            raise ValueError(f"unknown assertion level {self.assertion_level!r}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass
class RobotInfoTuple:
    """The information tuple a robot carries: id, position, ordered route,
    met-robot flags, and per-target visited-status beliefs.

    Beliefs are never wrong, only stale: a set status bit implies the target
    really was visited. Planned completion time is derived on demand as
    current time plus remaining route length (unit speed).
    """

    robot_id: int
    position: Point2D
    route: list[int]
    met: np.ndarray  # (m,) bool, met[self] is True
    status: np.ndarray  # (n,) bool
    moving: bool = True
    traveled: float = 0.0
    at_rendezvous: bool = False


@dataclass
class FleetState:
    now: float
    robots: list[RobotInfoTuple]
    visited_truth: np.ndarray  # (n,) bool, ground truth
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    visits: list[VisitRecord] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    prev_components: set[frozenset[int]] | None = None
    rba_assigned: bool = False
    rendezvous: Point2D | None = None
    solve_count: int = 0
    step_count: int = 0
    check_counts: dict = field(default_factory=dict)
    trajectories: dict[int, list[tuple[float, float, float]]] | None = None

    def all_stopped(self) -> bool:
        return not any(r.moving for r in self.robots)

    def done(self) -> bool:
        return bool(self.visited_truth.all()) and self.all_stopped()


def _count(state: FleetState, key: str) -> None:
    state.check_counts[key] = state.check_counts.get(key, 0) + 1


def remaining_route_length(robot: RobotInfoTuple, targets: Sequence[Point2D]) -> float:
    """Planned remaining travel time of the robot's current route."""
    if not robot.route:
        return 0.0
    total = distance(robot.position, targets[robot.route[0]])
    for a, b in zip(robot.route, robot.route[1:]):
        total += distance(targets[a], targets[b])
    return total


def cooperative_targets(
    component: Sequence[int],
    never_met: dict[int, bool],
    remaining: dict[int, float],
    routes: dict[int, Sequence[int]],
) -> list[int]:
    """The target set a connected subgroup's leader divides.

    never_met flags reflect the instant before the group merged its
    met-flags. When some member has never met anyone and the veterans'
    summed remaining time is at least that member's, the fresh member's
    route (which covers everything not known visited) is divided; otherwise
    the union of the veterans' routes is.
    """
    r1 = [j for j in component if never_met[j]]
    r2 = [j for j in component if not never_met[j]]
    if r1:
        p = min(r1, key=lambda j: (remaining[j], j))
        if not r2 or sum(remaining[k] for k in r2) >= remaining[p]:
            return sorted(set(routes[p]))
    if not r2:
        return []
    return sorted(set().union(*(set(routes[k]) for k in r2)))


# ---------- initialization ----------


def _init_state(scn: Scenario, cfg: SimConfig) -> FleetState:
    n, m = scn.n, scn.m
    robots = [
        RobotInfoTuple(
            robot_id=j,
            position=scn.robot_starts[j],
            route=[],
            met=np.eye(m, dtype=bool)[j].copy(),
            status=np.zeros(n, dtype=bool),
        )
        for j in range(m)
    ]
    state = FleetState(
        now=0.0,
        robots=robots,
        visited_truth=np.zeros(n, dtype=bool),
        rng=np.random.default_rng(np.random.SeedSequence([cfg.seed])),
    )
    if cfg.trajectory_stride > 0:
        state.trajectories = {j: [] for j in range(m)}
        _sample_trajectories(state)
    return state


def _sample_trajectories(state: FleetState) -> None:
    if state.trajectories is None:
        return
    for r in state.robots:
        state.trajectories[r.robot_id].append((state.now, r.position.x, r.position.y))


# ---------- motion ----------


def _waypoint(state: FleetState, cfg: SimConfig, robot: RobotInfoTuple, scn: Scenario):
    if cfg.strategy == "rba" and not state.rba_assigned:
        return state.rendezvous, None
    if robot.route:
        tid = robot.route[0]
        return scn.targets[tid], tid
    return None, None


def _advance_motion(state: FleetState, scn: Scenario, cfg: SimConfig) -> None:
    """Move every moving robot up to dt meters toward its current waypoint.

    Arrival within the step snaps to the waypoint; the robot then pauses for
    the remainder of the step. Visit timestamps are exact arrival times.
    """
    t0 = state.now
    stop_when_done = cfg.strategy != "greedy"
    for robot in state.robots:
        if not robot.moving:
            continue
        wp, tid = _waypoint(state, cfg, robot, scn)
        if wp is None:
            continue
        d = distance(robot.position, wp)
        if d <= cfg.dt + _SNAP:
            robot.position = wp
            robot.traveled += d
            t_arr = t0 + d
            if tid is None:  # rendezvous
                robot.at_rendezvous = True
                robot.moving = False
                state.events.append(
                    Event(t_arr, "stop", (robot.robot_id,), detail={"reason": "rendezvous-wait"})
                )
            else:
                robot.route.pop(0)
                robot.status[tid] = True
                state.visited_truth[tid] = True
                state.visits.append(VisitRecord(tid, robot.robot_id, t_arr))
                state.events.append(Event(t_arr, "visit", (robot.robot_id,), target=tid))
                if stop_when_done and not robot.route:
                    robot.moving = False
                    state.events.append(
                        Event(t_arr, "stop", (robot.robot_id,), detail={"reason": "route-complete"})
                    )
        else:
            f = cfg.dt / d
            robot.position = Point2D(
                robot.position.x + (wp.x - robot.position.x) * f,
                robot.position.y + (wp.y - robot.position.y) * f,
            )
            robot.traveled += cfg.dt
    state.now = t0 + cfg.dt


# ---------- strategy phases ----------


def _components_at(state: FleetState, scn: Scenario) -> tuple[np.ndarray, list[list[int]]]:
    g = build_graph([r.position for r in state.robots], scn.comm_range)
    seen = [False] * g.m
    comps: list[list[int]] = []
    for s in range(g.m):
        if seen[s]:
            continue
        comp = [s]
        seen[s] = True
        stack = [s]
        while stack:
            j = stack.pop()
            for k in np.flatnonzero(g.adjacency[j]):
                k = int(k)
                if not seen[k]:
                    seen[k] = True
                    comp.append(k)
                    stack.append(k)
        comps.append(sorted(comp))
    return g.adjacency, comps


def _elect_leader(
    members: Sequence[int], adjacency: np.ndarray, rng: np.random.Generator
) -> int:
    degrees = {j: int(adjacency[j][list(members)].sum()) for j in members}
    top = max(degrees.values())
    cands = sorted(j for j in members if degrees[j] == top)
    return int(cands[int(rng.integers(0, len(cands)))])


def _run_division(
    state: FleetState,
    scn: Scenario,
    cfg: SimConfig,
    members: list[int],
    coop: list[int],
    adjacency: np.ndarray,
) -> None:
    robots = state.robots
    leader = _elect_leader(members, adjacency, state.rng)
    problem = AssignmentProblem(
        robot_ids=tuple(members),
        robot_starts=tuple(robots[j].position for j in members),
        target_ids=tuple(coop),
        target_points=tuple(scn.targets[t] for t in coop),
    )
    ga_seed = derive_seed(cfg.seed, state.solve_count)
    state.solve_count += 1
    proposal = solve(problem, cfg.ga.with_seed(ga_seed))
    incumbent = sum(remaining_route_length(robots[j], scn.targets) for j in members)
    if proposal.total_cost < incumbent:
        for j in members:
            new_route = list(proposal.routes[j])
            robots[j].route = new_route
            if new_route and not robots[j].moving:
                robots[j].moving = True
                robots[j].at_rendezvous = False
                state.events.append(Event(state.now, "restart", (j,)))
            elif not new_route and robots[j].moving:
                robots[j].moving = False
                state.events.append(
                    Event(state.now, "stop", (j,), detail={"reason": "reassigned-empty"})
                )
        state.events.append(
            Event(
                state.now,
                "reassignment",
                tuple(members),
                detail={
                    "leader": leader,
                    "targets": list(coop),
                    "cost": proposal.total_cost,
                    "previous_cost": incumbent,
                },
            )
        )


def _ststc_phase(state: FleetState, scn: Scenario, cfg: SimConfig) -> None:
    adjacency, comps = _components_at(state, scn)
    robots = state.robots
    full = cfg.assertion_level == "full"
    for comp in comps:
        if len(comp) < 2:
            continue
        before = sum(remaining_route_length(robots[j], scn.targets) for j in comp)
        never_met = {j: bool(robots[j].met.sum() == 1) for j in comp}
        # information exchange happens every step the group is connected:
        # statuses union, routes drop known-visited targets, met-flags accrue
        merged = np.zeros_like(robots[comp[0]].status)
        for j in comp:
            merged |= robots[j].status
        for j in comp:
            robots[j].status = merged.copy()
            pruned = [t for t in robots[j].route if not merged[t]]
            if len(pruned) != len(robots[j].route):
                robots[j].route = pruned
                if not pruned and robots[j].moving:
                    robots[j].moving = False
                    state.events.append(
                        Event(state.now, "stop", (j,), detail={"reason": "route-pruned"})
                    )
            robots[j].met[comp] = True

        changed = state.prev_components is None or frozenset(comp) not in state.prev_components
        if changed:
            state.events.append(Event(state.now, "meeting", tuple(comp)))
            may_divide = any(robots[j].moving for j in comp) or not cfg.restart_requires_moving_peer
            if may_divide:
                remaining = {j: remaining_route_length(robots[j], scn.targets) for j in comp}
                coop = cooperative_targets(
                    comp, never_met, remaining, {j: robots[j].route for j in comp}
                )
                if coop:
                    _run_division(state, scn, cfg, comp, coop, adjacency)

        if full:
            after = sum(remaining_route_length(robots[j], scn.targets) for j in comp)
            _count(state, "lemcc_nonincrease")
            if after > before + 1e-6:
                raise InvariantViolation(
                    f"component {comp} planned remaining time increased "
                    f"{before:.9f} -> {after:.9f} at t={state.now}"
                )
    state.prev_components = {frozenset(c) for c in comps}


def _rba_phase(state: FleetState, scn: Scenario, cfg: SimConfig) -> None:
    if state.rba_assigned:
        return
    g = build_graph([r.position for r in state.robots], scn.comm_range)
    adjacency, comps = g.adjacency, None
    seen = np.zeros(g.m, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        j = stack.pop()
        for k in np.flatnonzero(adjacency[j]):
            if not seen[k]:
                seen[k] = True
                stack.append(int(k))
    if not seen.all():
        return
    members = list(range(scn.m))
    state.events.append(Event(state.now, "meeting", tuple(members), detail={"fleet": "connected"}))
    leader = _elect_leader(members, adjacency, state.rng)
    problem = AssignmentProblem(
        robot_ids=tuple(members),
        robot_starts=tuple(r.position for r in state.robots),
        target_ids=tuple(range(scn.n)),
        target_points=scn.targets,
    )
    ga_seed = derive_seed(cfg.seed, state.solve_count)
    state.solve_count += 1
    assignment = solve(problem, cfg.ga.with_seed(ga_seed))
    for j in members:
        route = list(assignment.routes[j])
        robot = state.robots[j]
        robot.route = route
        if route and not robot.moving:
            robot.moving = True
            robot.at_rendezvous = False
            state.events.append(Event(state.now, "restart", (j,)))
        elif not route and robot.moving:
            robot.moving = False
            state.events.append(Event(state.now, "stop", (j,), detail={"reason": "no-assignment"}))
    state.events.append(
        Event(
            state.now,
            "reassignment",
            tuple(members),
            detail={"leader": leader, "cost": assignment.total_cost},
        )
    )
    state.rba_assigned = True


def _greedy_pick(
    robot: RobotInfoTuple, scn: Scenario, avoid: set[int] | None = None
) -> int | None:
    best = None
    best_key = None
    for t in range(scn.n):
        if robot.status[t] or (avoid and t in avoid):
            continue
        key = (distance(robot.position, scn.targets[t]), t)
        if best_key is None or key < best_key:
            best_key = key
            best = t
    return best


def _greedy_phase(state: FleetState, scn: Scenario, cfg: SimConfig) -> None:
    robots = state.robots
    # robots without a destination (start of run, or just visited) repick
    for robot in robots:
        if robot.moving and not robot.route:
            pick = _greedy_pick(robot, scn)
            if pick is None:
                robot.moving = False
                state.events.append(
                    Event(state.now, "stop", (robot.robot_id,), detail={"reason": "all-known-visited"})
                )
            else:
                robot.route = [pick]
    # connected robots contesting the same target communicate and deconflict
    _, comps = _components_at(state, scn)
    for comp in comps:
        if len(comp) < 2:
            continue
        claims: dict[int, list[int]] = {}
        for j in comp:
            if robots[j].moving and robots[j].route:
                claims.setdefault(robots[j].route[0], []).append(j)
        for dest in sorted(t for t, js in claims.items() if len(js) >= 2):
            claimants = sorted(claims[dest])
            merged = np.zeros_like(robots[claimants[0]].status)
            for j in claimants:
                merged |= robots[j].status
            for j in claimants:
                robots[j].status = merged.copy()
            if merged[dest]:
                losers = claimants
                winner = None
            else:
                winner = min(claimants, key=lambda j: (distance(robots[j].position, scn.targets[dest]), j))
                losers = [j for j in claimants if j != winner]
            state.events.append(
                Event(
                    state.now,
                    "meeting",
                    tuple(claimants),
                    target=dest,
                    detail={"winner": winner},
                )
            )
            for j in losers:
                contested = {
                    robots[k].route[0]
                    for k in comp
                    if k != j and robots[k].moving and robots[k].route
                }
                pick = _greedy_pick(robots[j], scn, avoid=contested)
                if pick is None:
                    # everything this robot still believes unvisited is already
                    # claimed by a connected peer, so it has nothing to add
                    reason = (
                        "remaining-contested"
                        if _greedy_pick(robots[j], scn) is not None
                        else "all-known-visited"
                    )
                    robots[j].route = []
                    robots[j].moving = False
                    state.events.append(Event(state.now, "stop", (j,), detail={"reason": reason}))
                else:
                    robots[j].route = [pick]


# ---------- invariant checks ----------


def _check_step_invariants(
    state: FleetState, scn: Scenario, cfg: SimConfig, prev_status: list[np.ndarray] | None
) -> None:
    if cfg.assertion_level != "full":
        return
    robots = state.robots
    _count(state, "belief_soundness")
    for r in robots:
        if (r.status & ~state.visited_truth).any():
            raise InvariantViolation(
                f"robot {r.robot_id} believes an unvisited target visited at t={state.now}"
            )
    if prev_status is not None:
        _count(state, "status_monotone")
        for r, prev in zip(robots, prev_status):
            if (prev & ~r.status).any():
                raise InvariantViolation(
                    f"robot {r.robot_id} lost a status bit at t={state.now}"
                )
    if cfg.strategy == "ststc" or (cfg.strategy == "rba" and state.rba_assigned):
        _count(state, "assignment_persistence")
        on_route = np.zeros(scn.n, dtype=bool)
        for r in robots:
            on_route[r.route] = True
        orphans = ~state.visited_truth & ~on_route
        if orphans.any():
            raise InvariantViolation(
                f"unvisited targets {np.flatnonzero(orphans).tolist()} on no route at t={state.now}"
            )


def _check_final_invariants(state: FleetState, scn: Scenario, cfg: SimConfig, f_mst: float) -> None:
    if cfg.assertion_level == "off":
        return
    total_f = sum(r.traveled for r in state.robots)
    _count(state, "coverage")
    if not state.visited_truth.all():
        raise InvariantViolation("run ended with unvisited targets")
    _count(state, "lower_bound")
    if total_f < f_mst * (1.0 - 1e-9) - 1e-9:
        raise InvariantViolation(f"total travel {total_f} beats the spanning-tree bound {f_mst}")


# ---------- run loops ----------


def step(state: FleetState, scn: Scenario, cfg: SimConfig) -> FleetState:
    """One simulation step: motion, then the strategy's communication logic."""
    prev_status = (
        [r.status.copy() for r in state.robots] if cfg.assertion_level == "full" else None
    )
    _advance_motion(state, scn, cfg)
    _strategy_phase(state, scn, cfg)
    state.step_count += 1
    if state.trajectories is not None and state.step_count % cfg.trajectory_stride == 0:
        _sample_trajectories(state)
    _check_step_invariants(state, scn, cfg, prev_status)
    return state


def _strategy_phase(state: FleetState, scn: Scenario, cfg: SimConfig) -> None:
    if cfg.strategy == "ststc":
        _ststc_phase(state, scn, cfg)
    elif cfg.strategy == "rba":
        _rba_phase(state, scn, cfg)
    else:
        _greedy_phase(state, scn, cfg)


def default_max_time(scn: Scenario, tour_length: float) -> float:
    """Termination guard: twice m * (workspace diagonal + 1.5 * tour length)."""
    return 2.0 * scn.m * (math.sqrt(2.0) * scn.edge_length + 1.5 * tour_length)


def run(scn: Scenario, cfg: SimConfig) -> SimResult:
    """Simulate one scenario under cfg.strategy to completion."""
    state = _init_state(scn, cfg)
    tsp0 = christofides(distance_matrix(scn.targets))

    if cfg.strategy == "ststc":
        for robot in state.robots:
            route = initial_route_on_tour(tsp0, robot.position, scn.targets)
            robot.route = list(route.order)
    elif cfg.strategy == "rba":
        state.rendezvous = center_of_gravity(scn.targets)

    max_time = cfg.max_time if cfg.max_time is not None else default_max_time(scn, tsp0.length)

    # communication and assignment logic also runs on the initial placement
    _strategy_phase(state, scn, cfg)
    _check_step_invariants(state, scn, cfg, None)

    while not state.done():
        if state.now >= max_time:
            raise NonTermination(
                f"{cfg.strategy} run exceeded the guard of {max_time:.1f}s "
                f"(seed {scn.seed}, visited {int(state.visited_truth.sum())}/{scn.n})"
            )
        step(state, scn, cfg)

    if state.trajectories is not None:
        _sample_trajectories(state)

    f_mst = f_mst_bound(scn)
    _check_final_invariants(state, scn, cfg, f_mst)
    per_robot = tuple(r.traveled for r in state.robots)
    return SimResult(
        strategy=cfg.strategy,
        seed=cfg.seed,
        per_robot_time=per_robot,
        total_f=float(sum(per_robot)),
        duration=state.now,
        f_mst=f_mst,
        visits=tuple(state.visits),
        events=tuple(state.events),
        trajectories=(
            {j: tuple(samples) for j, samples in state.trajectories.items()}
            if state.trajectories is not None
            else None
        ),
        check_counts=dict(state.check_counts),
    )


def run_rba(scn: Scenario, cfg: SimConfig | None = None, **kwargs) -> SimResult:
    return run(scn, _with_strategy(cfg, "rba", kwargs))


def run_ststc(scn: Scenario, cfg: SimConfig | None = None, **kwargs) -> SimResult:
    return run(scn, _with_strategy(cfg, "ststc", kwargs))


def run_greedy(scn: Scenario, cfg: SimConfig | None = None, **kwargs) -> SimResult:
    return run(scn, _with_strategy(cfg, "greedy", kwargs))


def _with_strategy(cfg: SimConfig | None, strategy: str, kwargs: dict) -> SimConfig:
    if cfg is None:
        return SimConfig(strategy=strategy, **kwargs)
    if cfg.strategy != strategy:
        raise ValueError(f"config strategy {cfg.strategy!r} does not match {strategy!r}")
    return cfg
