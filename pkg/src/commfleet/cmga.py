"""Marker-gene genetic solver for dividing targets among robots.

A chromosome is a permutation of k target genes (1..k) and g-1 marker genes
(k+1..k+g-1). Markers split the string into g runs, read left to right; the
q-th run is robot q's ordered route. Several independent populations evolve
with order crossover and swap/inversion mutation, trading their best
individuals on a ring at fixed intervals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import Point2D, distance
from .tours import distance_matrix

__all__ = [
    "GaConfig",
    "AssignmentProblem",
    "Assignment",
    "decode",
    "encode",
    "fitness",
    "solve",
    "brute_force_mvrp",
]

_BRUTE_FORCE_MAX_TARGETS = 7
_BRUTE_FORCE_MAX_ROBOTS = 3


@dataclass(frozen=True)
class GaConfig:
    """Solver budget and operator rates.

    stall_generations, when set, stops a solve early once the incumbent has
    not improved for that many generations; None always runs the full budget.
    """

    population_count: int = 4
    population_size: int = 50
    generations: int = 300
    migration_interval: int = 25
    migration_count: int = 2
    crossover_rate: float = 0.9
    mutation_rate: float = 0.15
    elitism_count: int = 2
    seed: int = 0
    stall_generations: int | None = None

    def __post_init__(self):
        if min(self.population_count, self.population_size, self.generations,
               self.migration_interval) < 1:
            raise ValueError("population/budget parameters must be positive")
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ValueError("rates must lie in [0, 1]")
        if self.elitism_count < 0 or self.migration_count < 0:
            raise ValueError("counts must be nonnegative")

    def with_seed(self, seed: int) -> "GaConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class AssignmentProblem:
    """Targets to divide among robots starting from their current positions."""

    robot_ids: tuple[int, ...]
    robot_starts: tuple[Point2D, ...]
    target_ids: tuple[int, ...]
    target_points: tuple[Point2D, ...]

    def __post_init__(self):
        if len(self.robot_ids) != len(self.robot_starts):
            raise ValueError("robot ids and starts must align")
        if len(self.target_ids) != len(self.target_points):
            raise ValueError("target ids and points must align")
        if len(self.robot_ids) < 1:
            raise ValueError("need at least one robot")

    @property
    def k(self) -> int:
        return len(self.target_ids)

    @property
    def g(self) -> int:
        return len(self.robot_ids)


@dataclass(frozen=True)
class Assignment:
    """Ordered routes per robot (global target ids) and their summed length."""

    routes: dict[int, tuple[int, ...]]
    total_cost: float


def decode(chromosome: Sequence[int], num_robots: int) -> list[list[int]]:
    """Split a chromosome at its marker genes into per-robot gene routes.

    Genes 1..k are targets, k+1..k+num_robots-1 markers. Raises on anything
    that is not a permutation of exactly those genes.
    """
    genes = [int(x) for x in chromosome]
    length = len(genes)
    k = length - (num_robots - 1)
    if k < 0 or sorted(genes) != list(range(1, length + 1)):
        raise ValueError("malformed chromosome: not a permutation of the gene set")
    routes: list[list[int]] = [[]]
    for gene in genes:
        if gene > k:
            routes.append([])
        else:
            routes[-1].append(gene)
    return routes


def encode(routes: Sequence[Sequence[int]], k: int) -> list[int]:
    """Inverse of decode: join per-robot gene routes with marker genes."""
    out: list[int] = []
    for q, seg in enumerate(routes):
        if q > 0:
            out.append(k + q)
        out.extend(int(t) for t in seg)
    return out


def fitness(chromosome: Sequence[int], problem: AssignmentProblem) -> float:
    """Total travel time of the decoded assignment, from current positions."""
    routes = decode(chromosome, problem.g)
    total = 0.0
    for q, seg in enumerate(routes):
        pos = problem.robot_starts[q]
        for gene in seg:
            nxt = problem.target_points[gene - 1]
            total += distance(pos, nxt)
            pos = nxt
    return total


class _Evaluator:
    """Vectorized fitness over a population matrix."""

    def __init__(self, problem: AssignmentProblem):
        self.k = problem.k
        self.g = problem.g
        pts = list(problem.target_points)
        self.d_tt = distance_matrix(pts)
        starts = np.array([[p.x, p.y] for p in problem.robot_starts], dtype=float)
        txy = np.array([[p.x, p.y] for p in pts], dtype=float)
        diff = starts[:, None, :] - txy[None, :, :]
        self.d_rt = np.hypot(diff[..., 0], diff[..., 1])  # (g, k)

    def __call__(self, pop: np.ndarray) -> np.ndarray:
        k = self.k
        is_t = pop <= k
        t_idx = np.clip(pop - 1, 0, k - 1)
        # robot index of each position = markers seen so far
        seg = np.cumsum(~is_t, axis=1)
        pair = is_t[:, :-1] & is_t[:, 1:]
        hop = np.where(pair, self.d_tt[t_idx[:, :-1], t_idx[:, 1:]], 0.0)
        first = is_t.copy()
        first[:, 1:] &= ~is_t[:, :-1]
        start_hop = np.where(first, self.d_rt[seg, t_idx], 0.0)
        return hop.sum(axis=1) + start_hop.sum(axis=1)


def _ox1(p1: list, p2: list, a: int, b: int, used: bytearray) -> list:
    """Order crossover: keep p1[a..b], fill the rest in p2's order after b."""
    length = len(p1)
    child = [0] * length
    for i in range(1, length + 1):
        used[i] = 0
    for i in range(a, b + 1):
        g = p1[i]
        child[i] = g
        used[g] = 1
    src = b + 1 if b + 1 < length else 0
    for pos in itertools.chain(range(b + 1, length), range(a)):
        g = p2[src]
        src = src + 1 if src + 1 < length else 0
        while used[g]:
            g = p2[src]
            src = src + 1 if src + 1 < length else 0
        child[pos] = g
        used[g] = 1
    return child


def solve(problem: AssignmentProblem, cfg: GaConfig | None = None) -> Assignment:
    """Best assignment found by the multi-population GA.

    Deterministic for a given (problem, cfg.seed). Populations evolve
    independently and exchange their best individuals on a ring every
    migration_interval generations.
    """
    cfg = cfg or GaConfig()
    if problem.k == 0:
        raise ValueError("nothing to assign")
    k, g = problem.k, problem.g
    length = k + g - 1
    evaluate = _Evaluator(problem)
    seed_seq = np.random.SeedSequence(cfg.seed)
    rngs = [np.random.default_rng(s) for s in seed_seq.spawn(cfg.population_count)]
    pops = [
        np.stack([rng.permutation(length) + 1 for _ in range(cfg.population_size)]).astype(np.int32)
        for rng in rngs
    ]
    fits = [evaluate(pop) for pop in pops]

    best_fit = math.inf
    best_ch: np.ndarray | None = None
    last_improvement = 0
    used = bytearray(length + 1)

    for pop, fit in zip(pops, fits):
        i = int(np.argmin(fit))
        if fit[i] < best_fit:
            best_fit = float(fit[i])
            best_ch = pop[i].copy()

    for gen in range(1, cfg.generations + 1):
        for p in range(cfg.population_count):
            rng = rngs[p]
            pop, fit = pops[p], fits[p]
            size = cfg.population_size
            elite_idx = np.argsort(fit, kind="stable")[: cfg.elitism_count]
            n_children = size - len(elite_idx)
            tour = rng.integers(0, size, size=(n_children, 2, 3))
            do_cx = rng.random(n_children) < cfg.crossover_rate
            cuts = np.sort(rng.integers(0, length, size=(n_children, 2)), axis=1)
            do_swap = rng.random(n_children) < cfg.mutation_rate
            swaps = rng.integers(0, length, size=(n_children, 2))
            do_inv = rng.random(n_children) < cfg.mutation_rate
            invs = np.sort(rng.integers(0, length, size=(n_children, 2)), axis=1)

            # ties in the tournaments go to the first of the sampled triple
            cand_fit = fit[tour.reshape(-1)].reshape(n_children, 2, 3)
            winners = np.take_along_axis(
                tour, cand_fit.argmin(axis=2)[:, :, None], axis=2
            )[:, :, 0]
            pop_rows = pop.tolist()
            children = []
            for c in range(n_children):
                i1, i2 = winners[c]
                if do_cx[c]:
                    child = _ox1(pop_rows[i1], pop_rows[i2], int(cuts[c, 0]), int(cuts[c, 1]), used)
                else:
                    child = pop_rows[i1].copy()
                if do_swap[c]:
                    i, j = swaps[c]
                    child[i], child[j] = child[j], child[i]
                if do_inv[c]:
                    a, b = invs[c]
                    child[a : b + 1] = child[a : b + 1][::-1]
                children.append(child)

            child_arr = np.array(children, dtype=np.int32)
            pops[p] = np.concatenate((pop[elite_idx], child_arr))
            fits[p] = np.concatenate((fit[elite_idx], evaluate(child_arr)))

        if cfg.population_count > 1 and cfg.migration_count > 0 and gen % cfg.migration_interval == 0:
            tops = []
            for p in range(cfg.population_count):
                order = np.argsort(fits[p], kind="stable")
                sel = order[: cfg.migration_count]
                tops.append((pops[p][sel].copy(), fits[p][sel].copy()))
            for p in range(cfg.population_count):
                dst = (p + 1) % cfg.population_count
                order = np.argsort(fits[dst], kind="stable")
                worst = order[::-1][: cfg.migration_count]
                pops[dst][worst] = tops[p][0]
                fits[dst][worst] = tops[p][1]

        improved = False
        for p in range(cfg.population_count):
            i = int(np.argmin(fits[p]))
            if fits[p][i] < best_fit:
                best_fit = float(fits[p][i])
                best_ch = pops[p][i].copy()
                improved = True
        if improved:
            last_improvement = gen
        elif cfg.stall_generations is not None and gen - last_improvement >= cfg.stall_generations:
            break

    assert best_ch is not None
    segments = decode([int(x) for x in best_ch], g)
    routes = {
        problem.robot_ids[q]: tuple(problem.target_ids[gene - 1] for gene in seg)
        for q, seg in enumerate(segments)
    }
    return Assignment(routes=routes, total_cost=best_fit)


def brute_force_mvrp(problem: AssignmentProblem) -> Assignment:
    """Exact minimum by enumerating every ordered division of the targets.

    Guarded to tiny instances; the per-robot optimal order for a fixed
    division is found independently, which preserves exactness.
    """
    k, g = problem.k, problem.g
    if k > _BRUTE_FORCE_MAX_TARGETS or g > _BRUTE_FORCE_MAX_ROBOTS:
        raise ValueError("oracle guard: instance too large for brute force")
    if k == 0:
        raise ValueError("nothing to assign")

    best_path: dict[tuple[int, frozenset[int]], tuple[float, tuple[int, ...]]] = {}

    def optimal_open_path(q: int, subset: frozenset[int]) -> tuple[float, tuple[int, ...]]:
        if not subset:
            return 0.0, ()
        key = (q, subset)
        if key in best_path:
            return best_path[key]
        start = problem.robot_starts[q]
        best = (math.inf, ())
        for perm in itertools.permutations(sorted(subset)):
            length = distance(start, problem.target_points[perm[0]])
            for a, b in zip(perm, perm[1:]):
                length += distance(problem.target_points[a], problem.target_points[b])
            if length < best[0]:
                best = (length, perm)
        best_path[key] = best
        return best

    best_cost = math.inf
    best_parts: list[tuple[int, ...]] | None = None
    for owners in itertools.product(range(g), repeat=k):
        subsets = [frozenset(i for i, o in enumerate(owners) if o == q) for q in range(g)]
        cost = 0.0
        parts = []
        for q in range(g):
            c, perm = optimal_open_path(q, subsets[q])
            cost += c
            parts.append(perm)
        if cost < best_cost:
            best_cost = cost
            best_parts = parts
    assert best_parts is not None
    routes = {
        problem.robot_ids[q]: tuple(problem.target_ids[i] for i in best_parts[q])
        for q in range(g)
    }
    return Assignment(routes=routes, total_cost=best_cost)
