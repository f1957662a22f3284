"""Distance matrices, spanning trees, TSP tours, and route construction.

The closed tour over all targets seeds every robot's fallback route in the
decentralized strategy; the spanning-tree weight over targets plus robots
(robot-robot edges free) lower-bounds any feasible total travel time and is
the denominator of the solution-quality metric.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np

from .core import Point2D, Scenario, distance

__all__ = [
    "Tour",
    "Route",
    "distance_matrix",
    "check_metric",
    "mst_weight",
    "mst_edges",
    "f_mst_bound",
    "min_weight_perfect_matching",
    "christofides",
    "brute_force_tsp",
    "initial_route_on_tour",
    "route_length",
]

# exhaustive pairing search is exact and fast up to this many odd vertices;
# larger odd sets go to the blossom algorithm (also exact)
_EXHAUSTIVE_MATCHING_MAX = 12

_BRUTE_FORCE_TSP_MAX = 10


@dataclass(frozen=True)
class Tour:
    """A closed tour: visits ``order`` in sequence and returns to the start."""

    order: tuple[int, ...]
    length: float


@dataclass(frozen=True)
class Route:
    """An open path from a robot start through ``order`` in sequence."""

    start: Point2D
    order: tuple[int, ...]
    length: float


def distance_matrix(points: Sequence[Point2D]) -> np.ndarray:
    """Pairwise Euclidean distances, meters."""
    xy = np.array([[p.x, p.y] for p in points], dtype=float).reshape(len(points), 2)
    diff = xy[:, None, :] - xy[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def check_metric(dm: np.ndarray, tol: float = 1e-9) -> None:
    """Raise when dm is not a metric (symmetric, zero diagonal, triangle)."""
    n = dm.shape[0]
    if dm.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if not np.allclose(dm, dm.T, atol=tol):
        raise ValueError("distance matrix not symmetric")
    if not np.allclose(np.diag(dm), 0.0, atol=tol):
        raise ValueError("distance matrix diagonal not zero")
    # d(i,k) <= d(i,j) + d(j,k) for all j
    through = dm[:, :, None] + dm[None, :, :]  # through[i, j, k]
    if (dm > through.min(axis=1) + tol).any():
        raise ValueError("triangle inequality violated")


def mst_weight(dm: np.ndarray) -> float:
    """Total weight of a minimum spanning tree (Prim). Weight is unique."""
    return sum(dm[i, j] for i, j in mst_edges(dm))


def mst_edges(dm: np.ndarray) -> list[tuple[int, int]]:
    """Edges of a minimum spanning tree grown from node 0 (Prim).

    Deterministic: ties go to the lowest-index node.
    """
    n = dm.shape[0]
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return []
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = dm[0].copy()
    link = np.zeros(n, dtype=int)
    edges: list[tuple[int, int]] = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(np.argmin(cand))  # argmin takes the lowest index on ties
        i = int(link[j])
        edges.append((min(i, j), max(i, j)))
        in_tree[j] = True
        better = dm[j] < best
        best = np.where(better, dm[j], best)
        link = np.where(better, j, link)
    return edges


def f_mst_bound(scn: Scenario) -> float:
    """MST weight over targets plus robots with free robot-robot edges.

    Lower-bounds the total travel time of any strategy that visits every
    target, hence the denominator of the quality metric.
    """
    pts = list(scn.targets) + list(scn.robot_starts)
    dm = distance_matrix(pts)
    n = scn.n
    dm[n:, n:] = 0.0
    return mst_weight(dm)


def min_weight_perfect_matching(
    dm: np.ndarray, vertices: Sequence[int]
) -> list[tuple[int, int]]:
    """Exact minimum-weight perfect matching on the given vertex subset.

    Exhaustive pairing search for small sets, blossom above that; both exact.
    Pairs come back as sorted (i, j) tuples in sorted order.
    """
    verts = list(vertices)
    if len(verts) % 2 != 0:
        raise ValueError("perfect matching needs an even vertex count")
    if not verts:
        return []
    if len(verts) <= _EXHAUSTIVE_MATCHING_MAX:
        pairs, _ = _exhaustive_matching(dm, tuple(verts))
        return sorted(pairs)
    g = nx.Graph()
    g.add_nodes_from(sorted(verts))
    for a, b in itertools.combinations(sorted(verts), 2):
        g.add_edge(a, b, weight=float(dm[a, b]))
    match = nx.min_weight_matching(g)
    return sorted(tuple(sorted(p)) for p in match)


def _exhaustive_matching(
    dm: np.ndarray, verts: tuple[int, ...]
) -> tuple[list[tuple[int, int]], float]:
    if not verts:
        return [], 0.0
    first, rest = verts[0], verts[1:]
    best_pairs: list[tuple[int, int]] | None = None
    best_w = math.inf
    for idx, partner in enumerate(rest):
        sub = rest[:idx] + rest[idx + 1 :]
        pairs, w = _exhaustive_matching(dm, sub)
        w += dm[first, partner]
        if w < best_w:
            best_w = w
            best_pairs = [(first, partner)] + pairs
    assert best_pairs is not None
    return best_pairs, best_w


def _euler_circuit(n: int, multi_edges: list[tuple[int, int]], start: int) -> list[int]:
    """Hierholzer circuit over a connected even-degree multigraph.

    Deterministic: always leaves along the lowest-numbered remaining neighbor.
    """
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in multi_edges:
        adj[a].append(b)
        adj[b].append(a)
    for lst in adj:
        lst.sort(reverse=True)  # pop() then yields the smallest first
    stack = [start]
    circuit: list[int] = []
    while stack:
        v = stack[-1]
        if adj[v]:
            w = adj[v].pop()
            adj[w].remove(v)
            stack.append(w)
        else:
            circuit.append(stack.pop())
    return circuit[::-1]


def christofides(dm: np.ndarray, *, verify_metric: bool = False) -> Tour:
    """Closed tour within 3/2 of the optimum on a metric matrix.

    MST, then an exact minimum-weight perfect matching over the odd-degree
    vertices, then an Eulerian circuit shortcut past repeated vertices
    (keeping first occurrences). Fully deterministic: ties everywhere break
    toward the lowest index.
    """
    n = dm.shape[0]
    if n < 1:
        raise ValueError("need at least one node")
    if verify_metric:
        check_metric(dm)
    if n == 1:
        return Tour(order=(0,), length=0.0)
    if n == 2:
        return Tour(order=(0, 1), length=2.0 * float(dm[0, 1]))
    tree = mst_edges(dm)
    degree = np.zeros(n, dtype=int)
    for a, b in tree:
        degree[a] += 1
        degree[b] += 1
    odd = [int(v) for v in np.flatnonzero(degree % 2 == 1)]
    matching = min_weight_perfect_matching(dm, odd)
    circuit = _euler_circuit(n, tree + matching, start=0)
    seen = set()
    order = []
    for v in circuit:
        if v not in seen:
            seen.add(v)
            order.append(v)
    length = sum(dm[order[i], order[(i + 1) % len(order)]] for i in range(len(order)))
    return Tour(order=tuple(order), length=float(length))


def brute_force_tsp(dm: np.ndarray) -> Tour:
    """Optimal closed tour by enumerating permutations with node 0 fixed."""
    n = dm.shape[0]
    if n > _BRUTE_FORCE_TSP_MAX:
        raise ValueError(f"oracle guard: brute force limited to {_BRUTE_FORCE_TSP_MAX} nodes")
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return Tour(order=(0,), length=0.0)
    d = dm.tolist()
    best_order = None
    best_len = math.inf
    for perm in itertools.permutations(range(1, n)):
        length = d[0][perm[0]]
        prev = perm[0]
        for v in perm[1:]:
            length += d[prev][v]
            prev = v
        length += d[prev][0]
        if length < best_len:
            best_len = length
            best_order = (0,) + perm
    return Tour(order=best_order, length=float(best_len))


def route_length(route: Route, targets: Sequence[Point2D]) -> float:
    """Start-to-first hop plus consecutive target hops; empty route is 0."""
    return _path_length(route.start, route.order, targets)


def _path_length(start: Point2D, order: Sequence[int], targets: Sequence[Point2D]) -> float:
    if not order:
        return 0.0
    for t in order:
        if not 0 <= t < len(targets):
            raise ValueError(f"unknown target id {t}")
    total = distance(start, targets[order[0]])
    for a, b in zip(order, order[1:]):
        total += distance(targets[a], targets[b])
    return total


def initial_route_on_tour(tsp0: Tour, start: Point2D, targets: Sequence[Point2D]) -> Route:
    """Cheapest way to ride the closed tour from a start point.

    Over all 2n choices of entry target and travel direction, minimizes
    D(start, first) + L(tour) - D(last, first), where the subtracted term is
    the tour edge the open route drops. Ties break toward the lower entry
    target id, then the forward direction.
    """
    order = tsp0.order
    n = len(order)
    if n == 0:
        raise ValueError("empty tour")
    best: tuple[float, int, int] | None = None
    best_route: tuple[int, ...] | None = None
    for e in range(n):
        for direction in (1, -1):
            entry = order[e]
            last = order[(e - direction) % n]
            cost = (
                distance(start, targets[entry])
                + tsp0.length
                - distance(targets[last], targets[entry])
            )
            key = (cost, entry, 0 if direction == 1 else 1)
            if best is None or key < best:
                best = key
                best_route = tuple(order[(e + direction * i) % n] for i in range(n))
    assert best_route is not None
    return Route(start=start, order=best_route, length=float(best[0]))
