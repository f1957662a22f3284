"""Shared fixtures and independent oracle implementations.

The oracles here deliberately reimplement things the package also computes
(spanning trees by edge-subset enumeration, matchings by pairing
enumeration, open paths by permutation search) so the two routes stay
independent.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import settings

from commfleet.core import Point2D

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


def random_points(rng, count, edge=100.0):
    return [Point2D(float(x), float(y)) for x, y in rng.uniform(0.0, edge, size=(count, 2))]


def exhaustive_mst_weight(dm) -> float:
    """Minimum spanning tree weight by enumerating edge subsets of size n-1."""
    n = dm.shape[0]
    if n == 1:
        return 0.0
    edges = list(itertools.combinations(range(n), 2))
    best = math.inf
    for subset in itertools.combinations(edges, n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for a, b in subset:
            ra, rb = find(a), find(b)
            if ra == rb:
                ok = False  # cycle
                break
            parent[ra] = rb
        if ok:
            best = min(best, sum(dm[a, b] for a, b in subset))
    return best


def exhaustive_matching_weight(dm, verts) -> float:
    """Minimum perfect matching weight by enumerating all pairings."""
    verts = tuple(verts)
    if not verts:
        return 0.0
    first, rest = verts[0], verts[1:]
    best = math.inf
    for i, partner in enumerate(rest):
        w = dm[first, partner] + exhaustive_matching_weight(dm, rest[:i] + rest[i + 1 :])
        best = min(best, w)
    return best


def open_path_optimum(start: Point2D, points) -> float:
    """Optimal open-path length from start through all points, by enumeration."""
    idx = range(len(points))
    best = math.inf
    for perm in itertools.permutations(idx):
        length = math.hypot(start.x - points[perm[0]].x, start.y - points[perm[0]].y)
        for a, b in zip(perm, perm[1:]):
            length += math.hypot(
                points[a].x - points[b].x, points[a].y - points[b].y
            )
        best = min(best, length)
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
