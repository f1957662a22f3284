"""Instantaneous communication graph over the fleet.

Robots j and k are linked when |p_j - p_k| <= r (boundary inclusive). The
graph Laplacian's second-smallest eigenvalue is positive exactly when the
fleet is one connected component; graph search gives the same answer exactly
and is the authority inside the simulators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Point2D

__all__ = [
    "ConnectivityGraph",
    "CONNECTIVITY_TOL",
    "build_graph",
    "algebraic_connectivity",
    "components",
    "is_connected",
    "critical_radius",
    "epsilon_for_probability",
]

# lambda_2 above this is declared connected; graph search wins on disagreement
CONNECTIVITY_TOL = 1e-9


@dataclass(frozen=True)
class ConnectivityGraph:
    """Adjacency and Laplacian of the fleet's communication graph."""

    m: int
    adjacency: np.ndarray  # (m, m) bool, zero diagonal
    laplacian: np.ndarray  # (m, m) float


def build_graph(positions: Sequence[Point2D], r: float) -> ConnectivityGraph:
    """Communication graph at range r over the given robot positions."""
    if r < 0:
        raise ValueError("communication range must be nonnegative")
    m = len(positions)
    xy = np.array([[p.x, p.y] for p in positions], dtype=float).reshape(m, 2)
    diff = xy[:, None, :] - xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    adj = dist <= r
    np.fill_diagonal(adj, False)
    lap = np.diag(adj.sum(axis=1).astype(float)) - adj.astype(float)
    return ConnectivityGraph(m=m, adjacency=adj, laplacian=lap)


def algebraic_connectivity(g: ConnectivityGraph) -> float:
    """Second-smallest Laplacian eigenvalue (the Fiedler value)."""
    if g.m < 2:
        raise ValueError("algebraic connectivity undefined for fewer than 2 robots")
    eig = np.linalg.eigvalsh(g.laplacian)
    return float(eig[1])


def components(g: ConnectivityGraph) -> list[list[int]]:
    """Connected components as sorted id lists, ordered by smallest member."""
    seen = [False] * g.m
    out: list[list[int]] = []
    for start in range(g.m):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        stack = [start]
        while stack:
            j = stack.pop()
            for k in np.flatnonzero(g.adjacency[j]):
                k = int(k)
                if not seen[k]:
                    seen[k] = True
                    comp.append(k)
                    stack.append(k)
        out.append(sorted(comp))
    return out


def is_connected(g: ConnectivityGraph) -> bool:
    """True when the fleet is one component. A single robot counts as connected."""
    if g.m <= 1:
        return True
    return len(components(g)) == 1


def critical_radius(m: int, epsilon: float, edge_length: float) -> float:
    """Range at which a random m-robot fleet in the square is connected w.h.p.

    Unit-square threshold sqrt((ln m + epsilon) / (m * pi)), scaled by the
    workspace edge. The connectivity probability tends to exp(-exp(-epsilon))
    as m grows; use epsilon_for_probability to invert that law.
    """
    if m < 2:
        raise ValueError("critical radius needs at least 2 robots")
    if not math.isfinite(epsilon):
        raise ValueError("epsilon must be finite")
    return edge_length * math.sqrt((math.log(m) + epsilon) / (m * math.pi))


def epsilon_for_probability(p: float) -> float:
    """Epsilon whose asymptotic connectivity probability is p."""
    if not 0.0 < p < 1.0:
        raise ValueError("probability must be strictly between 0 and 1")
    return -math.log(-math.log(p))
