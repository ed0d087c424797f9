"""QAOA ansatz description and depth selection from the coupling graph."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .encode import IsingModel


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionGraph:
    n: int
    edges: frozenset

    def neighbours(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n)]
        for i, j in sorted(self.edges):
            adj[i].append(j)
            adj[j].append(i)
        return adj


def interaction_graph(im: IsingModel) -> InteractionGraph:
    return InteractionGraph(im.n, frozenset(k for k, v in im.J.items() if v != 0))


def _bfs(adj, src):
    dist = [-1] * len(adj)
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def min_entangling_depth(g: InteractionGraph) -> int:
    """Graph diameter: layers needed for every qubit's light cone to cover all others."""
    if g.n == 0:
        raise DisconnectedGraphError("empty interaction graph")
    adj = g.neighbours()
    diameter = 0
    for src in range(g.n):
        dist = _bfs(adj, src)
        if min(dist) < 0:
            raise DisconnectedGraphError("interaction graph is disconnected")
        diameter = max(diameter, max(dist))
    return diameter


def recommend_depth(g: InteractionGraph, override: Optional[int] = None) -> int:
    """2·diameter + 1 layers, unless an explicit depth is given."""
    if override is not None:
        if override < 0:
            raise ValueError(f"depth must be >= 0, got {override}")
        return int(override)
    return 2 * min_entangling_depth(g) + 1


@dataclass(frozen=True, eq=False)
class QaoaAnsatz:
    ising: IsingModel
    p: int

    def __post_init__(self):
        if self.p < 0:
            raise ValueError(f"layer count must be >= 0, got {self.p}")

    @property
    def n(self) -> int:
        return self.ising.n

    @property
    def n_params(self) -> int:
        return 2 * self.p
