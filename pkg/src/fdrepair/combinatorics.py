"""Optimization kernels for the repair engines.

Two primitives live here: maximum-weight bipartite matching (via reduction
to an assignment problem on a zero-padded square matrix) and the classic
local-ratio 2-approximation for weighted vertex cover.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .table import ConflictGraph

Node = Hashable


@dataclass(frozen=True)
class BipartiteGraph:
    """Weighted bipartite graph; edges go strictly from left to right."""

    left: tuple[Node, ...]
    right: tuple[Node, ...]
    edges: dict[tuple[Node, Node], float]

    def __post_init__(self) -> None:
        left, right = set(self.left), set(self.right)
        if len(left) != len(self.left) or len(right) != len(self.right):
            raise ValueError("duplicate nodes on one side")
        for (a, b), w in self.edges.items():
            if a not in left or b not in right:
                raise ValueError(f"edge ({a!r}, {b!r}) does not go from left to right")
            if w < 0:
                raise ValueError("edge weights must be non-negative")


def max_weight_matching(g: BipartiteGraph) -> frozenset[tuple[Node, Node]]:
    """A maximum-weight matching; deterministic for a fixed node order.

    The graph is embedded in a square cost matrix padded with zero-weight
    cells, solved as an assignment problem, and zero-weight assignments are
    dropped so absent edges are never reported.
    """
    if not g.edges:
        return frozenset()
    size = max(len(g.left), len(g.right))
    weights = np.zeros((size, size))
    left_pos = {node: i for i, node in enumerate(g.left)}
    right_pos = {node: j for j, node in enumerate(g.right)}
    for (a, b), w in g.edges.items():
        weights[left_pos[a], right_pos[b]] = w
    rows, cols = linear_sum_assignment(weights, maximize=True)
    chosen = set()
    for i, j in zip(rows, cols):
        if i < len(g.left) and j < len(g.right) and weights[i, j] > 0:
            chosen.add((g.left[i], g.right[j]))
    return frozenset(chosen)


def brute_force_max_matching_weight(g: BipartiteGraph) -> float:
    """Oracle: best matching weight by enumerating all edge subsets."""
    edges = sorted(g.edges)
    best = 0.0
    for size in range(len(edges) + 1):
        for combo in itertools.combinations(edges, size):
            used: set[Node] = set()
            ok = True
            for a, b in combo:
                if a in used or b in used:
                    ok = False
                    break
                used.add(a)
                used.add(b)
            if ok:
                best = max(best, sum(g.edges[e] for e in combo))
    return best


def weighted_vertex_cover_2approx(g: ConflictGraph, weights: dict[int, float]) -> frozenset[int]:
    """Local-ratio vertex cover: weight at most twice the optimum.

    Edges are processed in sorted (min id, max id) order; for each uncovered
    edge the smaller residual endpoint weight is subtracted from both ends
    and zeroed vertices join the cover.
    """
    for node in g.nodes:
        if weights[node] <= 0:
            raise ValueError("vertex weights must be positive")
    residual = {node: float(weights[node]) for node in g.nodes}
    cover: set[int] = set()
    for i, j in sorted(g.edges):
        if i in cover or j in cover:
            continue
        delta = min(residual[i], residual[j])
        residual[i] -= delta
        residual[j] -= delta
        if residual[i] <= 0:
            cover.add(i)
        if residual[j] <= 0:
            cover.add(j)
    return frozenset(cover)


def brute_force_min_vertex_cover_weight(g: ConflictGraph, weights: dict[int, float]) -> float:
    """Oracle: minimum cover weight by enumerating all vertex subsets."""
    nodes = sorted(g.nodes)
    best = sum(weights[n] for n in nodes)
    for size in range(len(nodes) + 1):
        for combo in itertools.combinations(nodes, size):
            chosen = set(combo)
            if all(i in chosen or j in chosen for i, j in g.edges):
                best = min(best, sum(weights[n] for n in combo))
    return best
