"""Instance generators: hardness gadgets, ratio families, random instances.

- ``gen_vertex_cover_gadget`` encodes a graph as an unweighted table over
  R(A, B, C) with the married dependency set {A -> B, B -> A, B -> C}: each
  edge {u, v} contributes (u, v, 0) and (v, u, 0), each vertex v contributes
  (v, v, 1). The optimal update-repair distance is 2|E| plus the minimum
  vertex cover size.
- ``gen_delta_k`` / ``gen_delta_prime_k`` build the two dependency families
  whose lhs-cover and core-implicant bounds separate the linear and
  quadratic approximation ratios.
- ``gen_random_instance`` draws reproducible random tables and dependency
  sets from a seeded Mersenne Twister, for oracle-driven test suites.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .fds import Fd, FdSet, parse_fds
from .table import Table


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph: no self-loops, no parallel edges."""

    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertices")
        known = set(self.vertices)
        canonical = []
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at {u!r}")
            if u not in known or v not in known:
                raise ValueError(f"edge ({u!r}, {v!r}) uses an unknown vertex")
            canonical.append((min(u, v), max(u, v)))
        if len(set(canonical)) != len(canonical):
            raise ValueError("parallel edges")
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices)))
        object.__setattr__(self, "edges", tuple(sorted(canonical)))


def min_vertex_cover_size(g: Graph) -> int:
    """Brute-force minimum vertex cover size (small graphs only)."""
    for size in range(len(g.vertices) + 1):
        for combo in itertools.combinations(g.vertices, size):
            chosen = set(combo)
            if all(u in chosen or v in chosen for u, v in g.edges):
                return size
    raise AssertionError("the full vertex set is always a cover")


def cover_based_update(g: Graph, t: Table, cover: frozenset[str]) -> dict[int, dict[str, str]]:
    """The canonical repair of a gadget table induced by a vertex cover.

    For each edge {u, v} both edge tuples are redirected onto a cover
    endpoint ((u, v, 0) and (v, u, 0) both become (w, w, 0) for a cover
    vertex w of the edge); each cover vertex's diagonal tuple is rewritten
    from value 1 to 0. Costs 2|E| + |cover| cell changes.
    """
    updates: dict[int, dict[str, str]] = {}
    by_values = {t.values(tid): tid for tid in t.rows}
    for u, v in g.edges:
        keep = u if u in cover else v
        if keep not in cover:
            raise ValueError("the given set is not a vertex cover")
        uv = by_values[(u, v, "0")]
        vu = by_values[(v, u, "0")]
        updates[uv] = {"B": keep} if keep == u else {"A": keep}
        updates[vu] = {"B": keep} if keep == v else {"A": keep}
    for w in sorted(cover):
        updates[by_values[(w, w, "1")]] = {"C": "0"}
    return updates


def gen_vertex_cover_gadget(g: Graph) -> tuple[Table, FdSet]:
    """Unweighted, duplicate-free gadget table plus {A->B, B->A, B->C}."""
    schema = ("A", "B", "C")
    rows: dict[int, tuple[tuple[str, ...], float]] = {}
    tid = 1
    for u, v in g.edges:
        rows[tid] = ((u, v, "0"), 1.0)
        rows[tid + 1] = ((v, u, "0"), 1.0)
        tid += 2
    for v in g.vertices:
        rows[tid] = ((v, v, "1"), 1.0)
        tid += 1
    fds = FdSet(schema, (
        Fd(frozenset(["A"]), frozenset(["B"])),
        Fd(frozenset(["B"]), frozenset(["A"])),
        Fd(frozenset(["B"]), frozenset(["C"])),
    ))
    return Table(schema, rows, has_weight_column=False), fds


def gen_delta_k(k: int) -> FdSet:
    """Family with one wide lhs feeding a chain of single-attribute rules.

    Schema (A0..Ak, B0..Bk, C); dependencies A0..Ak -> B0, B0 -> C, and
    Bi -> A0 for i = 1..k. The lhs-cover bound grows linearly in k while
    the core-implicant bound grows quadratically.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    a = [f"A{i}" for i in range(k + 1)]
    b = [f"B{i}" for i in range(k + 1)]
    fds = [Fd(frozenset(a), frozenset([b[0]])), Fd(frozenset([b[0]]), frozenset(["C"]))]
    fds += [Fd(frozenset([b[i]]), frozenset([a[0]])) for i in range(1, k + 1)]
    return FdSet(tuple(a + b + ["C"]), tuple(fds))


def gen_delta_prime_k(k: int) -> FdSet:
    """Family of chained binary left-hand sides A_i A_{i+1} -> B_i."""
    if k < 1:
        raise ValueError("k must be at least 1")
    a = [f"A{i}" for i in range(k + 2)]
    b = [f"B{i}" for i in range(k + 1)]
    fds = [Fd(frozenset([a[i], a[i + 1]]), frozenset([b[i]])) for i in range(k + 1)]
    return FdSet(tuple(a + b), tuple(fds))


@dataclass(frozen=True)
class RandomInstanceParams:
    """Knobs for the seeded instance generator."""

    tuples: int
    attrs: int
    domain_size: int = 3
    weights: tuple[float, ...] = (1.0, 2.0, 3.0)
    fd_specs: tuple[str, ...] = ("A -> B",)

    def __post_init__(self) -> None:
        if self.tuples < 0 or self.attrs < 1 or self.domain_size < 1:
            raise ValueError("instance dimensions must be positive")
        if not self.weights or any(w <= 0 for w in self.weights):
            raise ValueError("the weight pool must be non-empty and positive")
        if not self.fd_specs:
            raise ValueError("at least one dependency spec is required")


ALPHABET = tuple("ABCDEFGHIJKLMNOPQRSTUVWXYZ")


def gen_random_instance(seed: int, params: RandomInstanceParams) -> tuple[Table, FdSet]:
    """Reproducible random instance: same seed, same instance.

    The generator is a seeded Mersenne Twister (``random.Random``), whose
    sequence is stable across platforms and Python versions, so golden
    files stay portable.
    """
    rng = random.Random(seed)
    schema = ALPHABET[: params.attrs]
    spec = rng.choice(params.fd_specs)
    fds = parse_fds(spec.replace(";", "\n"), schema)
    rows: dict[int, tuple[tuple[str, ...], float]] = {}
    for tid in range(1, params.tuples + 1):
        values = tuple(f"v{rng.randrange(params.domain_size)}" for _ in schema)
        rows[tid] = (values, float(rng.choice(params.weights)))
    return Table(schema, rows), fds
