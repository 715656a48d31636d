"""Subset-repair engines.

- ``osr_succeeds``: simulates the simplification loop on the dependency set
  alone and reports a verdict with the full step trace.
- ``opt_s_repair``: exact engine; recursively partitions the table along the
  detected simplifications (shared lhs attribute, consensus attribute, or a
  married lhs pair resolved by maximum-weight bipartite matching).
- ``approx_s_repair``: deletes a 2-approximate weighted vertex cover of the
  conflict graph; works for every dependency set.
- ``brute_s_repair``: branch-and-bound oracle over all consistent subsets.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .combinatorics import BipartiteGraph, max_weight_matching, weighted_vertex_cover_2approx
from .errors import CapExceeded, IntractableFdSet
from .fds import (
    ClassifierTrace,
    CommonLhs,
    ConsensusFd,
    FdSet,
    LhsMarriage,
    STEP_KINDS,
    TraceStep,
    Trivial,
    detect_simplification,
    removed_attrs,
)
from .table import SubsetRepair, Table, conflict_graph, dist_sub

BRUTE_S_DEFAULT_CAP = 20


@dataclass(frozen=True)
class SRepairReport:
    repair: SubsetRepair
    algorithm: str  # "optsrepair" | "vertex-cover-2approx" | "brute-force"
    trace: ClassifierTrace | None = None

    def payload(self, t: Table) -> dict:
        retained = sorted(self.repair.retained_ids)
        deleted = sorted(set(t.rows) - self.repair.retained_ids)
        return {
            "distance": round(self.repair.distance, 9),
            "retained_ids": retained,
            "deleted_ids": deleted,
            "algorithm": self.algorithm,
            "guarantee": self.repair.guarantee,
            "trace": self.trace.payload() if self.trace is not None else None,
        }


def osr_succeeds(d: FdSet) -> tuple[bool, ClassifierTrace]:
    """Simplify the dependency set until trivial or stuck.

    The verdict depends only on the dependency set, never on any table.
    """
    steps: list[TraceStep] = []
    current = d
    while True:
        found = detect_simplification(current)
        if isinstance(found, Trivial):
            return True, ClassifierTrace(tuple(steps), True)
        if found is None:
            return False, ClassifierTrace(tuple(steps), False)
        removed = removed_attrs(found)
        current = current.remove_attrs(removed)
        steps.append(TraceStep(STEP_KINDS[type(found)], removed, current))


def _partition(t: Table, attrs: frozenset[str]) -> list[tuple[tuple[str, ...], frozenset[int]]]:
    """Blocks of ids agreeing on ``attrs``, in sorted key order."""
    blocks: dict[tuple[str, ...], set[int]] = {}
    for tid in t.ids():
        blocks.setdefault(t.project(tid, attrs), set()).add(tid)
    return [(key, frozenset(blocks[key])) for key in sorted(blocks)]


def opt_s_repair(d: FdSet, t: Table, threads: int = 1) -> SRepairReport:
    """Exact optimal subset repair; requires a classifier-positive set."""
    ok, trace = osr_succeeds(d)
    if not ok:
        raise IntractableFdSet("the simplification classifier rejects this dependency set")

    def solve(dep: FdSet, ids: frozenset[int], mapper) -> frozenset[int]:
        sub = t.subset(ids)
        step = detect_simplification(dep)
        if isinstance(step, Trivial):
            return ids
        assert step is not None, "classifier-positive sets never get stuck"

        if isinstance(step, CommonLhs):
            reduced = dep.erase_attrs(frozenset([step.attr]))
            blocks = _partition(sub, frozenset([step.attr]))
            results = mapper(lambda blk: solve(reduced, blk[1], map), blocks)
            retained: set[int] = set()
            for part in results:
                retained |= part
            return frozenset(retained)

        if isinstance(step, ConsensusFd):
            reduced = dep.erase_attrs(frozenset([step.attr]))
            blocks = _partition(sub, frozenset([step.attr]))
            results = list(mapper(lambda blk: solve(reduced, blk[1], map), blocks))
            best = None
            for (key, _), part in zip(blocks, results):
                weight = t.total_weight(part)
                if best is None or weight > best[0]:
                    best = (weight, part)
            assert best is not None
            return best[1]

        assert isinstance(step, LhsMarriage)
        married = step.lhs_a | step.lhs_b
        reduced = dep.erase_attrs(married)
        blocks = _partition(sub, married)
        keyed = []
        for _, ids_block in blocks:
            sample = min(ids_block)
            key = (sub.project(sample, step.lhs_a), sub.project(sample, step.lhs_b))
            keyed.append((key, ids_block))
        keyed.sort(key=lambda kv: kv[0])
        results = list(mapper(lambda kv: solve(reduced, kv[1], map), keyed))
        repairs = {key: part for (key, _), part in zip(keyed, results)}
        left = tuple(sorted({key[0] for key in repairs}))
        right = tuple(sorted({key[1] for key in repairs}))
        edges = {key: t.total_weight(part) for key, part in repairs.items()}
        matching = max_weight_matching(BipartiteGraph(left, right, edges))
        retained = set()
        for key in matching:
            retained |= repairs[key]
        return frozenset(retained)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            def pooled(fn, items):
                return list(pool.map(fn, items))
            retained = solve(d, frozenset(t.rows), pooled)
    else:
        retained = solve(d, frozenset(t.rows), lambda fn, items: list(map(fn, items)))

    repair = SubsetRepair(retained, dist_sub(t, retained), "exact")
    return SRepairReport(repair, "optsrepair", trace)


def approx_s_repair(d: FdSet, t: Table) -> SRepairReport:
    """2-approximate subset repair via weighted vertex cover deletion."""
    graph = conflict_graph(t, d)
    weights = {tid: t.weight(tid) for tid in t.rows}
    cover = weighted_vertex_cover_2approx(graph, weights)
    retained = frozenset(t.rows) - cover
    repair = SubsetRepair(retained, dist_sub(t, retained), "2-approx")
    return SRepairReport(repair, "vertex-cover-2approx")


def brute_s_repair(d: FdSet, t: Table, max_tuples: int = BRUTE_S_DEFAULT_CAP) -> SRepairReport:
    """Exhaustive optimum with branch-and-bound pruning.

    Ids are scanned in increasing order with the keep branch first; because
    all weights are positive, the first optimum encountered retains the
    lexicographically least id set, so ties can be pruned.
    """
    if len(t) > max_tuples:
        raise CapExceeded(f"brute-force subset search capped at {max_tuples} tuples, got {len(t)}")
    for tid in t.rows:
        if t.weight(tid) <= 0:
            raise ValueError("brute-force subset search requires positive weights")

    ids = t.ids()
    n = len(ids)
    graph = conflict_graph(t, d)
    adjacency = [0] * n
    position = {tid: k for k, tid in enumerate(ids)}
    for i, j in graph.edges:
        adjacency[position[i]] |= 1 << position[j]
        adjacency[position[j]] |= 1 << position[i]
    weights = [t.weight(tid) for tid in ids]
    suffix = [0.0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = suffix[k + 1] + weights[k]

    best_weight = -1.0
    best_mask = 0

    def walk(k: int, mask: int, kept_weight: float) -> None:
        nonlocal best_weight, best_mask
        if kept_weight + suffix[k] <= best_weight:
            return
        if k == n:
            best_weight = kept_weight
            best_mask = mask
            return
        if not (adjacency[k] & mask):
            walk(k + 1, mask | (1 << k), kept_weight + weights[k])
        walk(k + 1, mask, kept_weight)

    walk(0, 0, 0.0)
    retained = frozenset(ids[k] for k in range(n) if best_mask & (1 << k))
    repair = SubsetRepair(retained, dist_sub(t, retained), "exact")
    return SRepairReport(repair, "brute-force")
