"""Most Probable Database under functional dependencies.

A probabilistic table is a tuple-independent table whose weights are
probabilities in [0, 1]. The most probable consistent subset is found by a
log-odds reduction to weighted optimal subset repair:

- Certain tuples (probability 1) must survive; they are clamped to a finite
  log-odds weight large enough to dominate every other tuple combined. When
  the certain tuples are jointly inconsistent, every consistent subset has
  probability zero and the empty subset is returned with a flag.
- Tuples with probability at most 0.5 can never help; they are dropped from
  consideration and from the output.
- The remaining tuples get weight log(w / (1 - w)); maximizing retained
  weight over consistent subsets then maximizes the subset probability.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import CapExceeded, IntractableFdSet, RepairError
from .fds import FdSet
from .srepair import brute_s_repair, opt_s_repair, osr_succeeds
from .table import Table, conflict_graph, satisfies

BRUTE_MPD_CAP = 15
MPD_FALLBACK_CAP = 15


@dataclass(frozen=True)
class ProbabilisticTable:
    """A table whose weights are interpreted as independent probabilities."""

    table: Table

    def __post_init__(self) -> None:
        for tid in self.table.rows:
            w = self.table.weight(tid)
            if not 0.0 <= w <= 1.0:
                raise RepairError(f"tuple {tid} has weight {w!r}; probabilities must lie in [0, 1]")

    def log_probability(self, retained: frozenset[int]) -> float:
        """log Pr of the subset: product of w over retained, 1-w over deleted."""
        total = 0.0
        for tid in self.table.ids():
            w = self.table.weight(tid)
            if tid in retained:
                total += math.log(w) if w > 0 else float("-inf")
            else:
                total += math.log1p(-w) if w < 1 else float("-inf")
        return total


@dataclass(frozen=True)
class MpdResult:
    retained_ids: frozenset[int]
    log_probability: float
    zero_probability: bool = False
    clamped_certain: tuple[int, ...] = ()
    dropped_low: tuple[int, ...] = ()

    def payload(self) -> dict:
        log_p = None if self.zero_probability else round(self.log_probability, 9)
        prob = None
        if not self.zero_probability and self.log_probability > math.log(1e-300):
            prob = round(math.exp(self.log_probability), 9)
        return {
            "retained_ids": sorted(self.retained_ids),
            "log_probability": log_p,
            "probability": prob,
            "zero_probability": self.zero_probability,
            "preprocessing": {
                "clamped_certain": list(self.clamped_certain),
                "dropped_low": list(self.dropped_low),
            },
        }


def mpd_solve(d: FdSet, p: ProbabilisticTable, threads: int = 1) -> MpdResult:
    """Most probable consistent subset via the log-odds reduction."""
    t = p.table
    certain = tuple(tid for tid in t.ids() if t.weight(tid) == 1.0)
    if certain:
        certain_sub = t.subset(frozenset(certain))
        if satisfies(certain_sub, d):
            return MpdResult(frozenset(), float("-inf"), zero_probability=True, clamped_certain=certain)

    dropped = tuple(tid for tid in t.ids() if t.weight(tid) <= 0.5)
    kept = [tid for tid in t.ids() if tid not in dropped]

    log_odds = {
        tid: math.log(t.weight(tid) / (1.0 - t.weight(tid)))
        for tid in kept
        if tid not in certain
    }
    # Clamp: give every certain tuple more weight than all others combined,
    # so no optimal subset can afford to exclude it.
    clamp = sum(abs(v) for v in log_odds.values()) + 2.0
    for tid in certain:
        log_odds[tid] = clamp

    reduced = Table(t.schema, {tid: (t.values(tid), log_odds[tid]) for tid in kept}, t.has_weight_column)
    if osr_succeeds(d)[0]:
        retained = opt_s_repair(d, reduced, threads).repair.retained_ids
    elif len(reduced) <= MPD_FALLBACK_CAP:
        retained = brute_s_repair(d, reduced, max_tuples=MPD_FALLBACK_CAP).repair.retained_ids
    else:
        raise IntractableFdSet(
            "the dependency set is classifier-negative and the instance exceeds the brute-force cap"
        )

    return MpdResult(
        retained,
        p.log_probability(retained),
        clamped_certain=certain,
        dropped_low=dropped,
    )


def brute_mpd(d: FdSet, p: ProbabilisticTable, max_tuples: int = BRUTE_MPD_CAP) -> MpdResult:
    """Oracle: maximize the subset probability over all consistent subsets.

    Ties are broken toward the larger subset, then the lexicographically
    least sorted id tuple.
    """
    t = p.table
    if len(t) > max_tuples:
        raise CapExceeded(f"brute-force MPD capped at {max_tuples} tuples, got {len(t)}")
    ids = t.ids()
    position = {tid: k for k, tid in enumerate(ids)}
    adjacency = [0] * len(ids)
    for i, j in conflict_graph(t, d).edges:
        adjacency[position[i]] |= 1 << position[j]
        adjacency[position[j]] |= 1 << position[i]

    best: tuple[float, int, tuple[int, ...]] | None = None
    for size in range(len(ids) + 1):
        for combo in itertools.combinations(range(len(ids)), size):
            mask = 0
            ok = True
            for k in combo:
                if adjacency[k] & mask:
                    ok = False
                    break
                mask |= 1 << k
            if not ok:
                continue
            retained = frozenset(ids[k] for k in combo)
            log_p = p.log_probability(retained)
            candidate = (log_p, size, tuple(sorted(retained)))
            if best is None:
                best = candidate
                continue
            if log_p > best[0]:
                best = candidate
            elif log_p == best[0]:
                if size > best[1] or (size == best[1] and candidate[2] < best[2]):
                    best = candidate
    assert best is not None
    return MpdResult(frozenset(best[2]), best[0])
