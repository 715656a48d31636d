"""Update-repair engines.

The pipeline mirrors the structure of the problem:

1. Consensus attributes are stripped first; rewriting every column in the
   consensus closure to its weight-majority value is exactly optimal and
   leaves a consensus-free residual set.
2. The residual is decomposed into attribute-disjoint fragments; repairs of
   the fragments compose additively.
3. Per fragment: a two-cycle of unary dependencies is repaired exactly by
   copying values from a retained optimal subset; a fragment with a shared
   lhs attribute (and a classifier-positive set) is repaired exactly through
   the subset route; anything else falls back to the 2·mlc approximation
   (2-approximate subset repair, then delete-and-freshen an lhs cover).

``brute_u_repair`` is the independent oracle: branch-and-bound over all
cell rewrites, with values drawn from the column's active domain plus
canonically-labeled fresh symbols (only the equality pattern of values can
matter to dependency satisfaction, and one symbol per tuple suffices to
realize any pattern).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import CapExceeded, RepairError
from .fds import Fd, FdSet, metrics, min_lhs_cover, ratio_bounds
from .srepair import approx_s_repair, opt_s_repair, osr_succeeds
from .table import (
    FreshValues,
    SubsetRepair,
    Table,
    UpdateRepair,
    dist_sub,
    merge_updates,
    pair_violations,
    satisfies,
)

BRUTE_U_DEFAULT_TUPLE_CAP = 6
BRUTE_U_DEFAULT_ATTR_CAP = 4


def _bits(mask: int):
    """Indices of the set bits of ``mask``, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# ---------------------------------------------------------------------------
# Transforms between subset and update repairs
# ---------------------------------------------------------------------------

def update_to_subset(d: FdSet, t: Table, u: UpdateRepair) -> SubsetRepair:
    """Exclude every tuple with at least one rewritten cell.

    The result is consistent and its deletion distance never exceeds the
    update distance (each touched tuple contributed at least its weight).
    """
    violations = satisfies(t.apply_updates(u.updates), d)
    if violations:
        raise RepairError("the given update is not consistent")
    touched = u.touched_ids()
    retained = frozenset(t.rows) - touched
    return SubsetRepair(retained, dist_sub(t, retained), "transformed-from-update")


def subset_to_update(
    d: FdSet,
    t: Table,
    s: SubsetRepair | frozenset[int],
    fresh: FreshValues | None = None,
    guarantee: str = "transformed-from-subset",
) -> UpdateRepair:
    """Rewrite every deleted tuple's minimum-lhs-cover cells to fresh values.

    Requires a consensus-free dependency set. Every left-hand side of every
    dependency then contains a freshly-valued cell on rewritten tuples, so
    no rewritten tuple can agree with any other tuple on a full lhs; the
    update distance is at most mlc(d) times the subset distance.
    """
    retained = s.retained_ids if isinstance(s, SubsetRepair) else frozenset(s)
    cover = min_lhs_cover(d)
    if cover is None:
        raise RepairError("consensus dependency present: the subset-to-update transform does not apply")
    violations = satisfies(t.subset(retained), d)
    if violations:
        raise RepairError("the given subset is not consistent")
    fresh = fresh or FreshValues()
    updates: dict[int, dict[str, str]] = {}
    for tid in sorted(set(t.rows) - retained):
        updates[tid] = {attr: fresh.take() for attr in sorted(cover)}
    return UpdateRepair.build(t, updates, guarantee)


# ---------------------------------------------------------------------------
# Consensus stripping and attribute-disjoint decomposition
# ---------------------------------------------------------------------------

def decompose(d: FdSet) -> list[FdSet]:
    """Attribute-disjoint fragments: connected components of shared attributes."""
    if not d.is_consensus_free:
        raise RepairError("decomposition expects a consensus-free dependency set")
    deps = list(d.fds)
    parent = list(range(len(deps)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in itertools.combinations(range(len(deps)), 2):
        if (deps[i].lhs | deps[i].rhs) & (deps[j].lhs | deps[j].rhs):
            parent[find(i)] = find(j)

    groups: dict[int, list[Fd]] = {}
    for i in range(len(deps)):
        groups.setdefault(find(i), []).append(deps[i])
    fragments = [d.restrict_to(tuple(group)) for group in groups.values()]
    fragments.sort(key=lambda frag: min(sorted(frag.mentioned_attrs())))
    return fragments


def consensus_fd_set(d: FdSet) -> FdSet:
    """The consensus part: one empty-lhs dependency per closure attribute."""
    closure = d.consensus_closure()
    return FdSet(d.schema, tuple(Fd(frozenset(), frozenset([a])) for a in sorted(closure)))


@dataclass(frozen=True)
class PlanComponent:
    fds: FdSet
    strategy: str  # consensus-exact | ab-ba-exact | common-lhs-exact | approx-2mlc
    ratio: float


@dataclass(frozen=True)
class UComponentPlan:
    components: tuple[PlanComponent, ...]
    declared_ratio: float

    def payload(self) -> dict:
        return {
            "per_fragment": [
                {"fds": [str(dep) for dep in comp.fds.fds], "strategy": comp.strategy, "ratio": round(comp.ratio, 9)}
                for comp in self.components
            ],
            "declared_ratio": round(self.declared_ratio, 9),
        }


def _is_two_cycle(frag: FdSet) -> bool:
    """Exactly {A -> B, B -> A} for two single attributes."""
    if len(frag.fds) != 2:
        return False
    first, second = frag.fds
    return (
        len(first.lhs) == 1
        and len(second.lhs) == 1
        and first.lhs == second.rhs
        and second.lhs == first.rhs
    )


def _fragment_strategy(frag: FdSet) -> tuple[str, float]:
    if _is_two_cycle(frag):
        return "ab-ba-exact", 1.0
    has_common = bool(frozenset.intersection(*(dep.lhs for dep in frag.fds)))
    if has_common and osr_succeeds(frag)[0]:
        return "common-lhs-exact", 1.0
    mlc = metrics(frag).mlc
    assert mlc is not None, "fragments are consensus free"
    return "approx-2mlc", 2.0 * mlc


def plan_components(d: FdSet) -> UComponentPlan:
    """Strategy plan: the consensus part plus one entry per residual fragment."""
    components: list[PlanComponent] = []
    closure = d.consensus_closure()
    if closure:
        components.append(PlanComponent(consensus_fd_set(d), "consensus-exact", 1.0))
    residual = d.erase_attrs(closure)
    for frag in decompose(residual):
        strategy, ratio = _fragment_strategy(frag)
        components.append(PlanComponent(frag, strategy, ratio))
    declared = max((c.ratio for c in components), default=1.0)
    return UComponentPlan(tuple(components), declared)


def strip_consensus(d: FdSet, t: Table) -> tuple[UpdateRepair, FdSet, UComponentPlan]:
    """Optimally rewrite every consensus attribute to its majority value.

    For each attribute in the consensus closure, the value kept is the one
    with the maximum total tuple weight (ties: lexicographically least
    value); every other cell in the column is rewritten to it. Returns the
    consensus update fragment, the residual dependency set, and the plan
    for the residual problem.
    """
    closure = d.consensus_closure()
    updates: dict[int, dict[str, str]] = {}
    for attr in sorted(closure):
        totals: dict[str, float] = {}
        for tid in t.ids():
            totals[t.cell(tid, attr)] = totals.get(t.cell(tid, attr), 0.0) + t.weight(tid)
        if not totals:
            continue
        keep = max(sorted(totals), key=lambda v: totals[v])
        for tid in t.ids():
            if t.cell(tid, attr) != keep:
                updates.setdefault(tid, {})[attr] = keep
    fragment = UpdateRepair.build(t, updates, "exact")
    residual = d.erase_attrs(closure)
    return fragment, residual, plan_components(d)


# ---------------------------------------------------------------------------
# The composite engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class URepairReport:
    repair: UpdateRepair
    plan: UComponentPlan
    two_mlc_bound: float
    kl_bound: float
    combined_bound: float

    def payload(self) -> dict:
        return {
            "distance": round(self.repair.distance, 9),
            "guarantee": self.repair.guarantee,
            **self.plan.payload(),
            "kl_ratio_bound": round(self.kl_bound, 9),
            "two_mlc_bound": round(self.two_mlc_bound, 9),
            "combined_bound": round(self.combined_bound, 9),
        }


def _repair_two_cycle(frag: FdSet, t: Table, threads: int) -> UpdateRepair:
    """Exact repair of {A -> B, B -> A}: copy values from a retained mate.

    Every deleted tuple of an optimal subset repair must share its A value
    or its B value with some retained tuple (otherwise it could have been
    retained); copying the mate's other attribute costs one cell per
    deleted tuple, matching the subset optimum.
    """
    first, second = frag.fds
    attr_a = min(first.lhs | second.lhs)
    attr_b = min((first.lhs | second.lhs) - {attr_a})
    retained = opt_s_repair(frag, t, threads).repair.retained_ids
    kept = sorted(retained)
    updates: dict[int, dict[str, str]] = {}
    for tid in sorted(set(t.rows) - retained):
        mate_a = next((k for k in kept if t.cell(k, attr_a) == t.cell(tid, attr_a)), None)
        if mate_a is not None:
            updates[tid] = {attr_b: t.cell(mate_a, attr_b)}
            continue
        mate_b = next((k for k in kept if t.cell(k, attr_b) == t.cell(tid, attr_b)), None)
        if mate_b is None:
            raise AssertionError("optimal subset repair left a tuple with no mate on either attribute")
        updates[tid] = {attr_a: t.cell(mate_b, attr_a)}
    return UpdateRepair.build(t, updates, "exact")


def repair_u(d: FdSet, t: Table, threads: int = 1) -> URepairReport:
    """Composite update repair: exact where the theory allows, else 2·mlc."""
    fresh = FreshValues()
    consensus_part, residual, plan = strip_consensus(d, t)
    parts: list[UpdateRepair] = [consensus_part]

    for component in plan.components:
        if component.strategy == "consensus-exact":
            continue
        frag = component.fds
        if component.strategy == "ab-ba-exact":
            parts.append(_repair_two_cycle(frag, t, threads))
        elif component.strategy == "common-lhs-exact":
            retained = opt_s_repair(frag, t, threads).repair.retained_ids
            parts.append(subset_to_update(frag, t, retained, fresh, "exact"))
        else:
            retained = approx_s_repair(frag, t).repair.retained_ids
            label = f"{component.ratio:g}-approx"
            parts.append(subset_to_update(frag, t, retained, fresh, label))

    guarantee = "exact" if plan.declared_ratio <= 1.0 else f"{plan.declared_ratio:g}-approx"
    combined = merge_updates(t, parts, guarantee)
    leftover = satisfies(t.apply_updates(combined.updates), d)
    if leftover:
        raise AssertionError(f"composite update repair left violations: {leftover[:3]}")

    two_mlc = 1.0 if residual.is_trivial else 2.0 * metrics(residual).mlc  # type: ignore[operator]
    kl = ratio_bounds(d)["bound_kl"]
    assert kl is not None
    return URepairReport(combined, plan, two_mlc, kl, min(two_mlc, kl))


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def brute_u_repair(
    d: FdSet,
    t: Table,
    max_tuples: int = BRUTE_U_DEFAULT_TUPLE_CAP,
    max_attrs: int = BRUTE_U_DEFAULT_ATTR_CAP,
    initial: UpdateRepair | None = None,
    fresh_symbols: int | None = None,
    engine: str = "auto",
) -> UpdateRepair:
    """Optimal update repair over the active-domain-plus-fresh value space.

    Every cell may keep its original value or take any value from its
    column's active domain or a fresh symbol; one symbol per tuple suffices
    to realize every equality pattern. Two exact engines share this value
    space: ``search`` (branch-and-bound enumeration with canonical fresh
    labeling; the reference) and ``milp`` (the same assignment encoded as a
    mixed-integer program, for larger instances). ``auto`` picks by size.
    ``initial``, when given, must be a consistent update; it seeds the
    search engine's upper bound and is returned unchanged if no cheaper
    update exists.
    """
    if len(t) > max_tuples:
        raise CapExceeded(f"brute-force update search capped at {max_tuples} tuples, got {len(t)}")
    if len(t.schema) > max_attrs:
        raise CapExceeded(f"brute-force update search capped at {max_attrs} attributes, got {len(t.schema)}")
    if engine not in ("auto", "search", "milp"):
        raise ValueError(f"unknown engine {engine!r}")

    if not satisfies(t, d):
        return UpdateRepair.build(t, {}, "exact")
    if initial is not None and satisfies(t.apply_updates(initial.updates), d):
        raise RepairError("the seed update is not consistent")
    if engine == "auto":
        engine = "search" if len(t) <= 8 else "milp"

    ids = t.ids()
    n = len(ids)
    n_cols = len(t.schema)
    pool = n if fresh_symbols is None else fresh_symbols

    # Deterministic search order: most conflicted tuples first.
    degree = {tid: 0 for tid in ids}
    conflict_pairs: list[tuple[int, int]] = []
    for i, j in itertools.combinations(ids, 2):
        if pair_violations(t, d, i, j):
            conflict_pairs.append((i, j))
            degree[i] += 1
            degree[j] += 1
    order = sorted(ids, key=lambda tid: (-degree[tid], tid))
    pos_of = {tid: p for p, tid in enumerate(order)}
    weights = [t.weight(tid) for tid in order]

    # Integer value codes per column: active-domain values first, then the
    # fresh symbols len(adom) .. len(adom)+pool-1.
    adom: list[list[str]] = [sorted(t.column_values(attr)) for attr in t.schema]
    code_of: list[dict[str, int]] = [{v: k for k, v in enumerate(col)} for col in adom]
    original = [
        tuple(code_of[c][t.cell(tid, t.schema[c])] for c in range(n_cols)) for tid in order
    ]

    fd_cols = [(tuple(sorted(t.attr_pos(a) for a in dep.lhs)), t.attr_pos(dep.rhs_attr)) for dep in d.fds]

    if engine == "milp":
        best_codes = _milp_update_search(n, n_cols, weights, original, [len(a) for a in adom], fd_cols, pool)
        result = _codes_to_repair(t, order, original, adom, best_codes)
        if initial is not None and not result.distance < initial.distance:
            result = UpdateRepair({tid: dict(cells) for tid, cells in initial.updates.items()}, initial.distance, "exact")
        violations = satisfies(t.apply_updates(result.updates), d)
        if violations:
            raise AssertionError("oracle produced an inconsistent update")
        return result

    # Conflict structure of the original values, as position bitmasks.
    pair_pos = [(pos_of[i], pos_of[j]) for i, j in conflict_pairs]
    conflict_mask = [0] * n
    for pp, qq in pair_pos:
        conflict_mask[pp] |= 1 << qq
        conflict_mask[qq] |= 1 << pp

    # Exact minimum-weight cover of the original conflicts inside a position
    # subset, memoized. Tuples left entirely unchanged must form an
    # independent set of the conflict graph, so this is a valid lower bound
    # on the cost still to be paid by the unassigned tuples.
    cover_memo: dict[int, float] = {}

    def cover_lb(mask: int) -> float:
        cached = cover_memo.get(mask)
        if cached is not None:
            return cached
        nodes = [p for p in range(n) if (mask >> p) & 1 and (conflict_mask[p] & mask)]
        total = sum(weights[p] for p in nodes)
        best_kept = 0.0

        def go(idx: int, taken: int, kept: float, remaining: float) -> None:
            nonlocal best_kept
            if kept + remaining <= best_kept:
                return
            if idx == len(nodes):
                best_kept = max(best_kept, kept)
                return
            p = nodes[idx]
            rest = remaining - weights[p]
            if not (conflict_mask[p] & taken):
                go(idx + 1, taken | (1 << p), kept + weights[p], rest)
            go(idx + 1, taken, kept, rest)

        go(0, 0, 0.0, total)
        value = total - best_kept
        cover_memo[mask] = value
        return value

    # Minimum number of cells a single tuple must change to resolve a given
    # set of violated dependencies against committed tuples: a hitting set
    # over the dependencies' column sets (lhs plus rhs).
    fd_fix_cols = [frozenset(lhs) | {rhs} for lhs, rhs in fd_cols]
    hitting_memo: dict[frozenset[int], int] = {}

    def min_changes_for(violated: frozenset[int]) -> int:
        cached = hitting_memo.get(violated)
        if cached is not None:
            return cached
        sets = [fd_fix_cols[f] for f in violated]
        answer = len(t.schema)
        for size in range(1, len(t.schema) + 1):
            hit = next(
                (True for cols in itertools.combinations(range(n_cols), size)
                 if all(set(cols) & s for s in sets)),
                False,
            )
            if hit:
                answer = size
                break
        hitting_memo[violated] = answer
        return answer

    best_cost = float("inf")
    best_assignment: list[tuple[int, ...]] | None = None
    if initial is not None:
        if satisfies(t.apply_updates(initial.updates), d):
            raise RepairError("the seed update is not consistent")
        best_cost = initial.distance

    # Per-dependency signature maps for O(1) pairwise-consistency checks.
    sig_maps: list[dict[tuple, tuple[int, int]]] = [{} for _ in fd_cols]
    assigned: list[tuple[int, ...]] = []
    used_fresh = [0] * n_cols
    # Liveness bookkeeping: an active-domain value is a useful rewrite target
    # only while some unassigned tuple still holds it originally or some
    # committed tuple currently carries it; otherwise it behaves exactly like
    # a fresh symbol, which is offered separately.
    future_count = [[0] * len(adom[c]) for c in range(n_cols)]
    for values in original:
        for c in range(n_cols):
            future_count[c][values[c]] += 1
    current_count = [[0] * (len(adom[c]) + n + 1) for c in range(n_cols)]

    def violated_vs_prefix(values: tuple[int, ...]) -> int:
        mask = 0
        for f, (lhs, rhs) in enumerate(fd_cols):
            sig = tuple(values[c] for c in lhs)
            seen = sig_maps[f].get(sig)
            if seen is not None and seen[0] != values[rhs]:
                mask |= 1 << f
        return mask

    def push(values: tuple[int, ...]) -> list[tuple[int, tuple]]:
        added = []
        for f, (lhs, rhs) in enumerate(fd_cols):
            sig = tuple(values[c] for c in lhs)
            seen = sig_maps[f].get(sig)
            sig_maps[f][sig] = (values[rhs], (seen[1] if seen else 0) + 1)
            added.append((f, sig))
        assigned.append(values)
        for c in range(n_cols):
            current_count[c][values[c]] += 1
        return added

    def pop(added: list[tuple[int, tuple]]) -> None:
        values = assigned.pop()
        for c in range(n_cols):
            current_count[c][values[c]] -= 1
        for f, sig in added:
            rhs_code, count = sig_maps[f][sig]
            if count == 1:
                del sig_maps[f][sig]
            else:
                sig_maps[f][sig] = (rhs_code, count - 1)

    def dynamic_bound(p: int) -> float:
        """Forced per-tuple repair costs plus an exact cover of the rest."""
        bound = 0.0
        free_mask = 0
        for q in range(p, n):
            violated = violated_vs_prefix(original[q])
            if violated:
                bound += weights[q] * min_changes_for(frozenset(_bits(violated)))
            else:
                free_mask |= 1 << q
        return bound + cover_lb(free_mask)

    def candidate_values(p: int):
        base = original[p]

        def options(col: int) -> list[int]:
            live = [
                v for v in range(len(adom[col]))
                if v != base[col] and (future_count[col][v] or current_count[col][v])
            ]
            first_fresh = len(adom[col])
            live += [first_fresh + k for k in range(min(used_fresh[col] + 1, pool))]
            return live

        def with_mask(cols: tuple[int, ...]):
            pools = [options(c) for c in cols]
            for combo in itertools.product(*pools):
                values = list(base)
                for c, v in zip(cols, combo):
                    values[c] = v
                yield tuple(values)

        yield base
        for count in range(1, n_cols + 1):
            for cols in itertools.combinations(range(n_cols), count):
                yield from with_mask(cols)

    def walk(p: int, cost: float) -> None:
        nonlocal best_cost, best_assignment
        if p == n:
            if cost < best_cost:
                best_cost = cost
                best_assignment = list(assigned)
            return
        if cost + dynamic_bound(p) >= best_cost:
            return
        base = original[p]
        for c in range(n_cols):
            future_count[c][base[c]] -= 1
        for values in candidate_values(p):
            changed = sum(1 for c in range(n_cols) if values[c] != base[c])
            new_cost = cost + weights[p] * changed
            if new_cost >= best_cost:
                break  # candidates are ordered by ascending per-tuple cost
            if violated_vs_prefix(values):
                continue
            introduced = [c for c in range(n_cols) if values[c] == len(adom[c]) + used_fresh[c]]
            for c in introduced:
                used_fresh[c] += 1
            added = push(values)
            walk(p + 1, new_cost)
            pop(added)
            for c in introduced:
                used_fresh[c] -= 1
        for c in range(n_cols):
            future_count[c][base[c]] += 1

    walk(0, 0.0)

    if best_assignment is None:
        if initial is None:
            raise AssertionError("search must find at least the all-fresh repair")
        return UpdateRepair({tid: dict(cells) for tid, cells in initial.updates.items()}, initial.distance, "exact")

    fresh = FreshValues()
    fresh_names: dict[tuple[int, int], str] = {}
    updates: dict[int, dict[str, str]] = {}
    for p, values in enumerate(best_assignment):
        tid = order[p]
        for c in range(n_cols):
            if values[c] == original[p][c]:
                continue
            if values[c] < len(adom[c]):
                new_value = adom[c][values[c]]
            else:
                key = (c, values[c])
                if key not in fresh_names:
                    fresh_names[key] = fresh.take()
                new_value = fresh_names[key]
            updates.setdefault(tid, {})[t.schema[c]] = new_value
    result = UpdateRepair.build(t, updates, "exact")
    if satisfies(t.apply_updates(result.updates), d):
        raise AssertionError("oracle produced an inconsistent update")
    return result
