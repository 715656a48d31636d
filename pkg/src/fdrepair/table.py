"""Weighted, identified tables: CSV ingestion, satisfaction, distances.

A table maps unique positive integer ids to (tuple, weight) pairs over an
ordered schema. Cell values are opaque strings compared by exact equality;
duplicate tuples under distinct ids are allowed. Tables are immutable after
construction, so all operations here are pure and safe to call concurrently.

CSV convention: header row, first column literally ``id``, optional last
column literally ``weight`` (defaults to 1), every other column an attribute.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

from .errors import SchemaMismatchError, TableFormatError
from .fds import FRESH_PREFIX, Fd, FdSet, validate_attribute

WEIGHT_TOLERANCE = 1e-9

_RESERVED_COLUMNS = ("id", "weight")


class FreshValues:
    """Per-repair source of reserved fresh values, one counter per repair."""

    def __init__(self) -> None:
        self._next = 1

    def take(self) -> str:
        value = f"{FRESH_PREFIX}{self._next}⟩"
        self._next += 1
        return value


def is_fresh(value: str) -> bool:
    return value.startswith(FRESH_PREFIX)


@dataclass(frozen=True)
class Table:
    """Immutable table: ordered schema plus id -> (values, weight) rows."""

    schema: tuple[str, ...]
    rows: dict[int, tuple[tuple[str, ...], float]]
    has_weight_column: bool = True

    def __post_init__(self) -> None:
        for name in self.schema:
            validate_attribute(name)
            if name in _RESERVED_COLUMNS:
                raise TableFormatError(f"attribute name {name!r} is reserved for the CSV layout")
        index = {name: pos for pos, name in enumerate(self.schema)}
        if len(index) != len(self.schema):
            raise TableFormatError("schema contains duplicate attributes")
        for tid, (values, weight) in self.rows.items():
            if not isinstance(tid, int) or tid <= 0:
                raise TableFormatError(f"tuple id {tid!r} is not a positive integer")
            if len(values) != len(self.schema):
                raise TableFormatError(f"tuple {tid} has {len(values)} values for {len(self.schema)} attributes")
            if not math.isfinite(weight) or weight < 0:
                raise TableFormatError(f"tuple {tid} has invalid weight {weight!r}")
        object.__setattr__(self, "_index", index)

    # -- basic access -------------------------------------------------------

    def ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.rows))

    def __len__(self) -> int:
        return len(self.rows)

    def values(self, tid: int) -> tuple[str, ...]:
        return self.rows[tid][0]

    def weight(self, tid: int) -> float:
        return self.rows[tid][1]

    def cell(self, tid: int, attr: str) -> str:
        return self.rows[tid][0][self._index[attr]]  # type: ignore[attr-defined]

    def attr_pos(self, attr: str) -> int:
        index = self._index  # type: ignore[attr-defined]
        if attr not in index:
            raise SchemaMismatchError(f"attribute {attr!r} is not in the schema")
        return index[attr]

    def project(self, tid: int, attrs: frozenset[str] | tuple[str, ...]) -> tuple[str, ...]:
        """Values of a tuple on a sorted attribute list (block keys)."""
        return tuple(self.cell(tid, a) for a in sorted(attrs))

    def total_weight(self, ids: frozenset[int] | None = None) -> float:
        pool = self.rows if ids is None else ids
        return sum(self.rows[i][1] for i in pool)

    @property
    def is_unweighted(self) -> bool:
        weights = {w for _, w in self.rows.values()}
        return len(weights) <= 1

    def column_values(self, attr: str) -> frozenset[str]:
        """Active domain of one column."""
        pos = self.attr_pos(attr)
        return frozenset(values[pos] for values, _ in self.rows.values())

    # -- derived tables ------------------------------------------------------

    def subset(self, ids: frozenset[int] | set[int]) -> Table:
        unknown = set(ids) - set(self.rows)
        if unknown:
            raise TableFormatError(f"unknown tuple ids {sorted(unknown)}")
        return Table(self.schema, {i: self.rows[i] for i in ids}, self.has_weight_column)

    def apply_updates(self, updates: dict[int, dict[str, str]]) -> Table:
        rows = dict(self.rows)
        for tid, cells in updates.items():
            if tid not in rows:
                raise TableFormatError(f"unknown tuple id {tid}")
            values, weight = rows[tid]
            new_values = list(values)
            for attr, value in cells.items():
                new_values[self.attr_pos(attr)] = value
            rows[tid] = (tuple(new_values), weight)
        return Table(self.schema, rows, self.has_weight_column)


# ---------------------------------------------------------------------------
# Repair containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubsetRepair:
    """A retained-id set with its deletion distance and a guarantee label."""

    retained_ids: frozenset[int]
    distance: float
    guarantee: str  # "exact" or "2-approx"


@dataclass(frozen=True)
class UpdateRepair:
    """A per-tuple cell rewrite with its weighted Hamming distance.

    ``updates`` holds only genuinely changed cells; no-op entries are
    dropped at construction so the stored distance is consistent.
    """

    updates: dict[int, dict[str, str]]
    distance: float
    guarantee: str  # "exact" or "<ratio>-approx"

    @staticmethod
    def build(t: Table, updates: dict[int, dict[str, str]], guarantee: str) -> UpdateRepair:
        cleaned: dict[int, dict[str, str]] = {}
        distance = 0.0
        for tid in sorted(updates):
            cells = {a: v for a, v in updates[tid].items() if t.cell(tid, a) != v}
            if cells:
                cleaned[tid] = dict(sorted(cells.items()))
                distance += t.weight(tid) * len(cells)
        return UpdateRepair(cleaned, distance, guarantee)

    def touched_ids(self) -> frozenset[int]:
        return frozenset(self.updates)


def merge_updates(t: Table, parts: list[UpdateRepair], guarantee: str) -> UpdateRepair:
    """Compose repairs that touch pairwise disjoint attributes."""
    combined: dict[int, dict[str, str]] = {}
    for part in parts:
        for tid, cells in part.updates.items():
            slot = combined.setdefault(tid, {})
            for attr, value in cells.items():
                if attr in slot and slot[attr] != value:
                    raise ValueError(f"conflicting updates for tuple {tid}, attribute {attr!r}")
                slot[attr] = value
    return UpdateRepair.build(t, combined, guarantee)


# ---------------------------------------------------------------------------
# Satisfaction, distances, conflicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    fd: Fd
    ids: tuple[int, int]


def _check_schemas(t: Table, d: FdSet) -> None:
    if tuple(d.schema) != tuple(t.schema):
        raise SchemaMismatchError(f"table schema {t.schema} differs from dependency schema {d.schema}")


def satisfies(t: Table, d: FdSet) -> list[Violation]:
    """All violating pairs, each with i < j, sorted by (i, j, fd)."""
    _check_schemas(t, d)
    found: list[Violation] = []
    ids = t.ids()
    for dep in d.fds:
        lhs = tuple(sorted(dep.lhs))
        rhs_pos = t.attr_pos(dep.rhs_attr)
        groups: dict[tuple[str, ...], list[int]] = {}
        for tid in ids:
            groups.setdefault(t.project(tid, lhs), []).append(tid)
        for members in groups.values():
            for i, j in itertools.combinations(members, 2):
                if t.values(i)[rhs_pos] != t.values(j)[rhs_pos]:
                    found.append(Violation(dep, (i, j)))
    return sorted(found, key=lambda v: (v.ids, v.fd.sort_key()))


def dist_sub(t: Table, retained: frozenset[int] | set[int]) -> float:
    """Weighted sum of the deleted tuples."""
    retained = frozenset(retained)
    unknown = retained - set(t.rows)
    if unknown:
        raise TableFormatError(f"unknown tuple ids {sorted(unknown)}")
    return sum(t.weight(i) for i in t.rows if i not in retained)


def dist_upd(t: Table, u: UpdateRepair) -> float:
    """Weighted Hamming distance of an update from the original table."""
    total = 0.0
    for tid, cells in u.updates.items():
        if tid not in t.rows:
            raise TableFormatError(f"unknown tuple id {tid}")
        changed = sum(1 for attr, value in cells.items() if t.cell(tid, attr) != value)
        total += t.weight(tid) * changed
    return total


@dataclass(frozen=True)
class ConflictGraph:
    """Tuple ids as nodes; an edge joins every jointly violating pair."""

    nodes: tuple[int, ...]
    edges: dict[tuple[int, int], tuple[Fd, ...]]

    def neighbors(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {n: set() for n in self.nodes}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj


def pair_violations(t: Table, d: FdSet, i: int, j: int) -> tuple[Fd, ...]:
    """Dependencies violated jointly by tuples i and j."""
    vi, vj = t.values(i), t.values(j)
    out = []
    for dep in d.fds:
        if all(vi[t.attr_pos(a)] == vj[t.attr_pos(a)] for a in dep.lhs):
            if vi[t.attr_pos(dep.rhs_attr)] != vj[t.attr_pos(dep.rhs_attr)]:
                out.append(dep)
    return tuple(out)


def conflict_graph(t: Table, d: FdSet) -> ConflictGraph:
    _check_schemas(t, d)
    ids = t.ids()
    edges: dict[tuple[int, int], tuple[Fd, ...]] = {}
    for i, j in itertools.combinations(ids, 2):
        violated = pair_violations(t, d, i, j)
        if violated:
            edges[(i, j)] = violated
    return ConflictGraph(ids, edges)


# ---------------------------------------------------------------------------
# CSV input/output
# ---------------------------------------------------------------------------

def load_table(content: str, *, allow_zero_weights: bool = False) -> Table:
    """Parse a table CSV into a :class:`Table`.

    Rejects duplicate ids, non-positive or non-numeric weights, ragged rows,
    and any cell carrying the reserved fresh-value prefix.
    """
    reader = csv.reader(io.StringIO(content))
    try:
        header = next(reader)
    except StopIteration:
        raise TableFormatError("empty file: a header row is required") from None
    if not header or header[0] != "id":
        raise TableFormatError("first column must be literally 'id'")
    has_weight = len(header) > 1 and header[-1] == "weight"
    attrs = tuple(header[1:-1] if has_weight else header[1:])
    for name in attrs:
        if name in _RESERVED_COLUMNS:
            raise TableFormatError(f"column {name!r} may only appear in its reserved position")
        try:
            validate_attribute(name)
        except ValueError as exc:
            raise TableFormatError(str(exc)) from exc

    rows: dict[int, tuple[tuple[str, ...], float]] = {}
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(header):
            raise TableFormatError(f"row {lineno}: expected {len(header)} fields, found {len(record)}")
        try:
            tid = int(record[0])
        except ValueError:
            raise TableFormatError(f"row {lineno}: id {record[0]!r} is not an integer") from None
        if tid <= 0:
            raise TableFormatError(f"row {lineno}: id must be positive")
        if tid in rows:
            raise TableFormatError(f"row {lineno}: duplicate id {tid}")
        if has_weight:
            try:
                weight = float(record[-1])
            except ValueError:
                raise TableFormatError(f"row {lineno}: weight {record[-1]!r} is not numeric") from None
            if not math.isfinite(weight):
                raise TableFormatError(f"row {lineno}: weight must be finite")
            floor_ok = weight >= 0 if allow_zero_weights else weight > 0
            if not floor_ok:
                raise TableFormatError(f"row {lineno}: weight must be positive")
        else:
            weight = 1.0
        values = tuple(record[1:-1] if has_weight else record[1:])
        for value in values:
            if FRESH_PREFIX in value:
                raise TableFormatError(f"row {lineno}: value {value!r} uses the reserved fresh prefix")
        rows[tid] = (values, weight)
    return Table(attrs, rows, has_weight)


def _format_weight(w: float) -> str:
    return repr(int(w)) if float(w).is_integer() else repr(w)


def table_to_csv(t: Table) -> str:
    """Serialize with the original column order (RFC-4180 quoting, UTF-8)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = ["id", *t.schema] + (["weight"] if t.has_weight_column else [])
    writer.writerow(header)
    for tid in t.ids():
        values, weight = t.rows[tid]
        record = [str(tid), *values] + ([_format_weight(weight)] if t.has_weight_column else [])
        writer.writerow(record)
    return out.getvalue()


def changelog_csv(t: Table, u: UpdateRepair) -> str:
    """Cell-level change log: ``id,attribute,old,new``, sorted."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["id", "attribute", "old", "new"])
    for tid in sorted(u.updates):
        for attr in sorted(u.updates[tid]):
            writer.writerow([str(tid), attr, t.cell(tid, attr), u.updates[tid][attr]])
    return out.getvalue()
