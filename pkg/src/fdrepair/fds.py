"""The algebra of functional dependencies over a named attribute list.

Key ideas:
- Dependency sets are normalized on construction: every right-hand side is a
  single attribute, trivial dependencies are dropped, duplicates are merged,
  and the list is kept in a canonical sorted order.
- ``closure`` is the standard fixpoint; ``remove_attrs`` erases a set of
  attributes from the schema and from every dependency.
- ``detect_simplification`` finds, in a fixed order, the first structural
  simplification that makes exact subset repair possible (trivial set,
  shared left-hand attribute, empty left-hand side, or a married pair of
  left-hand sides with equal closures covering all others).
- ``metrics`` exposes the structural numbers used for approximation-ratio
  reporting (minimum left-hand-side cover, maximum left-hand-side size,
  core-implicant size, chain test).

All values are immutable; every function is pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import FdParseError

# Reserved marker for synthesized values; forbidden in input names and cells.
FRESH_PREFIX = "⟨fresh:"


def attr_key(attrs: frozenset[str]) -> tuple[str, ...]:
    """Canonical sort key for an attribute set."""
    return tuple(sorted(attrs))


def validate_attribute(name: str) -> str:
    if not name:
        raise ValueError("attribute name must be non-empty")
    if any(ch.isspace() for ch in name):
        raise ValueError(f"attribute name {name!r} contains whitespace")
    if "," in name:
        raise ValueError(f"attribute name {name!r} contains a comma")
    if FRESH_PREFIX in name:
        raise ValueError(f"attribute name {name!r} uses the reserved fresh-value prefix")
    return name


@dataclass(frozen=True)
class Fd:
    """A functional dependency lhs -> rhs between attribute sets."""

    lhs: frozenset[str]
    rhs: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lhs", frozenset(self.lhs))
        object.__setattr__(self, "rhs", frozenset(self.rhs))

    @property
    def is_trivial(self) -> bool:
        return self.rhs <= self.lhs

    @property
    def is_consensus(self) -> bool:
        return not self.lhs

    @property
    def rhs_attr(self) -> str:
        if len(self.rhs) != 1:
            raise ValueError("dependency is not normalized to a single rhs attribute")
        return next(iter(self.rhs))

    def sort_key(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return (attr_key(self.lhs), attr_key(self.rhs))

    def __str__(self) -> str:
        return f"{', '.join(sorted(self.lhs))} -> {', '.join(sorted(self.rhs))}".strip()


def fd(lhs: str | tuple[str, ...] | frozenset[str], rhs: str | tuple[str, ...] | frozenset[str]) -> Fd:
    """Convenience constructor accepting bare strings or collections."""
    to_set = lambda x: frozenset([x]) if isinstance(x, str) else frozenset(x)
    return Fd(to_set(lhs), to_set(rhs))


@dataclass(frozen=True)
class FdSet:
    """A normalized set of dependencies over an ordered schema.

    Normalization splits multi-attribute right-hand sides, drops trivial
    dependencies and duplicates, and sorts the remainder, so structurally
    equal sets compare equal.
    """

    schema: tuple[str, ...]
    fds: tuple[Fd, ...]

    def __post_init__(self) -> None:
        schema = tuple(validate_attribute(a) for a in self.schema)
        if len(set(schema)) != len(schema):
            raise ValueError("schema contains duplicate attributes")
        known = set(schema)
        normalized: dict[tuple, Fd] = {}
        for dep in self.fds:
            unknown = (dep.lhs | dep.rhs) - known
            if unknown:
                raise ValueError(f"dependency {dep} mentions attributes outside the schema: {sorted(unknown)}")
            for target in sorted(dep.rhs):
                single = Fd(dep.lhs, frozenset([target]))
                if not single.is_trivial:
                    normalized[single.sort_key()] = single
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "fds", tuple(normalized[k] for k in sorted(normalized)))

    @property
    def is_trivial(self) -> bool:
        return not self.fds

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(self.schema)

    def mentioned_attrs(self) -> frozenset[str]:
        """Attributes occurring in at least one dependency."""
        out: set[str] = set()
        for dep in self.fds:
            out |= dep.lhs | dep.rhs
        return frozenset(out)

    def closure(self, attrs: frozenset[str] | set[str]) -> frozenset[str]:
        """cl(attrs): all attributes functionally determined by ``attrs``."""
        attrs = frozenset(attrs)
        if not attrs <= self.attributes:
            raise ValueError(f"attributes {sorted(attrs - self.attributes)} are not in the schema")
        closed = set(attrs)
        changed = True
        while changed:
            changed = False
            for dep in self.fds:
                if dep.lhs <= closed and not dep.rhs <= closed:
                    closed |= dep.rhs
                    changed = True
        return frozenset(closed)

    def consensus_closure(self) -> frozenset[str]:
        """All attributes forced to a single value table-wide: cl(∅)."""
        return self.closure(frozenset())

    @property
    def is_consensus_free(self) -> bool:
        return not self.consensus_closure()

    def remove_attrs(self, attrs: frozenset[str] | set[str]) -> FdSet:
        """Erase ``attrs`` from the schema and from every lhs and rhs."""
        attrs = frozenset(attrs)
        if not attrs <= self.attributes:
            raise ValueError(f"attributes {sorted(attrs - self.attributes)} are not in the schema")
        schema = tuple(a for a in self.schema if a not in attrs)
        kept = []
        for dep in self.fds:
            rhs = dep.rhs - attrs
            if rhs:
                kept.append(Fd(dep.lhs - attrs, rhs))
        return FdSet(schema, tuple(kept))

    def erase_attrs(self, attrs: frozenset[str] | set[str]) -> FdSet:
        """Like :meth:`remove_attrs` but keeps the schema unchanged.

        Used when recursing over sub-tables that still carry all columns.
        """
        attrs = frozenset(attrs)
        if not attrs <= self.attributes:
            raise ValueError(f"attributes {sorted(attrs - self.attributes)} are not in the schema")
        kept = []
        for dep in self.fds:
            rhs = dep.rhs - attrs
            if rhs:
                kept.append(Fd(dep.lhs - attrs, rhs))
        return FdSet(self.schema, tuple(kept))

    def restrict_to(self, fds: tuple[Fd, ...]) -> FdSet:
        """Same schema, a subset of the dependencies (used for fragments)."""
        return FdSet(self.schema, fds)

    @property
    def is_chain(self) -> bool:
        """True when the left-hand sides are totally ordered by inclusion."""
        for a, b in itertools.combinations(self.fds, 2):
            if not (a.lhs <= b.lhs or b.lhs <= a.lhs):
                return False
        return True


# ---------------------------------------------------------------------------
# Simplification detectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trivial:
    pass


@dataclass(frozen=True)
class CommonLhs:
    attr: str


@dataclass(frozen=True)
class ConsensusFd:
    attr: str


@dataclass(frozen=True)
class LhsMarriage:
    lhs_a: frozenset[str]
    lhs_b: frozenset[str]


Simplification = Trivial | CommonLhs | ConsensusFd | LhsMarriage

STEP_KINDS = {CommonLhs: "common-lhs", ConsensusFd: "consensus", LhsMarriage: "lhs-marriage"}


def removed_attrs(step: Simplification) -> frozenset[str]:
    if isinstance(step, Trivial):
        return frozenset()
    if isinstance(step, (CommonLhs, ConsensusFd)):
        return frozenset([step.attr])
    return step.lhs_a | step.lhs_b


def detect_simplification(d: FdSet) -> Simplification | None:
    """First applicable simplification, or None when the set is stuck.

    Checks run in a fixed order (trivial, common lhs, consensus, lhs
    marriage) and break ties by lexicographically least attribute or pair,
    so the result is deterministic and depends only on the dependency set.
    """
    if d.is_trivial:
        return Trivial()

    common = frozenset.intersection(*(dep.lhs for dep in d.fds))
    if common:
        return CommonLhs(min(common))

    consensus = sorted(dep.rhs_attr for dep in d.fds if dep.is_consensus)
    if consensus:
        return ConsensusFd(consensus[0])

    unique_lhs = sorted({dep.lhs for dep in d.fds}, key=attr_key)
    closures = {lhs: d.closure(lhs) for lhs in unique_lhs}
    for lhs_a, lhs_b in itertools.combinations(unique_lhs, 2):
        if closures[lhs_a] != closures[lhs_b]:
            continue
        if all(lhs_a <= dep.lhs or lhs_b <= dep.lhs for dep in d.fds):
            return LhsMarriage(lhs_a, lhs_b)
    return None


# ---------------------------------------------------------------------------
# Classifier trace
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    kind: str
    removed: frozenset[str]
    remaining: FdSet


@dataclass(frozen=True)
class ClassifierTrace:
    steps: tuple[TraceStep, ...]
    verdict: bool

    def payload(self) -> dict:
        return {
            "verdict": self.verdict,
            "steps": [
                {
                    "kind": s.kind,
                    "removed": sorted(s.removed),
                    "remaining": [str(dep) for dep in s.remaining.fds],
                }
                for s in self.steps
            ],
        }


# ---------------------------------------------------------------------------
# Structural metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FdMetrics:
    mlc: int | None
    mfs: int
    mci: int
    is_chain: bool
    consensus_attrs: frozenset[str]


def _min_hitting_set(family: list[frozenset[str]]) -> frozenset[str]:
    """Smallest attribute set intersecting every member, by exhaustive search.

    Candidates are enumerated in increasing size and lexicographic order, so
    the returned witness is deterministic.
    """
    family = [s for s in family if s]
    if not family:
        return frozenset()
    universe = sorted(frozenset.union(*family))
    for size in range(1, len(universe) + 1):
        for combo in itertools.combinations(universe, size):
            chosen = frozenset(combo)
            if all(chosen & member for member in family):
                return chosen
    raise AssertionError("the full universe always hits every nonempty member")


def min_lhs_cover(d: FdSet) -> frozenset[str] | None:
    """Deterministic minimum lhs cover, or None when a consensus FD exists.

    An empty left-hand side cannot be hit, so the cover is undefined in the
    presence of consensus dependencies.
    """
    if any(dep.is_consensus for dep in d.fds):
        return None
    return _min_hitting_set([dep.lhs for dep in d.fds])


def metrics(d: FdSet) -> FdMetrics:
    cover = min_lhs_cover(d)
    mfs = max((len(dep.lhs) for dep in d.fds), default=0)

    # Per attribute, the implicant family is the set of left-hand sides of
    # the normalized dependencies targeting it; the core is its minimum
    # hitting set, and mci is the largest core over all attributes.
    mci = 0
    for target in d.schema:
        family = sorted({dep.lhs for dep in d.fds if dep.rhs_attr == target}, key=attr_key)
        if family:
            mci = max(mci, len(_min_hitting_set(list(family))))

    return FdMetrics(
        mlc=None if cover is None else len(cover),
        mfs=mfs,
        mci=mci,
        is_chain=d.is_chain,
        consensus_attrs=d.consensus_closure(),
    )


def ratio_bounds(d: FdSet) -> dict[str, float | None]:
    """Approximation-ratio bounds reported for a dependency set.

    For a trivial set every repair is exact, so all bounds are 1. When a
    consensus FD exists the lhs-cover bound is undefined (None).
    """
    if d.is_trivial:
        return {"bound_2mlc": 1.0, "bound_kl": 1.0, "combined_bound": 1.0}
    m = metrics(d)
    bound_2mlc = None if m.mlc is None else 2.0 * m.mlc
    bound_kl = float((m.mci + 2) * (2 * m.mfs - 1))
    defined = [b for b in (bound_2mlc, bound_kl) if b is not None]
    return {
        "bound_2mlc": bound_2mlc,
        "bound_kl": bound_kl,
        "combined_bound": min(defined) if defined else None,
    }


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def parse_attribute_list(text: str) -> tuple[str, ...]:
    """Parse a schema file: attribute names separated by commas or newlines."""
    names: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for token in line.split(","):
            token = token.strip()
            if not token:
                raise FdParseError("empty attribute name", lineno)
            try:
                names.append(validate_attribute(token))
            except ValueError as exc:
                raise FdParseError(str(exc), lineno) from exc
    return tuple(names)


def parse_fds(text: str, schema: tuple[str, ...]) -> FdSet:
    """Parse dependency text: one ``lhs -> rhs`` per line.

    Attributes are comma-separated; an empty lhs (``-> C``) denotes a
    consensus dependency; ``#`` starts a comment. Unknown attributes and
    empty right-hand sides are rejected with the offending line number.
    """
    known = set(schema)
    deps: list[Fd] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.count("->") != 1:
            raise FdParseError(f"expected exactly one '->' in {line!r}", lineno)
        lhs_text, rhs_text = line.split("->")

        def side(chunk: str, allow_empty: bool) -> frozenset[str]:
            chunk = chunk.strip()
            if not chunk:
                if allow_empty:
                    return frozenset()
                raise FdParseError("empty right-hand side", lineno)
            names = []
            for token in chunk.split(","):
                token = token.strip()
                if not token:
                    raise FdParseError("empty attribute name", lineno)
                if token not in known:
                    raise FdParseError(f"unknown attribute {token!r}", lineno)
                names.append(token)
            return frozenset(names)

        deps.append(Fd(side(lhs_text, allow_empty=True), side(rhs_text, allow_empty=False)))
    return FdSet(tuple(schema), tuple(deps))


def fds_to_text(d: FdSet) -> str:
    """Canonical dependency text; round-trips through ``parse_fds``."""
    lines = []
    for dep in d.fds:
        lhs = ", ".join(sorted(dep.lhs))
        lines.append(f"{lhs} -> {dep.rhs_attr}" if lhs else f"-> {dep.rhs_attr}")
    return "\n".join(lines) + ("\n" if lines else "")
