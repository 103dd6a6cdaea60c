"""Data model for same-route integer equal-flow problems.

An instance is a dense ``n_sources x n_dests x n_periods`` grid of integer
arc variables.  Each (source, period) row and each (dest, period) column
carries one linear relation against its supply or demand.  Equal-flow
classes tie groups of arcs to a single shared value and forbidden arcs are
fixed to zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Optional, Sequence

RELATIONS = ("=", "<=", ">=")
KINDS = ("transportation", "assignment", "generalized")


class ArcIndex(NamedTuple):
    source: int
    dest: int
    period: int


@dataclass(frozen=True)
class VarBounds:
    lower: int = 0
    upper: Optional[int] = None  # None is +infinity

    def contains(self, value: int) -> bool:
        if value < self.lower:
            return False
        return self.upper is None or value <= self.upper

    @property
    def finite(self) -> bool:
        return self.upper is not None


@dataclass(frozen=True)
class EqualFlowClass:
    id: str
    members: tuple[ArcIndex, ...]
    shared_value: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(ArcIndex(*m) for m in self.members))


@dataclass(frozen=True)
class QuadraticTerm:
    """``weight * (x[arc] - t[aux])**2``; ``aux`` names a free shared-value variable."""

    weight: int
    arc: ArcIndex
    aux: str


@dataclass(frozen=True)
class Objective:
    linear: Mapping[ArcIndex, int] = field(default_factory=dict)
    quadratic: tuple[QuadraticTerm, ...] = ()
    aux_bounds: Mapping[str, VarBounds] = field(default_factory=dict)

    def is_zero(self) -> bool:
        return not any(self.linear.values()) and not self.quadratic

    def evaluate(self, values: Mapping[ArcIndex, int], aux: Mapping[str, int] = None) -> int:
        aux = aux or {}
        total = sum(c * values[a] for a, c in self.linear.items())
        for term in self.quadratic:
            total += term.weight * (values[term.arc] - aux[term.aux]) ** 2
        return total


@dataclass(frozen=True)
class Violation:
    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.message}"


@dataclass(frozen=True)
class ProblemInstance:
    """A same-route equal-flow problem on a dense arc grid.

    ``row_supply[i][t]`` is the right-hand side of the (source i, period t)
    row sum and ``col_demand[j][t]`` that of the (dest j, period t) column
    sum.  ``column_origin`` is only set on instances produced by unit-slot
    expansion and maps every column back to its original destination.
    """

    n_sources: int
    n_dests: int
    n_periods: int
    row_supply: tuple[tuple[int, ...], ...]
    col_demand: tuple[tuple[int, ...], ...]
    row_rel: str = "="
    col_rel: str = "="
    default_bounds: VarBounds = VarBounds(0, None)
    bound_overrides: Mapping[ArcIndex, VarBounds] = field(default_factory=dict)
    classes: tuple[EqualFlowClass, ...] = ()
    forbidden: frozenset[ArcIndex] = frozenset()
    objective: Optional[Objective] = None
    kind: str = "transportation"
    integrality: bool = True
    column_origin: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "row_supply", tuple(tuple(r) for r in self.row_supply))
        object.__setattr__(self, "col_demand", tuple(tuple(c) for c in self.col_demand))
        object.__setattr__(
            self, "bound_overrides",
            {ArcIndex(*a): b for a, b in self.bound_overrides.items()})
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "forbidden", frozenset(ArcIndex(*a) for a in self.forbidden))

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.n_sources, self.n_dests, self.n_periods)

    @property
    def symbol(self) -> int:
        """Size of the instance: sources * destinations * periods."""
        return self.n_sources * self.n_dests * self.n_periods

    def arcs(self) -> Iterator[ArcIndex]:
        """Row-major traversal: source, then dest, then period."""
        for i, j, t in itertools.product(
                range(self.n_sources), range(self.n_dests), range(self.n_periods)):
            yield ArcIndex(i, j, t)

    def in_range(self, arc: Sequence[int]) -> bool:
        return (len(arc) == 3
                and 0 <= arc[0] < self.n_sources
                and 0 <= arc[1] < self.n_dests
                and 0 <= arc[2] < self.n_periods)

    def bounds(self, arc: ArcIndex) -> VarBounds:
        return self.bound_overrides.get(arc, self.default_bounds)

    def class_index(self) -> dict[ArcIndex, EqualFlowClass]:
        """Reverse index arc -> class.  Later classes win on overlap."""
        return {m: c for c in self.classes for m in c.members}

    def replace(self, **changes) -> "ProblemInstance":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class Witness:
    """Integer value per arc (or per variable name for constraint systems)."""

    values: Mapping

    def __getitem__(self, key):
        return self.values[key]

    def grid(self, instance: ProblemInstance) -> list:
        """Nested ``[i][j][t]`` list in the instance's shape."""
        return [[[self.values[ArcIndex(i, j, t)] for t in range(instance.n_periods)]
                 for j in range(instance.n_dests)]
                for i in range(instance.n_sources)]

    @classmethod
    def from_grid(cls, grid) -> "Witness":
        values = {}
        for i, row in enumerate(grid):
            for j, col in enumerate(row):
                for t, v in enumerate(col):
                    values[ArcIndex(i, j, t)] = int(v)
        return cls(values)

    @classmethod
    def from_matrix(cls, matrix) -> "Witness":
        """Single-period convenience: ``matrix[i][j]`` is the period-0 flow."""
        return cls.from_grid([[[v] for v in row] for row in matrix])


@dataclass(frozen=True)
class Refutation:
    """Derived constant sentence ``0 <= rhs`` with ``rhs < 0``.

    ``parents`` are the direct (row id, multiplier) pairs the sentence was
    combined from; ``combination`` expresses it over the input constraints
    as ``(input index, side, multiplier)`` triples.
    """

    rhs: object
    parents: tuple = ()
    combination: tuple = ()
    origin: str = "fbce"


@dataclass(frozen=True)
class Certificate:
    verdict: str  # feasible | infeasible | unknown
    witness: Optional[Witness] = None
    refutation: Optional[Refutation] = None
    reason: str = ""

    @classmethod
    def feasible(cls, witness: Witness) -> "Certificate":
        return cls("feasible", witness=witness)

    @classmethod
    def infeasible(cls, refutation: Refutation = None, reason: str = "") -> "Certificate":
        return cls("infeasible", refutation=refutation, reason=reason)

    @classmethod
    def unknown(cls, reason: str) -> "Certificate":
        return cls("unknown", reason=reason)

    @property
    def is_feasible(self) -> bool:
        return self.verdict == "feasible"

    @property
    def is_infeasible(self) -> bool:
        return self.verdict == "infeasible"

    @property
    def is_unknown(self) -> bool:
        return self.verdict == "unknown"


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate_instance(instance: ProblemInstance) -> list[Violation]:
    """Return every well-formedness violation of ``instance`` (empty if valid)."""
    out: list[Violation] = []
    inst = instance
    for name, n in (("n_sources", inst.n_sources), ("n_dests", inst.n_dests),
                    ("n_periods", inst.n_periods)):
        if not _is_int(n) or n < 0:
            out.append(Violation(name, f"dimension must be a nonnegative integer, got {n!r}"))
    if out:
        return out

    for label, table, n in (("row_supply", inst.row_supply, inst.n_sources),
                            ("col_demand", inst.col_demand, inst.n_dests)):
        if len(table) != n:
            out.append(Violation(label, f"expected {n} rows, got {len(table)}"))
            continue
        for k, vec in enumerate(table):
            if len(vec) != inst.n_periods:
                out.append(Violation(f"{label}[{k}]",
                                     f"expected {inst.n_periods} periods, got {len(vec)}"))
                continue
            for t, v in enumerate(vec):
                if not _is_int(v) or v < 0:
                    out.append(Violation(f"{label}[{k}][{t}]",
                                         f"must be a nonnegative integer, got {v!r}"))

    for label, rel in (("row_rel", inst.row_rel), ("col_rel", inst.col_rel)):
        if rel not in RELATIONS:
            out.append(Violation(label, f"unknown relation {rel!r}"))
    if inst.kind not in KINDS:
        out.append(Violation("kind", f"unknown kind {inst.kind!r}"))
    if not inst.integrality:
        out.append(Violation("integrality", "only integer models are supported"))

    def check_bounds(where, b):
        if not _is_int(b.lower) or (b.upper is not None and not _is_int(b.upper)):
            out.append(Violation(where, "bounds must be integers"))
        elif b.lower < 0:
            out.append(Violation(where, f"lower bound {b.lower} is negative"))
        elif b.upper is not None and b.lower > b.upper:
            out.append(Violation(where, f"lower bound {b.lower} exceeds upper {b.upper}"))

    check_bounds("bounds.default", inst.default_bounds)
    for arc, b in inst.bound_overrides.items():
        if not inst.in_range(arc):
            out.append(Violation(f"bounds{tuple(arc)}", "arc out of range"))
        check_bounds(f"bounds{tuple(arc)}", b)

    owner: dict[ArcIndex, set] = {}
    seen_ids = set()
    for cls in inst.classes:
        where = f"class {cls.id}"
        if cls.id in seen_ids:
            out.append(Violation(where, "duplicate class id"))
        seen_ids.add(cls.id)
        if not cls.members:
            out.append(Violation(where, "class has no members"))
        if len(set(cls.members)) != len(cls.members):
            out.append(Violation(where, "members are not pairwise distinct"))
        n_forbidden = 0
        for m in cls.members:
            if not inst.in_range(m):
                out.append(Violation(where, f"member {tuple(m)} out of range"))
                continue
            owner.setdefault(m, set()).add(cls.id)
            if m in inst.forbidden:
                n_forbidden += 1
            if cls.shared_value is not None and not inst.bounds(m).contains(cls.shared_value):
                out.append(Violation(
                    where, f"shared value {cls.shared_value} outside bounds of {tuple(m)}"))
        if 0 < n_forbidden < len(cls.members):
            out.append(Violation(where, "class is only partially forbidden"))

    for arc in sorted(owner):
        if len(owner[arc]) > 1:
            out.append(Violation(f"arc {tuple(arc)}",
                                 f"belongs to classes {', '.join(sorted(owner[arc]))}"))

    for arc in sorted(inst.forbidden):
        if not inst.in_range(arc):
            out.append(Violation(f"forbidden{tuple(arc)}", "arc out of range"))

    if inst.kind == "assignment":
        for arc in inst.arcs():
            b = inst.bounds(arc)
            if b.lower < 0 or b.upper is None or b.upper > 1:
                out.append(Violation(f"bounds{tuple(arc)}", "assignment arcs must be 0/1"))
                break
        if any(v != 1 for col in inst.col_demand for v in col):
            out.append(Violation("col_demand", "assignment demands must all be 1"))

    if inst.objective is not None:
        for arc in inst.objective.linear:
            if not inst.in_range(arc):
                out.append(Violation(f"objective{tuple(arc)}", "arc out of range"))
        for term in inst.objective.quadratic:
            if not inst.in_range(term.arc):
                out.append(Violation(f"objective{tuple(term.arc)}", "arc out of range"))
            if term.aux not in inst.objective.aux_bounds:
                out.append(Violation(f"objective[{term.aux}]", "undeclared shared-value variable"))

    if inst.column_origin is not None and len(inst.column_origin) != inst.n_dests:
        out.append(Violation("column_origin", "length must equal n_dests"))

    if sum(1 for _ in inst.arcs()) != inst.symbol:
        out.append(Violation("symbol", "grid cardinality does not match dimensions"))
    return out


def _compare(lhs: int, rel: str, rhs: int) -> bool:
    if rel == "=":
        return lhs == rhs
    if rel == "<=":
        return lhs <= rhs
    return lhs >= rhs


def validate_witness(instance: ProblemInstance, w: Witness) -> bool:
    """Check ``w`` against every constraint of ``instance`` in exact integers."""
    values = w.values
    missing = [a for a in instance.arcs() if a not in values]
    if missing:
        raise ValueError(f"witness does not cover arc {tuple(missing[0])}")
    if len(values) != instance.symbol:
        raise ValueError(
            f"witness has {len(values)} entries for a grid of {instance.symbol} arcs")

    for arc in instance.arcs():
        v = values[arc]
        if not _is_int(v) or not instance.bounds(arc).contains(v):
            return False
        if arc in instance.forbidden and v != 0:
            return False
    for cls in instance.classes:
        vals = {values[m] for m in cls.members}
        if len(vals) > 1:
            return False
        if cls.shared_value is not None and vals != {cls.shared_value}:
            return False
    ni, nj, nt = instance.dims
    for i in range(ni):
        for t in range(nt):
            s = sum(values[ArcIndex(i, j, t)] for j in range(nj))
            if not _compare(s, instance.row_rel, instance.row_supply[i][t]):
                return False
    for j in range(nj):
        for t in range(nt):
            s = sum(values[ArcIndex(i, j, t)] for i in range(ni))
            if not _compare(s, instance.col_rel, instance.col_demand[j][t]):
                return False
    return True


def class_of(instance: ProblemInstance, source: int = None, dest: int = None,
             period: int = None) -> set[ArcIndex]:
    """All grid arcs matching the fixed index components.

    ``class_of(inst, source=0)`` is every arc leaving source 0; leaving
    every component free returns the whole grid.
    """
    for label, value, n in (("source", source, instance.n_sources),
                            ("dest", dest, instance.n_dests),
                            ("period", period, instance.n_periods)):
        if value is not None and not 0 <= value < n:
            raise IndexError(f"{label} index {value} out of range [0, {n})")
    return {a for a in instance.arcs()
            if (source is None or a.source == source)
            and (dest is None or a.dest == dest)
            and (period is None or a.period == period)}


def transportation(supply: Sequence[int], demand: Sequence[int], *,
                   upper: Optional[int] = None, row_rel="=", col_rel="=",
                   cost=None) -> ProblemInstance:
    """Plain single-period transportation instance."""
    objective = None
    if cost is not None:
        objective = Objective({ArcIndex(i, j, 0): c
                               for i, row in enumerate(cost) for j, c in enumerate(row)})
    return ProblemInstance(
        n_sources=len(supply), n_dests=len(demand), n_periods=1,
        row_supply=[[b] for b in supply], col_demand=[[a] for a in demand],
        row_rel=row_rel, col_rel=col_rel, default_bounds=VarBounds(0, upper),
        objective=objective)
