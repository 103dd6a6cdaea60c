"""Reformulations of same-route equal-flow instances.

Covers block-diagonal stacking of per-period problems, the linear penalty
on forbidden arcs, the quadratic penalty replacing class equalities,
contraction of classes into single variables, the unit-slot conversions
between transportation and assignment forms, variable splitting for
availability that varies over time, and the north-west-corner check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .fbce import ConstraintSystem, LinearConstraint
from .model import (ArcIndex, Certificate, EqualFlowClass, Objective, ProblemInstance,
                    QuadraticTerm, VarBounds, Witness, validate_instance, validate_witness)


def arc_var(arc: ArcIndex) -> str:
    return f"x[{arc.source},{arc.dest},{arc.period}]"


def class_var(class_id: str) -> str:
    return f"c[{class_id}]"


def aux_var(name: str) -> str:
    return f"t[{name}]"


# -- stacking ----------------------------------------------------------------

def stack_by_index(instances: Sequence[ProblemInstance],
                   classes: Sequence[EqualFlowClass] = ()) -> ProblemInstance:
    """Stack single-period instances into one block-diagonal instance.

    Period ``p`` occupies source block ``p`` and destination block ``p``;
    every off-block arc is forbidden.  Cross-period ``classes`` are given
    in ``(source, dest, period)`` coordinates of the unstacked problem.
    """
    if not instances:
        raise ValueError("nothing to stack")
    first = instances[0]
    ni, nj = first.n_sources, first.n_dests
    for p, inst in enumerate(instances):
        if inst.n_periods != 1:
            raise ValueError(f"instance {p} has {inst.n_periods} periods, expected 1")
        if (inst.n_sources, inst.n_dests) != (ni, nj):
            raise ValueError(f"instance {p} has dims {inst.dims[:2]}, expected {(ni, nj)}")
        if (inst.row_rel, inst.col_rel) != (first.row_rel, first.col_rel):
            raise ValueError(f"instance {p} uses different row/column relations")
        if inst.objective is not None and inst.objective.quadratic:
            raise ValueError("quadratic objectives cannot be stacked")
    n_blocks = len(instances)
    if n_blocks == 1 and not classes:
        return first

    def lift(arc, p=None):
        arc = ArcIndex(*arc)
        p = arc.period if p is None else p
        return ArcIndex(p * ni + arc.source, p * nj + arc.dest, 0)

    overrides, forbidden, linear, stacked_classes = {}, set(), {}, []
    for p, inst in enumerate(instances):
        for arc in inst.arcs():
            b = inst.bounds(arc)
            if b != first.default_bounds:
                overrides[lift(arc, p)] = b
        forbidden |= {lift(a, p) for a in inst.forbidden}
        if inst.objective is not None:
            for a, c in inst.objective.linear.items():
                linear[lift(a, p)] = c
        prefix = f"p{p}:" if n_blocks > 1 else ""
        for c in inst.classes:
            stacked_classes.append(EqualFlowClass(
                prefix + c.id, tuple(lift(m, p) for m in c.members), c.shared_value))
    for c in classes:
        for m in c.members:
            if not (0 <= m[0] < ni and 0 <= m[1] < nj and 0 <= m[2] < n_blocks):
                raise ValueError(f"class {c.id}: member {tuple(m)} out of range")
        stacked_classes.append(
            EqualFlowClass(c.id, tuple(lift(m) for m in c.members), c.shared_value))

    for a in range(n_blocks * ni):
        for b in range(n_blocks * nj):
            if a // ni != b // nj:
                forbidden.add(ArcIndex(a, b, 0))

    return ProblemInstance(
        n_sources=n_blocks * ni, n_dests=n_blocks * nj, n_periods=1,
        row_supply=[inst.row_supply[i] for inst in instances for i in range(ni)],
        col_demand=[inst.col_demand[j] for inst in instances for j in range(nj)],
        row_rel=first.row_rel, col_rel=first.col_rel,
        default_bounds=first.default_bounds, bound_overrides=overrides,
        classes=stacked_classes, forbidden=forbidden,
        objective=Objective(linear) if linear else None,
        kind=first.kind if all(i.kind == first.kind for i in instances) else "generalized",
    )


# -- penalties ---------------------------------------------------------------

@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty weights.  ``lam=None`` means the instance-derived default."""

    lam: Optional[int] = None
    forbidden_weights: Mapping[ArcIndex, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.lam is not None and self.lam < 1:
            raise ValueError("penalty weight must be a positive integer")

    def weight(self, instance: ProblemInstance) -> int:
        return self.lam if self.lam is not None else default_lambda(instance)


def default_lambda(instance: ProblemInstance) -> int:
    """``1 + sum|c| * U`` with ``U`` the largest finite upper bound or total.

    Any two points inside the bounds differ in linear cost by at most
    ``sum|c| * U``, so a single unit of violation always costs more than
    the best feasible point can save.
    """
    uppers = [instance.default_bounds.upper] + [b.upper for b in instance.bound_overrides.values()]
    if None in uppers:
        # uncapped arcs are still limited by the row/column totals they feed
        uppers += [v for table in (instance.row_supply, instance.col_demand)
                   for vec in table for v in vec]
    big = max((u for u in uppers if u is not None), default=0)
    costs = instance.objective.linear.values() if instance.objective else ()
    return 1 + sum(abs(c) for c in costs) * big


def penalize_forbidden(instance: ProblemInstance, cfg: PenaltyConfig = PenaltyConfig()
                       ) -> ProblemInstance:
    """Move forbidden-arc constraints into the objective as ``Lambda . x``."""
    if not instance.forbidden:
        return instance
    lam = cfg.weight(instance)
    old = instance.objective or Objective()
    linear = dict(old.linear)
    for arc in sorted(instance.forbidden):
        linear[arc] = linear.get(arc, 0) + cfg.forbidden_weights.get(arc, lam)
    return instance.replace(
        forbidden=frozenset(),
        objective=Objective(linear, old.quadratic, old.aux_bounds))


def penalize_equality(instance: ProblemInstance, cfg: PenaltyConfig = PenaltyConfig()
                      ) -> ProblemInstance:
    """Replace class equalities by ``lam * sum (x_member - t)**2``.

    Each class keeps a free integer shared value ``t`` bounded by the
    intersection of its members' bounds (or fixed, if the class was).
    """
    if not instance.classes:
        return instance
    lam = cfg.weight(instance)
    old = instance.objective or Objective()
    terms = list(old.quadratic)
    aux = dict(old.aux_bounds)
    for cls in instance.classes:
        if cls.shared_value is not None:
            bounds = VarBounds(cls.shared_value, cls.shared_value)
        else:
            bs = [instance.bounds(m) for m in cls.members]
            uppers = [b.upper for b in bs if b.upper is not None]
            bounds = VarBounds(max(b.lower for b in bs), min(uppers) if uppers else None)
        aux[cls.id] = bounds
        terms.extend(QuadraticTerm(lam, m, cls.id) for m in cls.members)
    return instance.replace(
        classes=(), kind="generalized",
        objective=Objective(dict(old.linear), tuple(terms), aux))


def penalize(instance: ProblemInstance, cfg: PenaltyConfig = PenaltyConfig()) -> ProblemInstance:
    """Both penalties, with the weight fixed from the unpenalized costs."""
    cfg = PenaltyConfig(cfg.weight(instance), cfg.forbidden_weights)
    return penalize_equality(penalize_forbidden(instance, cfg), cfg)


def penalty_value(original: ProblemInstance, penalized: ProblemInstance,
                  values: Mapping[ArcIndex, int], aux: Mapping[str, int] = None) -> int:
    """Objective of ``penalized`` minus the original linear cost at a point."""
    base = original.objective.evaluate(values) if original.objective else 0
    pen = penalized.objective.evaluate(values, aux) if penalized.objective else 0
    return pen - base


# -- class contraction -------------------------------------------------------

@dataclass(frozen=True)
class SearchObjective:
    """``sum linear[v] * v + sum w * (x - y)**2`` over system variables.

    ``None`` in a quadratic term stands for the constant 0.
    """

    linear: Mapping[str, Fraction] = field(default_factory=dict)
    quadratic: tuple[tuple[int, Optional[str], Optional[str]], ...] = ()
    constant: Fraction = Fraction(0)

    def evaluate(self, values: Mapping[str, int]):
        total = self.constant + sum(c * values[v] for v, c in self.linear.items())
        for w, x, y in self.quadratic:
            d = (values[x] if x else 0) - (values[y] if y else 0)
            total += w * d * d
        return total


@dataclass(frozen=True)
class Contraction:
    """Result of contracting an instance's classes into single variables."""

    instance: ProblemInstance
    system: ConstraintSystem
    bounds: Mapping[str, tuple]
    members: Mapping[str, tuple[ArcIndex, ...]]
    aux: tuple[str, ...] = ()
    objective: Optional[SearchObjective] = None
    infeasible_by_construction: bool = False

    @property
    def var_map(self) -> Mapping[str, tuple[ArcIndex, ...]]:
        return self.members

    def expand(self, values: Mapping[str, int]) -> Witness:
        """Grid witness from a point of the contracted system."""
        out = {arc: 0 for arc in self.instance.arcs()}
        for name, arcs in self.members.items():
            for arc in arcs:
                out[arc] = values[name]
        return Witness(out)

    def aux_values(self, values: Mapping[str, int]) -> dict[str, int]:
        return {name: values[aux_var(name)] for name in self.aux}

    def restrict(self, w: Witness) -> Optional[dict[str, int]]:
        """Contracted point of a grid witness, or None if classes disagree."""
        point = {}
        for name, arcs in self.members.items():
            vals = {w.values[a] for a in arcs}
            if len(vals) != 1:
                return None
            point[name] = vals.pop()
        return point

    def finite_bounds(self) -> dict[str, tuple[int, int]]:
        """Bounds with every missing upper bound derived from capacity-type rows."""
        lo = {v: b[0] for v, b in self.bounds.items()}
        hi = {v: b[1] for v, b in self.bounds.items()}
        for row in self.system.rows:
            if not row.coeffs or any(c < 0 for _, c in row.coeffs):
                continue
            if any(lo.get(v) is None or lo[v] < 0 for v, _ in row.coeffs):
                continue
            floor_sum = sum(c * lo[v] for v, c in row.coeffs)
            for v, c in row.coeffs:
                cap = math.floor((row.rhs - floor_sum + c * lo[v]) / c)
                if hi.get(v) is None or cap < hi[v]:
                    hi[v] = cap
        for name in self.aux:
            v = aux_var(name)
            if hi.get(v) is None:
                partners = [hi.get(x) for _, x, y in self.objective.quadratic
                            if y == v and x is not None]
                partners = [p for p in partners if p is not None]
                hi[v] = max(partners, default=lo[v])
        missing = [v for v in self.system.variables if hi.get(v) is None or lo.get(v) is None]
        if missing:
            raise ValueError(f"variable {missing[0]} has no finite bound")
        return {v: (lo[v], hi[v]) for v in self.system.variables}


def contract_classes(instance: ProblemInstance) -> Contraction:
    """Substitute one variable per class and 0 for forbidden arcs.

    Variables are ordered by the row-major position of their first arc,
    followed by any shared-value variables of a quadratic objective.
    Coefficients of class members landing in the same row are summed.
    """
    problems = validate_instance(instance)
    if problems:
        raise ValueError(f"invalid instance: {problems[0]}")
    owner = instance.class_index()
    name_of: dict[ArcIndex, Optional[str]] = {}
    members: dict[str, list[ArcIndex]] = {}
    bounds: dict[str, tuple] = {}
    constraints: list[LinearConstraint] = []
    broken = False
    for arc in instance.arcs():
        cls = owner.get(arc)
        if cls is None:
            if arc in instance.forbidden:
                name_of[arc] = None
                continue
            name = arc_var(arc)
            b = instance.bounds(arc)
            bounds[name] = (b.lower, b.upper)
        else:
            if any(m in instance.forbidden for m in cls.members):
                name_of[arc] = None
                if cls.shared_value not in (None, 0) and arc == cls.members[0]:
                    broken = True
                    constraints.append(LinearConstraint({}, "=", cls.shared_value))
                continue
            name = class_var(cls.id)
            if name not in bounds:
                bs = [instance.bounds(m) for m in cls.members]
                uppers = [b.upper for b in bs if b.upper is not None]
                lo = max(b.lower for b in bs)
                hi = min(uppers) if uppers else None
                if cls.shared_value is not None:
                    lo = max(lo, cls.shared_value)
                    hi = cls.shared_value if hi is None else min(hi, cls.shared_value)
                bounds[name] = (lo, hi)
        name_of[arc] = name
        members.setdefault(name, []).append(arc)

    ni, nj, nt = instance.dims
    for i in range(ni):
        for t in range(nt):
            coeffs: dict[str, int] = {}
            for j in range(nj):
                n = name_of[ArcIndex(i, j, t)]
                if n is not None:
                    coeffs[n] = coeffs.get(n, 0) + 1
            constraints.append(LinearConstraint(coeffs, instance.row_rel, instance.row_supply[i][t]))
    for j in range(nj):
        for t in range(nt):
            coeffs = {}
            for i in range(ni):
                n = name_of[ArcIndex(i, j, t)]
                if n is not None:
                    coeffs[n] = coeffs.get(n, 0) + 1
            constraints.append(LinearConstraint(coeffs, instance.col_rel, instance.col_demand[j][t]))

    aux_names: tuple[str, ...] = ()
    objective = None
    if instance.objective is not None:
        obj = instance.objective
        aux_names = tuple(obj.aux_bounds)
        for name in aux_names:
            b = obj.aux_bounds[name]
            bounds[aux_var(name)] = (b.lower, b.upper)
        linear: dict[str, Fraction] = {}
        for arc, c in obj.linear.items():
            n = name_of[ArcIndex(*arc)]
            if n is not None and c:
                linear[n] = linear.get(n, 0) + Fraction(c)
        quad = tuple((term.weight, name_of[term.arc], aux_var(term.aux))
                     for term in obj.quadratic)
        objective = SearchObjective(linear, quad)

    variables = list(members) + [aux_var(n) for n in aux_names]
    for v in variables:
        lo, hi = bounds[v]
        constraints.append(LinearConstraint({v: 1}, ">=", lo))
        if hi is not None:
            constraints.append(LinearConstraint({v: 1}, "<=", hi))
    system = ConstraintSystem.from_constraints(variables, constraints)
    return Contraction(instance, system, bounds,
                       {k: tuple(v) for k, v in members.items()},
                       aux_names, objective, broken)


# -- transportation <-> assignment -------------------------------------------

def is_equibounded(instance: ProblemInstance) -> bool:
    """Every class's members share one set of bounds."""
    return all(len({instance.bounds(m) for m in cls.members}) == 1 for cls in instance.classes)


def _route_of(cls: EqualFlowClass):
    routes = {(m.source, m.dest) for m in cls.members}
    return routes.pop() if len(routes) == 1 else None


def assignment_from_transportation(instance: ProblemInstance, w: Witness
                                   ) -> tuple[ProblemInstance, Witness]:
    """Expand every destination into unit slots and place the flow on them.

    Destination ``j`` becomes ``max_t demand[j][t]`` slot columns (at least one); slot
    ``s`` of ``j`` must carry exactly one unit in period ``t`` when
    ``s < demand[j][t]`` and none otherwise (at most one under ``<=``).
    Each route class becomes one class per slot.  Flows are placed on the
    lowest free slots: fixed classes first, then free classes, then the
    remaining arcs period by period, each in source order.
    """
    if instance.col_rel not in ("=", "<="):
        raise ValueError("unit slots need '=' or '<=' destination relations")
    if not validate_witness(instance, w):
        raise ValueError("witness is not feasible for the transportation instance")
    if not is_equibounded(instance):
        raise ValueError("instance is not equibounded; split its variables first "
                         "(reform.split_variables)")
    ni, nj, nt = instance.dims
    # at least one slot per destination so that aggregation can recover it
    slots = [max(max(instance.col_demand[j], default=0), 1) for j in range(nj)]
    for arc in instance.arcs():
        b = instance.bounds(arc)
        if b.lower != 0:
            raise ValueError(f"arc {tuple(arc)} has a nonzero lower bound")
        if b.upper is not None and b.upper < slots[arc.dest]:
            raise ValueError(f"upper bound of arc {tuple(arc)} binds below its "
                             f"destination's demand and cannot be expressed in unit slots")
    for cls in instance.classes:
        if _route_of(cls) is None or len(cls.members) != nt:
            raise ValueError(f"class {cls.id} must tie one (source, dest) route over every period")

    first_col = [sum(slots[:j]) for j in range(nj)]
    origin = tuple(j for j in range(nj) for _ in range(slots[j]))
    n_cols = len(origin)
    col_demand = [[1 if s < instance.col_demand[j][t] else 0 for t in range(nt)]
                  for j in range(nj) for s in range(slots[j])]

    # greedy slot placement
    taken = [[[False] * slots[j] for _ in range(nt)] for j in range(nj)]
    chosen: dict[tuple[int, int, int], list[int]] = {}
    owner = instance.class_index()
    route_classes = sorted(instance.classes,
                           key=lambda c: (c.shared_value is None, c.members[0].source))
    for cls in route_classes:
        i, j = _route_of(cls)
        need = w.values[cls.members[0]]
        picks = [s for s in range(slots[j])
                 if all(not taken[j][t][s] and s < instance.col_demand[j][t] for t in range(nt))][:need]
        if len(picks) < need:
            raise ValueError(f"cannot place class {cls.id} on common slots")
        for t in range(nt):
            for s in picks:
                taken[j][t][s] = True
            chosen[(i, j, t)] = picks
    for t in range(nt):
        for j in range(nj):
            for i in range(ni):
                arc = ArcIndex(i, j, t)
                if arc in owner:
                    continue
                need = w.values[arc]
                picks = [s for s in range(slots[j])
                         if not taken[j][t][s] and s < instance.col_demand[j][t]][:need]
                if len(picks) < need:
                    raise ValueError(f"cannot place flow of arc {tuple(arc)}")
                for s in picks:
                    taken[j][t][s] = True
                chosen[(i, j, t)] = picks

    values = {ArcIndex(i, c, t): 0 for i in range(ni) for c in range(n_cols) for t in range(nt)}
    for (i, j, t), picks in chosen.items():
        for s in picks:
            values[ArcIndex(i, first_col[j] + s, t)] = 1

    classes = []
    for cls in instance.classes:
        i, j = _route_of(cls)
        fixed = None
        if cls.shared_value is not None:
            fixed = set(chosen[(i, j, 0)])
        for s in range(slots[j]):
            classes.append(EqualFlowClass(
                f"{cls.id}#{s}",
                tuple(ArcIndex(i, first_col[j] + s, m.period) for m in cls.members),
                None if fixed is None else int(s in fixed)))
    forbidden = {ArcIndex(a.source, first_col[a.dest] + s, a.period)
                 for a in instance.forbidden for s in range(slots[a.dest])}
    objective = None
    if instance.objective is not None and instance.objective.linear:
        objective = Objective({ArcIndex(a.source, first_col[a.dest] + s, a.period): c
                               for a, c in instance.objective.linear.items()
                               for s in range(slots[a.dest])})
    unit = instance.col_rel == "=" and all(v == 1 for col in col_demand for v in col)
    assignment = ProblemInstance(
        n_sources=ni, n_dests=n_cols, n_periods=nt,
        row_supply=instance.row_supply, col_demand=col_demand,
        row_rel=instance.row_rel, col_rel=instance.col_rel,
        default_bounds=VarBounds(0, 1), classes=classes, forbidden=forbidden,
        objective=objective, kind="assignment" if unit else "generalized",
        column_origin=origin)
    aw = Witness(values)
    assert validate_witness(assignment, aw)
    return assignment, aw


def transportation_from_assignment(instance: ProblemInstance, w: Witness
                                   ) -> tuple[ProblemInstance, Witness]:
    """Aggregate unit slot columns back into integer destination flows."""
    if not validate_witness(instance, w):
        raise ValueError("witness is not feasible for the assignment instance")
    ni, ncols, nt = instance.dims
    origin = instance.column_origin or tuple(range(ncols))
    nj = max(origin, default=-1) + 1
    col_demand = [[0] * nt for _ in range(nj)]
    for c, j in enumerate(origin):
        for t in range(nt):
            col_demand[j][t] += instance.col_demand[c][t]

    values = {ArcIndex(i, j, t): 0 for i in range(ni) for j in range(nj) for t in range(nt)}
    for arc, v in w.values.items():
        values[ArcIndex(arc.source, origin[arc.dest], arc.period)] += v

    groups: dict[tuple, list[EqualFlowClass]] = {}
    for cls in instance.classes:
        key = (cls.id.rsplit("#", 1)[0],
               tuple(sorted((m.source, origin[m.dest], m.period) for m in cls.members)))
        groups.setdefault(key, []).append(cls)
    classes = []
    for (cid, members), parts in groups.items():
        shared = None
        if all(p.shared_value is not None for p in parts):
            shared = sum(p.shared_value for p in parts)
        classes.append(EqualFlowClass(cid, tuple(ArcIndex(*m) for m in members), shared))

    slots_per = {}
    for c, j in enumerate(origin):
        slots_per.setdefault(j, []).append(c)
    forbidden = {ArcIndex(i, j, t) for i in range(ni) for j in range(nj) for t in range(nt)
                 if all(ArcIndex(i, c, t) in instance.forbidden for c in slots_per.get(j, ()))
                 and slots_per.get(j)}
    objective = None
    if instance.objective is not None and instance.objective.linear:
        linear = {}
        for arc, cost in instance.objective.linear.items():
            linear.setdefault(ArcIndex(arc.source, origin[arc.dest], arc.period), cost)
        objective = Objective(linear)
    transport = ProblemInstance(
        n_sources=ni, n_dests=nj, n_periods=nt,
        row_supply=instance.row_supply, col_demand=col_demand,
        row_rel=instance.row_rel, col_rel=instance.col_rel,
        classes=classes, forbidden=forbidden, objective=objective, kind="transportation")
    tw = Witness(values)
    assert validate_witness(transport, tw)
    return transport, tw


# -- variable splitting --------------------------------------------------------

@dataclass(frozen=True)
class AvailabilityPart:
    """One supply pool of a split: per (dest, period) capacity and optional per-arc caps."""

    name: str
    capacity: tuple[tuple[int, ...], ...]
    arc_caps: Mapping[ArcIndex, int] = field(default_factory=dict)


@dataclass(frozen=True)
class SplitInstance:
    base: ProblemInstance
    mapping: Mapping[ArcIndex, tuple[ArcIndex, ...]]
    parts: tuple[AvailabilityPart, ...]
    original: ProblemInstance

    def recombine(self, w: Witness) -> Witness:
        """Original-grid flows ``x = x+ + x- (+ ...)`` from a split witness."""
        return Witness({arc: sum(w.values[a] for a in halves)
                        for arc, halves in self.mapping.items()})


def split_variables(instance: ProblemInstance, parts: Sequence[AvailabilityPart]) -> SplitInstance:
    """Split every arc into one copy per availability part.

    The first part is conventionally the stable pool (``x+``) and the
    second the transient pool (``x-``).  Destination columns are
    replicated per part with the part's capacity as their ``<=`` limit,
    each class is duplicated onto every part, and per-arc caps become
    upper bounds of the corresponding copy.
    """
    if instance.col_rel != "<=":
        raise ValueError("splitting applies to capacity ('<=') destination columns")
    if len(parts) < 1:
        raise ValueError("need at least one part")
    ni, nj, nt = instance.dims
    for part in parts:
        if len(part.capacity) != nj or any(len(c) != nt for c in part.capacity):
            raise ValueError(f"part {part.name}: capacity must be {nj} x {nt}")
        for j, col in enumerate(part.capacity):
            for t, v in enumerate(col):
                if v < 0:
                    raise ValueError(f"part {part.name}: negative capacity {v} at dest {j}, period {t}")
        for arc, cap in part.arc_caps.items():
            if cap < 0:
                raise ValueError(f"part {part.name}: negative cap {cap} on arc {tuple(arc)}")
    for cls in instance.classes:
        if cls.shared_value is not None:
            raise ValueError(f"class {cls.id} has a fixed value; cannot split it")
    for arc in instance.arcs():
        b = instance.bounds(arc)
        if b.lower != 0:
            raise ValueError(f"arc {tuple(arc)} has a nonzero lower bound")
        total = sum(p.capacity[arc.dest][arc.period] for p in parts)
        if b.upper is not None and arc not in instance.forbidden and b.upper < total:
            raise ValueError(f"upper bound of arc {tuple(arc)} would bind on the recombined flow")

    def copy(arc, k):
        return ArcIndex(arc.source, k * nj + arc.dest, arc.period)

    overrides = {}
    for k, part in enumerate(parts):
        for arc, cap in part.arc_caps.items():
            overrides[copy(ArcIndex(*arc), k)] = VarBounds(0, cap)
    classes = [EqualFlowClass(f"{cls.id}@{part.name}", tuple(copy(m, k) for m in cls.members))
               for k, part in enumerate(parts) for cls in instance.classes]
    forbidden = {copy(a, k) for k in range(len(parts)) for a in instance.forbidden}
    objective = None
    if instance.objective is not None and instance.objective.linear:
        objective = Objective({copy(a, k): c for k in range(len(parts))
                               for a, c in instance.objective.linear.items()})
    base = ProblemInstance(
        n_sources=ni, n_dests=nj * len(parts), n_periods=nt,
        row_supply=instance.row_supply,
        col_demand=[col for part in parts for col in part.capacity],
        row_rel=instance.row_rel, col_rel="<=",
        default_bounds=VarBounds(0, None),
        bound_overrides=overrides, classes=classes, forbidden=forbidden,
        objective=objective, kind="generalized")
    mapping = {arc: tuple(copy(arc, k) for k in range(len(parts))) for arc in instance.arcs()}
    return SplitInstance(base, mapping, tuple(parts), instance)


# -- north-west corner ---------------------------------------------------------

def nw_corner(instance: ProblemInstance) -> Certificate:
    """North-west-corner witness for a plain balanced transportation problem."""
    plain = (instance.n_periods == 1 and not instance.classes and not instance.forbidden
             and instance.row_rel == "=" and instance.col_rel == "="
             and instance.default_bounds == VarBounds(0, None)
             and all(b == VarBounds(0, None) for b in instance.bound_overrides.values()))
    if not plain:
        return Certificate.unknown("not plain balanced")
    supply = [r[0] for r in instance.row_supply]
    demand = [c[0] for c in instance.col_demand]
    if sum(supply) != sum(demand):
        return Certificate.infeasible(
            reason=f"unbalanced: supply {sum(supply)} != demand {sum(demand)}")
    values = {arc: 0 for arc in instance.arcs()}
    i = j = 0
    while i < len(supply) and j < len(demand):
        q = min(supply[i], demand[j])
        values[ArcIndex(i, j, 0)] = q
        supply[i] -= q
        demand[j] -= q
        if supply[i] == 0:
            i += 1
        else:
            j += 1
    return Certificate.feasible(Witness(values))
