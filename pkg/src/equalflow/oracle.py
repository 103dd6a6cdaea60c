"""Brute-force ground truth for small instances, systems and rental scenarios.

Nothing here goes through the model's validation, the class contraction
or the search; constraints are re-read from the raw fields and evaluated
on every enumerated integer point, so agreement with the other modules is
a real cross-check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .model import ArcIndex, Certificate, ProblemInstance, Witness

CHUNK = 1 << 16


@dataclass(frozen=True)
class EnumerationBudget:
    max_points: int = 1 << 22

    def __post_init__(self):
        if self.max_points <= 0:
            raise ValueError("budget must be positive")


class BudgetExceeded(ValueError):
    def __init__(self, size: int, budget: int):
        super().__init__(f"state space has {size} points, budget is {budget}")
        self.size = size
        self.budget = budget


@dataclass(frozen=True)
class Enumeration:
    points: list
    truncated: bool
    space_size: int


# -- generic mixed-radix enumeration ------------------------------------------

def _chunks(lows, widths):
    """Yield (start, block) with block rows in lexicographic order."""
    n = len(widths)
    total = math.prod(widths)
    if n == 0:
        yield 0, np.zeros((1, 0), dtype=np.int64)
        return
    lows = np.asarray(lows, dtype=np.int64)
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK), dtype=np.int64)
        block = np.empty((idx.size, n), dtype=np.int64)
        for k in range(n - 1, -1, -1):
            idx, digit = np.divmod(idx, widths[k])
            block[:, k] = digit
        yield start, block + lows


def _row_ints(coeffs: dict, rhs):
    """Scale a rational row to integer coefficients and right-hand side."""
    vals = list(coeffs.values()) + [rhs]
    lcm = 1
    for v in vals:
        d = Fraction(v).denominator
        lcm = lcm * d // math.gcd(lcm, d)
    return {k: int(Fraction(v) * lcm) for k, v in coeffs.items()}, int(Fraction(rhs) * lcm)


def _relation_ok(lhs, rel, rhs):
    if rel == "=":
        return lhs == rhs
    if rel == "<=":
        return lhs <= rhs
    if rel == ">=":
        return lhs >= rhs
    raise ValueError(f"unknown relation {rel!r}")


# -- instances ----------------------------------------------------------------

class _InstanceSpace:
    """Free integer coordinates of an instance and their grid expansion."""

    def __init__(self, inst: ProblemInstance, with_aux: bool = False):
        self.inst = inst
        ni, nj, nt = inst.n_sources, inst.n_dests, inst.n_periods
        self.shape = (ni, nj, nt)
        arcs = [(i, j, t) for i in range(ni) for j in range(nj) for t in range(nt)]
        self.arcs = arcs
        group_of = {}
        for c in inst.classes:
            for m in c.members:
                group_of[tuple(m)] = c
        forbidden = {tuple(a) for a in inst.forbidden}

        def raw_bounds(a):
            b = inst.bound_overrides.get(ArcIndex(*a), inst.default_bounds)
            lo, hi = b.lower, b.upper
            if hi is None:
                caps = []
                if inst.row_rel in ("=", "<="):
                    caps.append(inst.row_supply[a[0]][a[2]])
                if inst.col_rel in ("=", "<="):
                    caps.append(inst.col_demand[a[1]][a[2]])
                hi = min(caps) if caps else None
            return lo, hi

        self.slot = []  # per arc: ("free", k) or ("const", v)
        keys = {}
        self.lows, self.highs = [], []
        self.const_empty = False
        for a in arcs:
            cls = group_of.get(a)
            if a in forbidden or (cls is not None and any(tuple(m) in forbidden for m in cls.members)):
                if cls is not None and cls.shared_value not in (None, 0):
                    self.const_empty = True
                self.slot.append(("const", 0))
                continue
            key = ("class", cls.id) if cls is not None else ("arc", a)
            if key not in keys:
                members = [tuple(m) for m in cls.members] if cls is not None else [a]
                los, his = zip(*(raw_bounds(m) for m in members))
                lo = max(los)
                his = [h for h in his if h is not None]
                if not his:
                    raise ValueError(f"arc {a} has no finite upper bound for enumeration")
                hi = min(his)
                if cls is not None and cls.shared_value is not None:
                    lo, hi = max(lo, cls.shared_value), min(hi, cls.shared_value)
                keys[key] = len(self.lows)
                self.lows.append(lo)
                self.highs.append(hi)
            self.slot.append(("free", keys[key]))
        self.aux = []
        if with_aux and inst.objective is not None:
            for name, b in inst.objective.aux_bounds.items():
                hi = b.upper
                if hi is None:
                    partners = [self.highs[self.slot[arcs.index(tuple(t.arc))][1]]
                                for t in inst.objective.quadratic
                                if t.aux == name and self.slot[arcs.index(tuple(t.arc))][0] == "free"]
                    hi = max(partners, default=b.lower)
                self.aux.append(name)
                self.lows.append(b.lower)
                self.highs.append(hi)
        self.widths = [max(0, h - l + 1) for l, h in zip(self.lows, self.highs)]

    @property
    def size(self):
        return 0 if self.const_empty else math.prod(self.widths)

    def expand(self, block):
        grid = np.zeros((block.shape[0], len(self.arcs)), dtype=np.int64)
        for col, (kind, v) in enumerate(self.slot):
            grid[:, col] = block[:, v] if kind == "free" else v
        return grid

    def feasible_mask(self, grid):
        inst = self.inst
        ni, nj, nt = self.shape
        n = grid.shape[0]
        ok = np.ones(n, dtype=bool)
        cube = grid.reshape(n, ni, nj, nt)
        for col, a in enumerate(self.arcs):
            b = inst.bound_overrides.get(ArcIndex(*a), inst.default_bounds)
            ok &= grid[:, col] >= b.lower
            if b.upper is not None:
                ok &= grid[:, col] <= b.upper
        for a in inst.forbidden:
            ok &= cube[:, a[0], a[1], a[2]] == 0
        for c in inst.classes:
            first = c.members[0]
            ref = cube[:, first[0], first[1], first[2]]
            for m in c.members[1:]:
                ok &= cube[:, m[0], m[1], m[2]] == ref
            if c.shared_value is not None:
                ok &= ref == c.shared_value
        rows = cube.sum(axis=2)
        cols = cube.sum(axis=1)
        supply = np.asarray(inst.row_supply, dtype=np.int64).reshape(ni, nt)
        demand = np.asarray(inst.col_demand, dtype=np.int64).reshape(nj, nt)
        ok &= _relation_ok(rows, inst.row_rel, supply[None]).reshape(n, -1).all(axis=1)
        ok &= _relation_ok(cols, inst.col_rel, demand[None]).reshape(n, -1).all(axis=1)
        return ok

    def objective_values(self, grid, block):
        obj = self.inst.objective
        total = np.zeros(grid.shape[0], dtype=object)
        if obj is None:
            return total
        index = {a: k for k, a in enumerate(self.arcs)}
        for a, c in obj.linear.items():
            total = total + c * grid[:, index[tuple(a)]].astype(object)
        base = len(self.lows) - len(self.aux)
        for term in obj.quadratic:
            t = block[:, base + self.aux.index(term.aux)]
            d = grid[:, index[tuple(term.arc)]] - t
            total = total + term.weight * (d * d).astype(object)
        return total

    def witness(self, grid_row):
        return Witness({ArcIndex(*a): int(v) for a, v in zip(self.arcs, grid_row)})


# -- systems --------------------------------------------------------------------

class _SystemSpace:
    def __init__(self, system, bounds):
        self.names = list(system.variables)
        self.lows, self.highs = [], []
        for v in self.names:
            lo, hi = bounds[v]
            if lo is None or hi is None:
                raise ValueError(f"variable {v} is unbounded")
            self.lows.append(int(lo))
            self.highs.append(int(hi))
        self.widths = [max(0, h - l + 1) for l, h in zip(self.lows, self.highs)]
        index = {v: k for k, v in enumerate(self.names)}
        self.rows = []
        for con in system.inputs:
            coeffs, rhs = _row_ints(dict(con.coeffs), con.rhs)
            self.rows.append(([(index[v], c) for v, c in coeffs.items()], con.relation, rhs))

    @property
    def size(self):
        return math.prod(self.widths)

    def feasible_mask(self, block):
        ok = np.ones(block.shape[0], dtype=bool)
        for coeffs, rel, rhs in self.rows:
            lhs = np.zeros(block.shape[0], dtype=np.int64)
            for k, c in coeffs:
                lhs = lhs + c * block[:, k]
            ok &= _relation_ok(lhs, rel, rhs)
        return ok

    def witness(self, row):
        return Witness({v: int(x) for v, x in zip(self.names, row)})


def _space(target, bounds=None, with_aux=False):
    if isinstance(target, ProblemInstance):
        return _InstanceSpace(target, with_aux)
    if bounds is None:
        raise ValueError("systems need explicit variable bounds")
    return _SystemSpace(target, bounds)


def space_size(target, bounds=None) -> int:
    """Number of points the oracle would enumerate for ``target``."""
    return _space(target, bounds).size


def _scan(space, budget, limit=None, objective=None):
    """Shared enumeration loop; yields witnesses in lexicographic order."""
    size = space.size
    if size > budget.max_points:
        raise BudgetExceeded(size, budget.max_points)
    if size == 0:
        return
    for _, block in _chunks(space.lows, space.widths):
        if isinstance(space, _InstanceSpace):
            grid = space.expand(block)
            mask = space.feasible_mask(grid)
            for r in np.nonzero(mask)[0]:
                yield space.witness(grid[r]), grid[r], block[r]
        else:
            mask = space.feasible_mask(block)
            for r in np.nonzero(mask)[0]:
                yield space.witness(block[r]), None, block[r]


def enumerate_feasible(target, budget: EnumerationBudget = EnumerationBudget(), *,
                       bounds=None, limit: Optional[int] = None) -> Enumeration:
    """Every feasible integer point, in row-major lexicographic order.

    ``target`` is a ProblemInstance or a ConstraintSystem (with ``bounds``).
    ``limit`` caps the number of returned points and sets ``truncated``.
    """
    space = _space(target, bounds)
    points = []
    for w, _, _ in _scan(space, budget):
        if limit is not None and len(points) >= limit:
            return Enumeration(points, True, space.size)
        points.append(w)
    return Enumeration(points, False, space.size)


def oracle_verdict(target, budget: EnumerationBudget = EnumerationBudget(), *,
                   bounds=None) -> Certificate:
    """Feasible with the lexicographically smallest point, or Infeasible by exhaustion."""
    try:
        space = _space(target, bounds)
        for w, _, _ in _scan(space, budget):
            return Certificate.feasible(w)
    except BudgetExceeded as exc:
        return Certificate.unknown(str(exc))
    return Certificate.infeasible(reason="exhaustion: no integer point satisfies the constraints")


def oracle_minimum(target, budget: EnumerationBudget = EnumerationBudget(), *,
                   bounds=None, objective=None):
    """Exhaustive minimum of the objective; returns ``(value, witness)`` or ``(None, None)``.

    For instances the instance's own objective is used (shared-value
    variables of a quadratic penalty are enumerated as well); for systems
    pass a linear/quadratic ``objective`` over variable names.
    """
    space = _space(target, bounds, with_aux=True)
    size = space.size
    if size > budget.max_points:
        raise BudgetExceeded(size, budget.max_points)
    best, best_w = None, None
    if size == 0:
        return None, None
    for _, block in _chunks(space.lows, space.widths):
        if isinstance(space, _InstanceSpace):
            grid = space.expand(block)
            mask = space.feasible_mask(grid)
            if not mask.any():
                continue
            values = space.objective_values(grid[mask], block[mask])
            k = min(range(len(values)), key=lambda r: values[r])
            if best is None or values[k] < best:
                best, best_w = values[k], space.witness(grid[mask][k])
        else:
            mask = space.feasible_mask(block)
            for row in block[mask]:
                point = dict(zip(space.names, (int(x) for x in row)))
                val = objective.evaluate(point) if objective is not None else 0
                if best is None or val < best:
                    best, best_w = val, space.witness(row)
    return best, best_w


# -- car rental roster ------------------------------------------------------------

def rental_matching_exists(scenario) -> bool:
    """Can physical cars be handed to requests so that every request is served?

    Each request needs ``quantity`` distinct cars of allowed models, every
    one available on each day of the request window, and no car may serve
    two requests on the same day.  Requires a car-level roster.
    """
    roster = scenario.fleet.roster
    if roster is None:
        raise ValueError("the matching oracle needs a car-level roster")
    requests = list(scenario.requests)
    days_of = [set(range(r.start, r.start + r.duration)) for r in requests]
    busy = [set() for _ in roster]

    def place(k):
        if k == len(requests):
            return True
        req, window = requests[k], days_of[k]
        eligible = [c for c, car in enumerate(roster)
                    if car.model in req.models and window <= set(car.days)
                    and not (busy[c] & window)]
        for chosen in itertools.combinations(eligible, req.quantity):
            for c in chosen:
                busy[c] |= window
            if place(k + 1):
                return True
            for c in chosen:
                busy[c] -= window
        return False

    return place(0)
