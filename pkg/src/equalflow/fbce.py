"""Fourier-Motzkin elimination for bounded integer systems with dominance pruning.

Every stored row is a normalized inequality ``sum(a_v * v) <= rhs`` with a
primitive integer coefficient vector and a rational right-hand side.
Equalities enter as two opposite rows.  Each row records how it was
derived (its parents and their multipliers), so any derived row, and in
particular a contradiction ``0 <= negative``, can be replayed exactly from
the input constraints.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .model import Certificate, Refutation, Witness

Number = Union[int, Fraction]


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: Mapping[str, Number]
    relation: str  # "<=", "=", ">="
    rhs: Number

    def __post_init__(self):
        if self.relation not in ("<=", "=", ">="):
            raise ValueError(f"unknown relation {self.relation!r}")
        object.__setattr__(self, "coeffs",
                           {v: Fraction(c) for v, c in self.coeffs.items() if c != 0})
        object.__setattr__(self, "rhs", Fraction(self.rhs))

    def holds(self, values: Mapping[str, Number]) -> bool:
        lhs = sum(c * values[v] for v, c in self.coeffs.items())
        if self.relation == "<=":
            return lhs <= self.rhs
        if self.relation == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs

    def __str__(self):
        terms = " + ".join(f"{c}*{v}" for v, c in sorted(self.coeffs.items())) or "0"
        return f"{terms} {self.relation} {self.rhs}"


@dataclass(frozen=True)
class Row:
    id: int
    coeffs: tuple[tuple[str, int], ...]
    rhs: Fraction

    @property
    def key(self):
        return (self.coeffs, self.rhs)

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def coeff(self, var: str) -> int:
        for v, c in self.coeffs:
            if v == var:
                return c
        return 0

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    @property
    def is_contradiction(self) -> bool:
        return not self.coeffs and self.rhs < 0

    def __str__(self):
        terms = " + ".join(f"{c}*{v}" for v, c in self.coeffs) or "0"
        return f"{terms} <= {self.rhs}"


@dataclass(frozen=True)
class Derivation:
    parents: tuple[tuple[int, Fraction], ...] = ()
    origin: Optional[tuple[int, int, Fraction]] = None  # (input index, side, scale)


class _Ledger:
    """Append-only derivation store shared by all systems derived from one input."""

    def __init__(self):
        self.derivations: dict[int, Derivation] = {}

    def add(self, derivation: Derivation) -> int:
        rid = len(self.derivations)
        self.derivations[rid] = derivation
        return rid


def _normalize(coeffs: Mapping[str, Number], rhs: Number):
    """Scale ``coeffs <= rhs`` to a primitive integer vector; returns (coeffs, rhs, scale)."""
    items = sorted((v, Fraction(c)) for v, c in coeffs.items() if c != 0)
    rhs = Fraction(rhs)
    if not items:
        return (), rhs, Fraction(1)
    lcm = 1
    for _, c in items:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = [(v, int(c * lcm)) for v, c in items]
    g = 0
    for _, c in ints:
        g = math.gcd(g, c)
    scale = Fraction(lcm, g)
    return tuple((v, c // g) for v, c in ints), rhs * scale, scale


@dataclass(frozen=True)
class ConstraintSystem:
    variables: tuple[str, ...]
    rows: tuple[Row, ...]
    inputs: tuple[LinearConstraint, ...] = ()
    ledger: _Ledger = field(default_factory=_Ledger, repr=False, compare=False)

    @classmethod
    def from_constraints(cls, variables: Iterable[str],
                         constraints: Iterable[LinearConstraint]) -> "ConstraintSystem":
        variables = tuple(variables)
        known = set(variables)
        constraints = tuple(constraints)
        ledger = _Ledger()
        rows = []
        for k, con in enumerate(constraints):
            unknown = set(con.coeffs) - known
            if unknown:
                raise ValueError(f"constraint {k} uses undeclared variables {sorted(unknown)}")
            sides = {"<=": (1,), ">=": (-1,), "=": (1, -1)}[con.relation]
            for side in sides:
                coeffs, rhs, scale = _normalize(
                    {v: side * c for v, c in con.coeffs.items()}, side * con.rhs)
                rid = ledger.add(Derivation(origin=(k, side, scale)))
                rows.append(Row(rid, coeffs, rhs))
        return cls(variables, _dedupe_exact(rows), constraints, ledger)

    def with_rows(self, rows: Iterable[Row], variables=None) -> "ConstraintSystem":
        return ConstraintSystem(self.variables if variables is None else tuple(variables),
                                tuple(sorted(rows, key=lambda r: (r.key, r.id))),
                                self.inputs, self.ledger)

    @property
    def provenance(self) -> Mapping[int, Derivation]:
        return self.ledger.derivations

    def __len__(self):
        return len(self.rows)

    def occurrences(self, var: str) -> tuple[list[Row], list[Row]]:
        pos, neg = [], []
        for r in self.rows:
            c = r.coeff(var)
            if c > 0:
                pos.append(r)
            elif c < 0:
                neg.append(r)
        return pos, neg

    def contradiction(self) -> Optional[Row]:
        for r in self.rows:
            if r.is_contradiction:
                return r
        return None

    def satisfied_by(self, values: Mapping[str, Number]) -> bool:
        for r in self.rows:
            if sum(c * values[v] for v, c in r.coeffs) > r.rhs:
                return False
        return True

    def uses_unit_coefficients(self) -> bool:
        return all(abs(c) <= 1 for r in self.rows for _, c in r.coeffs)

    def describe(self) -> list[str]:
        return [str(r) for r in self.rows]


def _dedupe_exact(rows: Sequence[Row]) -> tuple[Row, ...]:
    seen = {}
    for r in rows:
        seen.setdefault(r.key, r)
    return tuple(sorted(seen.values(), key=lambda r: (r.key, r.id)))


def bound_constraints(bounds: Mapping[str, tuple]) -> list[LinearConstraint]:
    """``lo <= v <= hi`` rows for each variable; ``None`` bounds are skipped."""
    out = []
    for v, (lo, hi) in bounds.items():
        if lo is not None:
            out.append(LinearConstraint({v: 1}, ">=", lo))
        if hi is not None:
            out.append(LinearConstraint({v: 1}, "<=", hi))
    return out


# -- pruning -----------------------------------------------------------------

def _box(rows: Iterable[Row]):
    lo: dict[str, Fraction] = {}
    hi: dict[str, Fraction] = {}
    for r in rows:
        if len(r.coeffs) != 1:
            continue
        (v, c), = r.coeffs
        # primitive single-variable rows have coefficient +-1
        if c > 0:
            hi[v] = min(hi.get(v, r.rhs), r.rhs)
        else:
            lo[v] = max(lo.get(v, -r.rhs), -r.rhs)
    return lo, hi


def _box_redundant(row: Row, lo, hi) -> bool:
    total = Fraction(0)
    for v, c in row.coeffs:
        bound = hi.get(v) if c > 0 else lo.get(v)
        if bound is None:
            return False
        total += c * bound
    return total <= row.rhs


def _implied_with_box(a: Row, b: Row, lo, hi) -> bool:
    """``a`` together with the box ``lo <= v <= hi`` implies ``b``.

    True when ``(b - a) . x <= b.rhs - a.rhs`` everywhere on the box.
    """
    ca = dict(a.coeffs)
    total = Fraction(0)
    for v, y in b.coeffs:
        d = y - ca.pop(v, 0)
        if d:
            bound = hi.get(v) if d > 0 else lo.get(v)
            if bound is None:
                return False
            total += d * bound
    for v, x in ca.items():
        bound = hi.get(v) if x < 0 else lo.get(v)
        if bound is None:
            return False
        total -= x * bound
    return total <= b.rhs - a.rhs


PAIRWISE_LIMIT = 600
EXACT_REDUNDANCY_VARS = 4
EXACT_REDUNDANCY_ROWS = 64


def _exact_multipliers(others: Sequence[Row], names, target, y_float, normalize=False):
    """Re-solve ``y . others = target`` exactly on the support of ``y_float``.

    With ``normalize`` the multipliers must also sum to one.  Returns the
    support and the rational multipliers, or None if they are not all
    nonnegative.
    """
    from sympy import Matrix

    support = [i for i, y in enumerate(y_float) if y > 1e-9]
    lhs = [[others[i].coeff(v) for i in support] for v in names]
    rhs = [target.get(v, 0) for v in names]
    if normalize:
        lhs.append([1] * len(support))
        rhs.append(1)
    try:
        sol, params = Matrix(lhs).gauss_jordan_solve(Matrix(rhs))
    except ValueError:
        return None
    sol = [Fraction(int(y.p), int(y.q)) for y in sol.subs({p: 0 for p in params})]
    if any(y < 0 for y in sol):
        return None
    return support, sol


def _exactly_redundant(row: Row, others: Sequence[Row]) -> bool:
    """``others`` imply ``row``, proven by exact nonnegative multipliers.

    A floating-point LP proposes multipliers ``y >= 0`` with
    ``y . others = row`` at least cost, or failing that a combination of
    ``others`` reading ``0 <= negative`` (then they have no solution and
    imply anything).  Proposals are re-solved on their support in rational
    arithmetic and accepted only if they hold exactly, so rounding can only
    make the test keep a row.
    """
    import numpy as np
    from scipy.optimize import linprog

    if not others:
        return False
    names = sorted({v for r in others for v in r.support} | set(row.support))
    col = {v: k for k, v in enumerate(names)}
    dense = np.zeros((len(others), len(names)))
    for i, r in enumerate(others):
        for v, c in r.coeffs:
            dense[i, col[v]] = c
    target = np.zeros(len(names))
    for v, c in row.coeffs:
        target[col[v]] = c
    costs = np.array([float(r.rhs) for r in others])

    res = linprog(costs, A_eq=dense.T, b_eq=target, bounds=(0, None), method="highs")
    if res.status == 0 and res.fun <= float(row.rhs) + 1e-7:
        found = _exact_multipliers(others, names, dict(row.coeffs), res.x)
        if found is not None:
            support, ys = found
            if sum(y * others[i].rhs for y, i in zip(ys, support)) <= row.rhs:
                return True

    farkas = linprog(costs, A_eq=np.vstack([dense.T, np.ones(len(others))]),
                     b_eq=np.append(np.zeros(len(names)), 1.0), bounds=(0, None),
                     method="highs")
    if farkas.status == 0 and farkas.fun < -1e-9:
        found = _exact_multipliers(others, names, {}, farkas.x, normalize=True)
        if found is not None:
            support, ys = found
            return sum(y * others[i].rhs for y, i in zip(ys, support)) < 0
    return False


def dominance_prune(system: ConstraintSystem) -> ConstraintSystem:
    """Drop duplicate, trivially true, and singly-implied rows.

    After exact duplicates and same-coefficient rows with a larger
    right-hand side are gone, rows are removed one at a time when the
    rows still kept imply them: either the box spanned by the kept
    single-variable rows alone, or one other kept row plus that box.
    On systems with at most ``EXACT_REDUNDANCY_VARS`` live variables a last
    pass drops every row that a nonnegative combination of the remaining
    rows implies.  Each removal is implied by what remains,
    so the solution set never changes.  The pairwise test is skipped above
    ``PAIRWISE_LIMIT`` rows.
    """
    rows = list(system.rows)
    contradictions = [r for r in rows if r.is_contradiction]
    if contradictions:
        worst = min(contradictions, key=lambda r: (r.rhs, r.id))
        return system.with_rows([worst])

    best: dict[tuple, Row] = {}
    for r in rows:
        if r.is_constant:
            continue
        cur = best.get(r.coeffs)
        if cur is None or (r.rhs, r.id) < (cur.rhs, cur.id):
            best[r.coeffs] = r
    # widest rows first: they are the likeliest to be implied by narrower ones
    kept = sorted(best.values(), key=lambda r: (-len(r.coeffs), r.key, r.id))
    pairwise = len(kept) <= PAIRWISE_LIMIT
    alive = {r.id for r in kept}
    singles = {r.id: r for r in kept if len(r.coeffs) == 1}
    for b in kept:
        lo, hi = _box(r for rid, r in singles.items() if rid != b.id and rid in alive)
        redundant = len(b.coeffs) > 1 and _box_redundant(b, lo, hi)
        if not redundant and pairwise:
            redundant = any(a.id != b.id and a.id in alive and _implied_with_box(a, b, lo, hi)
                            for a in kept)
        if redundant:
            alive.discard(b.id)
    left = [r for r in kept if r.id in alive]
    live = {v for r in left for v in r.support}
    if len(live) <= EXACT_REDUNDANCY_VARS and len(left) <= EXACT_REDUNDANCY_ROWS:
        for b in list(left):
            if _exactly_redundant(b, [r for r in left if r is not b]):
                left.remove(b)
    return system.with_rows(left)


# -- elimination -------------------------------------------------------------

def _combine(system: ConstraintSystem, var: str, p: Row, n: Row) -> Row:
    a = p.coeff(var)
    b = -n.coeff(var)
    acc: dict[str, int] = {}
    for v, c in p.coeffs:
        acc[v] = acc.get(v, 0) + b * c
    for v, c in n.coeffs:
        acc[v] = acc.get(v, 0) + a * c
    acc.pop(var, None)
    items = sorted((v, c) for v, c in acc.items() if c != 0)
    g = 0
    for _, c in items:
        g = math.gcd(g, c)
    g = g or 1
    rhs = Fraction(b * p.rhs + a * n.rhs, g)
    parents = ((p.id, Fraction(b, g)), (n.id, Fraction(a, g)))
    rid = system.ledger.add(Derivation(parents=parents))
    return Row(rid, tuple((v, c // g) for v, c in items), rhs)


def _equality_pivot(var: str, pos: Sequence[Row], neg: Sequence[Row]):
    """Find an implicit equality ``P: e <= r``, ``N: -e <= -r`` involving ``var``."""
    index = {}
    for n in neg:
        index.setdefault((tuple((v, -c) for v, c in n.coeffs), -n.rhs), n)
    for p in pos:
        n = index.get(p.key)
        if n is not None:
            return p, n
    return None


def _step_cost(system: ConstraintSystem, var: str) -> int:
    pos, neg = system.occurrences(var)
    if _equality_pivot(var, pos, neg):
        return len(pos) + len(neg) - 2
    return len(pos) * len(neg)


def eliminate(system: ConstraintSystem, var: str, prune: bool = True) -> ConstraintSystem:
    """One Fourier-Motzkin step removing ``var``, followed by dominance pruning.

    When ``var`` occurs in an implicit equality, every other row is
    combined with that equality only, which yields the same projection
    with far fewer rows.
    """
    if var not in system.variables:
        raise ValueError(f"{var!r} is not a variable of the system")
    pos, neg = system.occurrences(var)
    rest = [r for r in system.rows if r.coeff(var) == 0]
    pivot = _equality_pivot(var, pos, neg)
    new = []
    if pivot is not None:
        P, N = pivot
        for p in pos:
            if p is not P:
                new.append(_combine(system, var, p, N))
        for n in neg:
            if n is not N:
                new.append(_combine(system, var, P, n))
    else:
        for p, n in itertools.product(pos, neg):
            new.append(_combine(system, var, p, n))
    out = system.with_rows(_dedupe_exact(rest + new),
                           variables=[v for v in system.variables if v != var])
    return dominance_prune(out) if prune else out


# -- projection and certificates ----------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    step: int
    variable: Optional[str]
    before: int
    after: int
    live_variables: int
    max_support: int
    unit_coefficients: bool

    def __str__(self):
        return (f"step {self.step}: eliminated {self.variable}, "
                f"constraints {self.before} → {self.after}")


@dataclass(frozen=True)
class Projection:
    kept_variables: tuple[str, ...]
    system: ConstraintSystem
    trace: tuple[TraceStep, ...] = ()
    history: tuple[tuple[str, ConstraintSystem], ...] = ()
    exhausted: bool = False  # row limit hit before completion


OrderPolicy = Union[str, Sequence[str], Callable[[ConstraintSystem, list], str]]


def _pick(system: ConstraintSystem, candidates: list[str], policy: OrderPolicy) -> str:
    if policy == "min-product":
        return min(candidates, key=lambda v: (_step_cost(system, v), v))
    if policy == "name":
        return min(candidates)
    if callable(policy):
        return policy(system, candidates)
    for v in policy:  # explicit order
        if v in candidates:
            return v
    return min(candidates)


def _snapshot(step, var, before, system: ConstraintSystem) -> TraceStep:
    return TraceStep(step, var, before, len(system.rows), len(system.variables),
                     max((len(r.coeffs) for r in system.rows), default=0),
                     system.uses_unit_coefficients())


def project(system: ConstraintSystem, keep: Iterable[str],
            order_policy: OrderPolicy = "min-product", *,
            max_rows: Optional[int] = None, on_step: Callable = None) -> Projection:
    """Eliminate every variable not in ``keep``."""
    keep = tuple(v for v in system.variables if v in set(keep))
    current = dominance_prune(system)
    trace = [_snapshot(0, None, len(system.rows), current)]
    history = []
    pending = [v for v in current.variables if v not in keep]
    step = 0
    while pending:
        var = _pick(current, pending, order_policy)
        if max_rows is not None and _step_cost(current, var) + len(current.rows) > max_rows:
            return Projection(keep, current, tuple(trace), tuple(history), exhausted=True)
        step += 1
        history.append((var, current))
        before = len(current.rows)
        current = eliminate(current, var)
        pending.remove(var)
        snap = _snapshot(step, var, before, current)
        trace.append(snap)
        if on_step is not None:
            on_step(snap)
    return Projection(keep, current, tuple(trace), tuple(history))


def expand_row(system: ConstraintSystem, row_id: int) -> dict[tuple[int, int], Fraction]:
    """Express a stored row as ``{(input index, side): multiplier}``."""
    deriv = system.ledger.derivations
    memo: dict[int, dict] = {}
    # iterative post-order: long derivation chains must not hit the recursion limit
    stack = [(row_id, False)]
    while stack:
        rid, ready = stack.pop()
        if rid in memo:
            continue
        d = deriv[rid]
        if d.origin is not None:
            k, side, scale = d.origin
            memo[rid] = {(k, side): scale}
        elif ready:
            out: dict = {}
            for pid, mult in d.parents:
                for key, m in memo[pid].items():
                    out[key] = out.get(key, 0) + mult * m
            memo[rid] = out
        else:
            stack.append((rid, True))
            stack.extend((pid, False) for pid, _ in d.parents if pid not in memo)
    return dict(memo[row_id])


def replay(system: ConstraintSystem, combination: Mapping[tuple[int, int], Fraction]):
    """Linearly combine input constraints; returns ``(coeffs, rhs)`` of ``sum <= rhs``."""
    coeffs: dict[str, Fraction] = {}
    rhs = Fraction(0)
    for (k, side), mult in combination.items():
        if mult < 0:
            raise ValueError("negative multiplier in a <= combination")
        con = system.inputs[k]
        for v, c in con.coeffs.items():
            coeffs[v] = coeffs.get(v, 0) + mult * side * c
        rhs += mult * side * con.rhs
    return {v: c for v, c in coeffs.items() if c != 0}, rhs


def _refutation(system: ConstraintSystem, row: Row) -> Refutation:
    combo = expand_row(system, row.id)
    return Refutation(
        rhs=row.rhs,
        parents=system.ledger.derivations[row.id].parents,
        combination=tuple(sorted((k, side, m) for (k, side), m in combo.items())),
    )


def _back_substitute(history, variables) -> Optional[dict[str, int]]:
    values: dict[str, int] = {}
    for var, before in reversed(history):
        lo, hi = None, None
        for r in before.rows:
            a = r.coeff(var)
            if a == 0:
                continue
            rest = r.rhs - sum(c * values[v] for v, c in r.coeffs if v != var)
            bound = rest / a
            if a > 0:
                hi = bound if hi is None else min(hi, bound)
            else:
                lo = bound if lo is None else max(lo, bound)
        if lo is not None:
            x = math.ceil(lo)
        elif hi is not None:
            x = min(0, math.floor(hi))
        else:
            x = 0
        if hi is not None and x > hi:
            return None
        values[var] = x
    for v in variables:
        values.setdefault(v, 0)
    return values


def certify(system: ConstraintSystem, *, order_policy: OrderPolicy = "min-product",
            max_rows: Optional[int] = 20000, on_step: Callable = None,
            return_projection: bool = False):
    """Decide rational emptiness by full elimination.

    Returns Infeasible with a replayable refutation when a contradiction
    is derived.  Otherwise tries integer back-substitution through the
    recorded elimination history and returns Feasible only for a witness
    that satisfies every input constraint; anything else is Unknown.
    """
    proj = project(system, (), order_policy, max_rows=max_rows, on_step=on_step)
    bad = proj.system.contradiction()
    if bad is not None:
        cert = Certificate.infeasible(_refutation(system, bad))
    elif proj.exhausted:
        cert = Certificate.unknown("elimination row limit exceeded")
    else:
        values = _back_substitute(proj.history, system.variables)
        if values is not None and all(c.holds(values) for c in system.inputs):
            cert = Certificate.feasible(Witness(values))
        else:
            cert = Certificate.unknown("rationally feasible; integer status needs search")
    return (cert, proj) if return_projection else cert


@dataclass(frozen=True)
class GrowthReport:
    counts: tuple[int, ...]
    live_variables: tuple[int, ...]
    max_support: tuple[int, ...]
    unit_coefficients: tuple[bool, ...]

    def within_binary_bound(self) -> bool:
        """Counts stay at or below ``2**live`` on every unit-coefficient step."""
        return all(c <= 2 ** n
                   for c, n, unit in zip(self.counts, self.live_variables,
                                         self.unit_coefficients) if unit)

    def lines(self) -> list[str]:
        return [f"step {k}: live {n}, constraints {c}, max support {s}"
                for k, (c, n, s) in enumerate(zip(self.counts, self.live_variables,
                                                  self.max_support))]


def constraint_growth_report(trace: Sequence[TraceStep]) -> GrowthReport:
    if not trace:
        return GrowthReport((0,), (0,), (0,), (True,))
    return GrowthReport(
        tuple(s.after for s in trace),
        tuple(s.live_variables for s in trace),
        tuple(s.max_support for s in trace),
        tuple(s.unit_coefficients for s in trace),
    )
