"""Exact integer feasibility and optimization by backtracking search.

Domains are integer intervals.  After every assignment, bound propagation
runs to a fixpoint over the ``<=`` rows of the system; in minimize mode
the search is a depth-first branch and bound on the incumbent value.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from . import fbce
from .fbce import ConstraintSystem
from .model import Certificate, ProblemInstance, Witness, validate_witness
from .reform import Contraction, SearchObjective, contract_classes


@dataclass(frozen=True)
class SearchConfig:
    node_limit: int = 5_000_000
    time_limit: float = 120.0
    branch_policy: str = "first-unassigned"  # or "most-constrained"
    objective_mode: str = "feasibility"      # or "minimize"

    def __post_init__(self):
        if self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("search limits must be positive")
        if self.branch_policy not in ("first-unassigned", "most-constrained"):
            raise ValueError(f"unknown branch policy {self.branch_policy!r}")
        if self.objective_mode not in ("feasibility", "minimize"):
            raise ValueError(f"unknown objective mode {self.objective_mode!r}")


@dataclass(frozen=True)
class SearchResult:
    certificate: Certificate
    objective_value: Optional[Fraction] = None
    nodes_explored: int = 0
    status: str = "complete"  # or "limit-hit"
    aux_values: Optional[Mapping[str, int]] = None


class _LimitHit(Exception):
    pass


class _Solver:
    def __init__(self, system: ConstraintSystem, bounds, objective, cfg: SearchConfig):
        self.names = list(system.variables)
        index = {v: k for k, v in enumerate(self.names)}
        self.rows = []
        self.var_rows = [[] for _ in self.names]
        self.contradiction = False
        for r in system.rows:
            if not r.coeffs:
                if r.rhs < 0:
                    self.contradiction = True
                continue
            # integer points: the left side is integral, so the bound can be floored
            row = ([(index[v], c) for v, c in r.coeffs], math.floor(r.rhs))
            for k, _ in row[0]:
                self.var_rows[k].append(len(self.rows))
            self.rows.append(row)
        self.lo0 = []
        self.hi0 = []
        for v in self.names:
            if v not in bounds:
                raise ValueError(f"variable {v} has no bounds")
            lo, hi = bounds[v]
            if lo is None or hi is None:
                raise ValueError(f"variable {v} is unbounded")
            self.lo0.append(int(lo))
            self.hi0.append(int(hi))
        self.cfg = cfg
        self.nodes = 0
        self.started = time.monotonic()
        self.minimize = cfg.objective_mode == "minimize" and objective is not None
        if self.minimize:
            self.lin = [(index[v], Fraction(c)) for v, c in objective.linear.items() if c]
            self.quad = [(w, index[x] if x else None, index[y] if y else None)
                         for w, x, y in objective.quadratic]
            self.const = Fraction(objective.constant)
        self.best = None
        self.best_value = None

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.cfg.node_limit:
            raise _LimitHit
        if self.nodes % 2048 == 0 and time.monotonic() - self.started > self.cfg.time_limit:
            raise _LimitHit

    def propagate(self, lo, hi, queue) -> bool:
        rows, var_rows = self.rows, self.var_rows
        pending = set(queue)
        queue = list(queue)
        while queue:
            r = queue.pop()
            pending.discard(r)
            coeffs, rhs = rows[r]
            minact = 0
            for k, c in coeffs:
                minact += c * (lo[k] if c > 0 else hi[k])
            if minact > rhs:
                return False
            for k, c in coeffs:
                if c > 0:
                    slack = rhs - minact + c * lo[k]
                    cap = slack // c
                    if cap < hi[k]:
                        if cap < lo[k]:
                            return False
                        hi[k] = cap
                        for r2 in var_rows[k]:
                            if r2 != r and r2 not in pending:
                                pending.add(r2)
                                queue.append(r2)
                else:
                    slack = rhs - minact + c * hi[k]
                    raised = -((-slack) // c)
                    if raised > lo[k]:
                        if raised > hi[k]:
                            return False
                        lo[k] = raised
                        for r2 in var_rows[k]:
                            if r2 != r and r2 not in pending:
                                pending.add(r2)
                                queue.append(r2)
        return True

    def lower_bound(self, lo, hi):
        total = self.const
        for k, c in self.lin:
            total += c * (lo[k] if c > 0 else hi[k])
        for w, x, y in self.quad:
            xl, xh = (lo[x], hi[x]) if x is not None else (0, 0)
            yl, yh = (lo[y], hi[y]) if y is not None else (0, 0)
            gap = max(0, xl - yh, yl - xh)
            total += w * gap * gap
        return total

    def choose(self, lo, hi):
        free = [k for k in range(len(lo)) if lo[k] < hi[k]]
        if not free:
            return None
        if self.cfg.branch_policy == "first-unassigned":
            return free[0]
        return min(free, key=lambda k: (hi[k] - lo[k], -len(self.var_rows[k]), k))

    def dfs(self, lo, hi) -> bool:
        if self.minimize and self.best_value is not None and self.lower_bound(lo, hi) >= self.best_value:
            return False
        k = self.choose(lo, hi)
        if k is None:
            if self.minimize:
                value = self.lower_bound(lo, hi)  # exact once every domain is a point
                if self.best_value is None or value < self.best_value:
                    self.best, self.best_value = list(lo), value
                return False
            self.best = list(lo)
            return True
        for value in range(lo[k], hi[k] + 1):
            self._tick()
            lo2, hi2 = list(lo), list(hi)
            lo2[k] = hi2[k] = value
            if self.propagate(lo2, hi2, self.var_rows[k]) and self.dfs(lo2, hi2):
                return True
        return False

    def run(self) -> str:
        lo, hi = list(self.lo0), list(self.hi0)
        if self.contradiction or any(a > b for a, b in zip(lo, hi)):
            return "complete"
        if not self.propagate(lo, hi, range(len(self.rows))):
            return "complete"
        try:
            self.dfs(lo, hi)
        except _LimitHit:
            return "limit-hit"
        return "complete"


def solve(system: ConstraintSystem, bounds: Mapping[str, tuple],
          objective: Optional[SearchObjective] = None,
          cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Depth-first search with ascending values and interval propagation."""
    solver = _Solver(system, bounds, objective, cfg)
    status = solver.run()
    if solver.best is not None:
        values = dict(zip(solver.names, solver.best))
        value = objective.evaluate(values) if objective is not None else None
        return SearchResult(Certificate.feasible(Witness(values)), value, solver.nodes, status)
    if status == "complete":
        return SearchResult(Certificate.infeasible(reason=f"search exhausted after {solver.nodes} nodes"),
                            None, solver.nodes, status)
    return SearchResult(Certificate.unknown("search limit reached"), None, solver.nodes, status)


def _singleton_candidates(system: ConstraintSystem, protected: set) -> list[str]:
    out = []
    for v in system.variables:
        if v in protected:
            continue
        rows = [r for r in system.rows if r.coeff(v) != 0 and len(r.coeffs) > 1]
        if len(rows) == 1:
            out.append(v)
        elif len(rows) == 2:
            a, b = rows
            twins = (a.coeffs == tuple((u, -c) for u, c in b.coeffs) and a.rhs == -b.rhs)
            if twins and abs(a.coeff(v)) == 1 and a.rhs.denominator == 1:
                out.append(v)
    return out


def presolve(system: ConstraintSystem, protected=()):
    """Project out variables that occur in a single row (or unit-coefficient equality).

    Such projections are exact over the integers: the eliminated variable
    can always be recovered from its bounds or from the equality.  Returns
    the reduced system and the elimination history for back-substitution.
    """
    protected = set(protected)
    history = []
    while True:
        cands = _singleton_candidates(system, protected)
        if not cands:
            return system, history
        v = cands[0]
        history.append((v, system))
        system = fbce.eliminate(system, v)


def _recover(history, values: dict) -> dict:
    values = dict(values)
    for v, before in reversed(history):
        lo = hi = None
        for r in before.rows:
            a = r.coeff(v)
            if a == 0:
                continue
            rest = r.rhs - sum(c * values[u] for u, c in r.coeffs if u != v)
            bound = rest / a
            if a > 0:
                hi = bound if hi is None else min(hi, bound)
            else:
                lo = bound if lo is None else max(lo, bound)
        x = math.ceil(lo) if lo is not None else math.floor(hi)
        if hi is not None and x > hi:
            raise AssertionError(f"presolve recovery failed for {v}")
        values[v] = x
    return values


def solve_instance(instance: ProblemInstance, cfg: SearchConfig = SearchConfig(),
                   presolve_singletons: bool = True) -> SearchResult:
    """Contract classes, optionally presolve, search, and expand the witness."""
    contraction: Contraction = contract_classes(instance)
    return solve_contraction(contraction, cfg, presolve_singletons)


def solve_contraction(contraction: Contraction, cfg: SearchConfig = SearchConfig(),
                      presolve_singletons: bool = True) -> SearchResult:
    if contraction.infeasible_by_construction:
        return SearchResult(Certificate.infeasible(
            reason="class with forbidden members has a nonzero fixed value"))
    bounds = contraction.finite_bounds()
    system = contraction.system
    objective = contraction.objective if cfg.objective_mode == "minimize" else None
    history = []
    if presolve_singletons:
        protected = set()
        if objective is not None:
            protected |= set(objective.linear)
            protected |= {n for _, x, y in objective.quadratic for n in (x, y) if n}
        system, history = presolve(system, protected)
        bounds = {v: bounds[v] for v in system.variables}
    result = solve(system, bounds, objective, cfg)
    cert = result.certificate
    if not cert.is_feasible:
        return result
    values = _recover(history, cert.witness.values)
    witness = contraction.expand(values)
    if not validate_witness(contraction.instance, witness):
        raise AssertionError("expanded witness fails instance validation")
    value = None
    if objective is not None:
        value = contraction.objective.evaluate(values)
    return SearchResult(Certificate.feasible(witness), value, result.nodes_explored,
                        result.status, contraction.aux_values(values))
