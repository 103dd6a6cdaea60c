"""Seeded random instances, constraint systems and rental scenarios."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .carrental import Car, FleetAvailability, RentalRequest, RentalScenario
from .fbce import ConstraintSystem, LinearConstraint
from .model import (ArcIndex, EqualFlowClass, Objective, ProblemInstance, VarBounds,
                    validate_instance)

FORMS = ("transportation", "assignment", "generalized")


def _flow_sums(ni, nj, nt, values):
    rows = [[sum(values[ArcIndex(i, j, t)] for j in range(nj)) for t in range(nt)]
            for i in range(ni)]
    cols = [[sum(values[ArcIndex(i, j, t)] for i in range(ni)) for t in range(nt)]
            for j in range(nj)]
    return rows, cols


def random_instance(rng: random.Random, dims=(2, 2, 2), class_density: float = 0.3,
                    forbidden_density: float = 0.1, form: Optional[str] = None,
                    max_upper: int = 2, with_cost: bool = False) -> ProblemInstance:
    """Draw one valid instance.

    Classes tie a (source, dest) route over two or more periods.  Roughly
    half the draws plant a witness so that feasible and infeasible
    instances both occur; the rest perturb its sums.
    """
    if not (0 <= class_density <= 1 and 0 <= forbidden_density <= 1):
        raise ValueError("densities must lie in [0, 1]")
    ni, nj, nt = dims
    form = form or rng.choice(FORMS)
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}")
    upper = 1 if form == "assignment" else rng.randint(1, max_upper)

    classes, forbidden = [], set()
    for i in range(ni):
        for j in range(nj):
            route = [ArcIndex(i, j, t) for t in range(nt)]
            if nt >= 2 and rng.random() < class_density:
                members = sorted(rng.sample(route, rng.randint(2, nt)))
                classes.append(EqualFlowClass(f"t_{i}{j}_{len(classes)}", tuple(members)))
                if rng.random() < forbidden_density:
                    forbidden.update(members)
                route = [a for a in route if a not in members]
            for a in route:
                if rng.random() < forbidden_density:
                    forbidden.add(a)

    overrides = {}
    if form == "generalized":
        for a in sorted(set(ArcIndex(i, j, t) for i in range(ni) for j in range(nj)
                            for t in range(nt)) - forbidden - {m for c in classes for m in c.members}):
            if rng.random() < 0.15:
                overrides[a] = VarBounds(rng.randint(0, 1), upper)

    planted = {}
    shared = {c.id: (0 if c.members[0] in forbidden else rng.randint(0, upper)) for c in classes}
    owner = {m: c.id for c in classes for m in c.members}
    for i in range(ni):
        for j in range(nj):
            for t in range(nt):
                a = ArcIndex(i, j, t)
                if a in forbidden:
                    planted[a] = 0
                elif a in owner:
                    planted[a] = shared[owner[a]]
                else:
                    b = overrides.get(a, VarBounds(0, upper))
                    planted[a] = rng.randint(b.lower, b.upper)
    rows, cols = _flow_sums(ni, nj, nt, planted)

    if form == "assignment":
        row_rel, col_rel = "=", "="
        cols = [[1] * nt for _ in range(nj)]
    elif form == "transportation":
        row_rel, col_rel = "=", "="
    else:
        row_rel, col_rel = rng.choice(("=", "<=", ">=")), rng.choice(("=", "<=", ">="))
    if form == "assignment" or rng.random() < 0.5:
        rows = [[max(0, v + rng.randint(-1, 1)) for v in r] for r in rows]
        if form != "assignment":
            cols = [[max(0, v + rng.randint(-1, 1)) for v in c] for c in cols]

    objective = None
    if with_cost:
        objective = Objective({ArcIndex(i, j, t): rng.randint(0, 4)
                               for i in range(ni) for j in range(nj) for t in range(nt)})
        objective = Objective({a: c for a, c in objective.linear.items() if c})
    inst = ProblemInstance(ni, nj, nt, rows, cols, row_rel, col_rel,
                           default_bounds=VarBounds(0, upper), bound_overrides=overrides,
                           classes=classes, forbidden=forbidden, objective=objective,
                           kind=form)
    problems = validate_instance(inst)
    if problems:
        raise AssertionError(f"generator produced an invalid instance: {problems[0]}")
    return inst


def balanced_instance(rng: random.Random, n_sources: int, n_dests: int,
                      max_total: int = 12) -> ProblemInstance:
    """Plain balanced single-period transportation: no classes, no forbidden arcs."""
    total = rng.randint(0, max_total)

    def composition(n):
        cuts = sorted(rng.randint(0, total) for _ in range(n - 1))
        return [b - a for a, b in zip([0] + cuts, cuts + [total])]

    return ProblemInstance(n_sources, n_dests, 1, [[v] for v in composition(n_sources)],
                           [[v] for v in composition(n_dests)])


def random_binary_system(rng: random.Random, n_vars: int, n_rows: int) -> ConstraintSystem:
    """Rows with coefficients in {-1, 0, 1} over 0/1 variables."""
    names = [f"v{k}" for k in range(n_vars)]
    cons = []
    for v in names:
        cons.append(LinearConstraint({v: 1}, ">=", 0))
        cons.append(LinearConstraint({v: 1}, "<=", 1))
    for _ in range(n_rows):
        coeffs = {}
        while not coeffs:
            coeffs = {v: rng.choice((-1, 1)) for v in names if rng.random() < 0.4}
        pos = sum(1 for c in coeffs.values() if c > 0)
        rhs = rng.randint(-1, max(pos - 1, 0))
        rel = rng.choice(("<=", "<=", ">=", "="))
        cons.append(LinearConstraint(coeffs, rel, Fraction(rhs)))
    return ConstraintSystem.from_constraints(names, cons)


def random_scenario(rng: random.Random, max_cars: int = 6, max_requests: int = 4,
                    max_horizon: int = 5, n_models: int = 2, roster: bool = True) -> RentalScenario:
    horizon = rng.randint(1, max_horizon)
    models = tuple(f"b{k}" for k in range(n_models))
    cars = []
    for k in range(rng.randint(1, max_cars)):
        lo = rng.randint(1, horizon)
        hi = rng.randint(lo, horizon)
        if rng.random() < 0.4:
            lo, hi = 1, horizon
        cars.append(Car(rng.choice(models), frozenset(range(lo, hi + 1)), f"car{k}"))
    fleet = FleetAvailability.from_roster(horizon, models, tuple(cars))
    if not roster:
        fleet = FleetAvailability(horizon, models, fleet.counts)
    reqs = []
    for k in range(rng.randint(1, max_requests)):
        start = rng.randint(1, horizon)
        duration = rng.randint(1, horizon - start + 1)
        allowed = tuple(sorted(rng.sample(models, rng.randint(1, n_models))))
        reqs.append(RentalRequest(f"r{k + 1}", start, duration, allowed, rng.randint(1, 2)))
    return RentalScenario(fleet, tuple(reqs))


def effective_variables(instance: ProblemInstance) -> int:
    """Free variables left once classes are contracted and forbidden arcs dropped."""
    from .reform import contract_classes
    return len(contract_classes(instance).system.variables)


def oracle_corpus(seed: int, count: int, max_variables: int = 14, max_points: int = 2 ** 20,
                  max_dims=(3, 3, 3), form: Optional[str] = None, with_cost: bool = False):
    """``count`` random instances small enough for exhaustive enumeration.

    Draws are rejected until both the contracted variable count and the
    oracle's point space fit, so the corpus is fixed by ``seed``.
    """
    from .oracle import space_size
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        dims = tuple(rng.randint(1, m) for m in max_dims)
        inst = random_instance(rng, dims, rng.uniform(0, 0.5), rng.uniform(0, 0.3),
                               form=form, with_cost=with_cost)
        if effective_variables(inst) > max_variables or space_size(inst) > max_points:
            continue
        out.append(inst)
    return out


def same_route_instance(rng: random.Random, dims=(2, 2, 2), class_density: float = 0.5,
                        forbidden_density: float = 0.1, max_flow: int = 2) -> ProblemInstance:
    """Balanced same-route transportation with whole-horizon route classes.

    All arcs keep the default ``[0, inf)`` bounds, so the instance is
    equibounded.  Sums come from a planted flow, perturbed in a quarter
    of the draws.
    """
    ni, nj, nt = dims
    classes, forbidden, planted = [], set(), {}
    for i in range(ni):
        for j in range(nj):
            route = tuple(ArcIndex(i, j, t) for t in range(nt))
            if rng.random() < class_density:
                if rng.random() < forbidden_density:
                    forbidden.update(route)
                    value = 0
                else:
                    value = rng.randint(0, max_flow)
                classes.append(EqualFlowClass(f"t_{i}{j}", route))
                planted.update({a: value for a in route})
                continue
            for a in route:
                if rng.random() < forbidden_density:
                    forbidden.add(a)
                    planted[a] = 0
                else:
                    planted[a] = rng.randint(0, max_flow)
    rows, cols = _flow_sums(ni, nj, nt, planted)
    if rng.random() < 0.25:
        rows = [[max(0, v + rng.randint(-1, 1)) for v in r] for r in rows]
    return ProblemInstance(ni, nj, nt, rows, cols, classes=classes, forbidden=forbidden)
