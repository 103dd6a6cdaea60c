"""Car-rental acceptance: can a fleet serve every request at once?

A scenario has a horizon of ``T`` days (1-based), a list of car models,
per-day availability counts (optionally backed by a roster of individual
cars) and requests ``(start, duration, allowed models, quantity)``.  The
builders turn a scenario into grid instances with requests as sources,
models as destinations and days as periods:

* Case 1 - single-day requests, fixed fleet: one independent instance per day.
* Case 2 - multi-day requests, fixed fleet: one instance whose classes tie
  each (request, model) allocation across the request window.
* Case 3 - availability varies by day: the Case 2 grid with every arc
  split over supply pools, so the same cars serve the whole window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import (ArcIndex, Certificate, EqualFlowClass, ProblemInstance,
                    Witness, validate_witness)
from .reform import AvailabilityPart, SplitInstance, split_variables



@dataclass(frozen=True)
class RentalRequest:
    id: str
    start: int
    duration: int
    models: tuple[str, ...]
    quantity: int

    @property
    def end(self) -> int:
        return self.start + self.duration - 1

    @property
    def days(self) -> range:
        return range(self.start, self.start + self.duration)


@dataclass(frozen=True)
class Car:
    model: str
    days: frozenset[int]
    id: str = ""


@dataclass(frozen=True)
class FleetAvailability:
    horizon: int
    models: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]  # counts[day - 1][model index]
    roster: Optional[tuple[Car, ...]] = None

    @classmethod
    def from_roster(cls, horizon: int, models: Sequence[str], roster: Sequence[Car]):
        models = tuple(models)
        counts = [[0] * len(models) for _ in range(horizon)]
        for car in roster:
            for d in car.days:
                if 1 <= d <= horizon:
                    counts[d - 1][models.index(car.model)] += 1
        return cls(horizon, models, tuple(map(tuple, counts)), tuple(roster))

    def count(self, day: int, model: str) -> int:
        return self.counts[day - 1][self.models.index(model)]

    @property
    def constant(self) -> bool:
        """No maintenance: the same cars are available on every day."""
        if self.roster is not None:
            full = set(range(1, self.horizon + 1))
            return all(full <= set(c.days) for c in self.roster)
        return all(row == self.counts[0] for row in self.counts)


@dataclass(frozen=True)
class RentalScenario:
    fleet: FleetAvailability
    requests: tuple[RentalRequest, ...]

    def validate(self) -> list[str]:
        out = []
        f = self.fleet
        if f.horizon < 1:
            out.append("horizon must be at least 1 day")
        if len(f.counts) != f.horizon or any(len(r) != len(f.models) for r in f.counts):
            out.append("availability counts must be horizon x models")
        if any(v < 0 for r in f.counts for v in r):
            out.append("availability counts must be nonnegative")
        if f.roster is not None:
            recount = FleetAvailability.from_roster(f.horizon, f.models, f.roster).counts
            if recount != f.counts:
                out.append("counts disagree with the roster")
            for car in f.roster:
                if car.model not in f.models:
                    out.append(f"car {car.id or '?'} has unknown model {car.model}")
        ids = set()
        for r in self.requests:
            if r.id in ids:
                out.append(f"duplicate request id {r.id}")
            ids.add(r.id)
            if r.duration < 1 or r.start < 1 or not 1 <= r.end <= f.horizon:
                out.append(f"request {r.id}: window {r.start}..{r.end} outside 1..{f.horizon}")
            if not r.models:
                out.append(f"request {r.id}: no allowed models")
            if any(m not in f.models for m in r.models):
                out.append(f"request {r.id}: unknown model in {r.models}")
            if r.quantity < 1:
                out.append(f"request {r.id}: quantity must be at least 1")
        return out

    def requests_on(self, day: int) -> list[RentalRequest]:
        return [r for r in self.requests if day in r.days]


@dataclass(frozen=True)
class AvailabilityDecomposition:
    m_bT: dict  # model -> cars available every day
    m_bd_prime: dict  # (model, day) -> m_bd - m_bT
    window_caps: dict  # (model, request id) -> cars covering the window, minus m_bT


@dataclass(frozen=True)
class RentalModel:
    """A built formulation plus the labels needed to read its witness."""

    case: int
    instance: ProblemInstance
    requests: tuple[RentalRequest, ...]
    models: tuple[str, ...]
    days: tuple[int, ...]
    split: Optional[SplitInstance] = None

    def allocations(self, w: Witness) -> list[tuple[str, str, int, int]]:
        """``(request, model, day, count)`` rows with a positive count."""
        if self.split is not None:
            w = self.split.recombine(w)
        rows = []
        for arc, v in sorted(w.values.items()):
            if v:
                rows.append((self.requests[arc.source].id, self.models[arc.dest],
                             self.days[arc.period], v))
        return rows


def _check(scenario: RentalScenario):
    problems = scenario.validate()
    if problems:
        raise ValueError(f"invalid scenario: {problems[0]}")


def build_case1(scenario: RentalScenario) -> list[RentalModel]:
    """One independent instance per day for single-day requests on a fixed fleet."""
    _check(scenario)
    if any(r.duration != 1 for r in scenario.requests):
        raise ValueError("Case 1 needs single-day requests; use Case 2 for multi-day rentals")
    if not scenario.fleet.constant:
        raise ValueError("Case 1 needs a fleet without maintenance; use Case 3")
    fleet = scenario.fleet
    out = []
    for day in range(1, fleet.horizon + 1):
        reqs = tuple(scenario.requests_on(day))
        inst = ProblemInstance(
            n_sources=len(reqs), n_dests=len(fleet.models), n_periods=1,
            row_supply=[[r.quantity] for r in reqs],
            col_demand=[[fleet.count(day, b)] for b in fleet.models],
            row_rel=">=", col_rel="<=",
            forbidden={ArcIndex(i, j, 0) for i, r in enumerate(reqs)
                       for j, b in enumerate(fleet.models) if b not in r.models},
            kind="generalized")
        out.append(RentalModel(1, inst, reqs, fleet.models, (day,)))
    return out


def _window_grid(scenario: RentalScenario, capacity) -> ProblemInstance:
    fleet = scenario.fleet
    reqs = scenario.requests
    T = fleet.horizon
    forbidden = set()
    classes = []
    for i, r in enumerate(reqs):
        for j, b in enumerate(fleet.models):
            for d in range(T):
                if b not in r.models or (d + 1) not in r.days:
                    forbidden.add(ArcIndex(i, j, d))
            if b in r.models:
                classes.append(EqualFlowClass(
                    f"{r.id}/{b}", tuple(ArcIndex(i, j, d - 1) for d in r.days)))
    return ProblemInstance(
        n_sources=len(reqs), n_dests=len(fleet.models), n_periods=T,
        row_supply=[[r.quantity if d in r.days else 0 for d in range(1, T + 1)] for r in reqs],
        col_demand=capacity,
        row_rel=">=", col_rel="<=",
        classes=classes, forbidden=forbidden, kind="generalized")


def build_case2(scenario: RentalScenario) -> RentalModel:
    """Multi-day requests on a fixed fleet: classes keep the same cars all window long."""
    _check(scenario)
    fleet = scenario.fleet
    if not fleet.constant:
        raise ValueError("Case 2 needs a fleet without maintenance; use Case 3")
    capacity = [[fleet.count(d, b) for d in range(1, fleet.horizon + 1)] for b in fleet.models]
    inst = _window_grid(scenario, capacity)
    return RentalModel(2, inst, tuple(scenario.requests), fleet.models,
                       tuple(range(1, fleet.horizon + 1)))


def decompose_availability(fleet: FleetAvailability,
                           requests: Sequence[RentalRequest]) -> AvailabilityDecomposition:
    """Split daily availability into an all-horizon pool and a day-varying remainder.

    With a roster, the all-horizon pool is counted directly.  From counts
    alone the pool is taken as the minimum daily count, which assumes the
    same cars persist; only a roster can reveal that they do not.
    """
    T = fleet.horizon
    all_days = set(range(1, T + 1))
    m_bT, prime, caps = {}, {}, {}
    for b in fleet.models:
        if fleet.roster is not None:
            cars = [set(c.days) for c in fleet.roster if c.model == b]
            m_bT[b] = sum(1 for days in cars if all_days <= days)
        else:
            m_bT[b] = min(fleet.count(d, b) for d in all_days)
        for d in all_days:
            prime[(b, d)] = fleet.count(d, b) - m_bT[b]
            if prime[(b, d)] < 0:
                raise ValueError(f"model {b}, day {d}: negative transient availability")
        for r in requests:
            window = set(r.days)
            if fleet.roster is not None:
                covering = sum(1 for days in cars if window <= days)
                cap = covering - m_bT[b]
            else:
                cap = min(fleet.count(d, b) for d in window) - m_bT[b]
            if cap < 0:
                raise ValueError(f"model {b}, request {r.id}: negative window capacity")
            if cap > min(prime[(b, d)] for d in window):
                raise ValueError(f"model {b}, request {r.id}: window cap exceeds daily remainder")
            caps[(b, r.id)] = cap
    return AvailabilityDecomposition(m_bT, prime, caps)


def _two_pool_parts(scenario, dec) -> list[AvailabilityPart]:
    fleet = scenario.fleet
    T = fleet.horizon
    plus = AvailabilityPart("plus", tuple(tuple(dec.m_bT[b] for _ in range(T)) for b in fleet.models))
    minus_caps = {}
    for i, r in enumerate(scenario.requests):
        for j, b in enumerate(fleet.models):
            for d in r.days:
                minus_caps[ArcIndex(i, j, d - 1)] = dec.window_caps[(b, r.id)]
    minus = AvailabilityPart(
        "minus", tuple(tuple(dec.m_bd_prime[(b, d)] for d in range(1, T + 1)) for b in fleet.models),
        minus_caps)
    return [plus, minus]


def _pattern_parts(scenario, dec) -> list[AvailabilityPart]:
    """Stable pool plus one transient pool per distinct car availability pattern."""
    fleet = scenario.fleet
    T = fleet.horizon
    all_days = frozenset(range(1, T + 1))
    patterns = []
    for b in fleet.models:
        groups: dict[frozenset, int] = {}
        for car in fleet.roster:
            days = frozenset(car.days) & all_days
            if car.model == b and days != all_days and days:
                groups[days] = groups.get(days, 0) + 1
        patterns.append(sorted(groups.items(), key=lambda kv: (sorted(kv[0]), kv[1])))
    parts = [AvailabilityPart("plus", tuple(tuple(dec.m_bT[b] for _ in range(T)) for b in fleet.models))]
    n_transient = max(1, max((len(p) for p in patterns), default=0))
    for k in range(n_transient):
        capacity, caps = [], {}
        for j, b in enumerate(fleet.models):
            days, size = patterns[j][k] if k < len(patterns[j]) else (frozenset(), 0)
            capacity.append(tuple(size if d in days else 0 for d in range(1, T + 1)))
            for i, r in enumerate(scenario.requests):
                fits = set(r.days) <= days
                for d in r.days:
                    caps[ArcIndex(i, j, d - 1)] = size if fits else 0
        parts.append(AvailabilityPart(f"minus{k + 1}", tuple(capacity), caps))
    return parts


def build_case3(scenario: RentalScenario, refine: Optional[bool] = None) -> RentalModel:
    """Varying availability through variable splitting.

    ``refine=False`` builds the two-pool form: ``x+`` draws on cars
    available all horizon, ``x-`` on the daily remainder, and each ``x-``
    arc is capped by the cars covering its request window.  With a roster
    (``refine`` defaults to True then) the remainder is further split by
    availability pattern, one pool per distinct set of available days,
    which makes acceptance exact.
    """
    _check(scenario)
    fleet = scenario.fleet
    T = fleet.horizon
    dec = decompose_availability(fleet, scenario.requests)
    if refine is None:
        refine = fleet.roster is not None
    if refine and fleet.roster is None:
        raise ValueError("pattern refinement needs a car-level roster")
    capacity = [[fleet.count(d, b) for d in range(1, T + 1)] for b in fleet.models]
    base = _window_grid(scenario, capacity)
    parts = _pattern_parts(scenario, dec) if refine else _two_pool_parts(scenario, dec)
    split = split_variables(base, parts)
    return RentalModel(3, split.base, tuple(scenario.requests), fleet.models,
                       tuple(range(1, T + 1)), split)


def choose_case(scenario: RentalScenario) -> int:
    """Weakest case whose preconditions hold."""
    if not scenario.fleet.constant:
        return 3
    if all(r.duration == 1 for r in scenario.requests):
        return 1
    return 2


def build(scenario: RentalScenario, case="auto") -> list[RentalModel]:
    case = choose_case(scenario) if case == "auto" else int(case)
    if case == 1:
        return build_case1(scenario)
    if case == 2:
        return [build_case2(scenario)]
    if case == 3:
        return [build_case3(scenario)]
    raise ValueError(f"unknown case {case!r}")


@dataclass
class RentalDecision:
    case: int
    certificate: Certificate
    models: list[RentalModel]
    certificates: list[Certificate] = field(default_factory=list)
    allocations: Optional[list[tuple[str, str, int, int]]] = None
    statistics: dict = field(default_factory=dict)


def _decide(inst: ProblemInstance, method: str, cfg=None):
    from . import fbce, oracle, search
    from .reform import contract_classes
    if method == "search":
        res = search.solve_instance(inst, cfg or search.SearchConfig())
        return res.certificate, {"nodes": res.nodes_explored}
    if method == "oracle":
        return oracle.oracle_verdict(inst), {}
    if method == "fbce":
        con = contract_classes(inst)
        if con.infeasible_by_construction:
            return Certificate.infeasible(reason="forbidden class with nonzero value"), {}
        cert, proj = fbce.certify(con.system, return_projection=True)
        stats = {"constraints": [s.after for s in proj.trace]}
        if cert.is_feasible:
            cert = Certificate.feasible(con.expand(cert.witness.values))
        return cert, stats
    raise ValueError(f"unknown method {method!r}")


def accept_requests(scenario: RentalScenario, method: str = "search",
                    case="auto", cfg=None) -> RentalDecision:
    """Decide whether every request can be accepted simultaneously."""
    models = build(scenario, case)
    certs, stats = [], {"instances": len(models)}
    for m in models:
        cert, s = _decide(m.instance, method, cfg)
        certs.append(cert)
        for k, v in s.items():
            stats.setdefault(k, []).append(v)
    if any(c.is_infeasible for c in certs):
        overall = next(c for c in certs if c.is_infeasible)
        return RentalDecision(models[0].case, overall, models, certs, None, stats)
    if any(c.is_unknown for c in certs):
        overall = next(c for c in certs if c.is_unknown)
        return RentalDecision(models[0].case, overall, models, certs, None, stats)
    table = []
    merged = {}
    for m, c in zip(models, certs):
        if not validate_witness(m.instance, c.witness):
            raise AssertionError("allocation witness fails its own instance")
        rows = m.allocations(c.witness)
        table.extend(rows)
        for req, model, day, count in rows:
            merged[(req, model, day)] = count
    table.sort(key=lambda r: (r[2], r[0], r[1]))
    return RentalDecision(models[0].case if models else 1, Certificate.feasible(Witness(merged)),
                          models, certs, table, stats)
