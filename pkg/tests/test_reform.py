import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from equalflow import reform, search
from equalflow.carrental import (Car, FleetAvailability, RentalRequest, RentalScenario,
                                 build_case3, decompose_availability)
from equalflow.generate import oracle_corpus, random_instance, same_route_instance
from equalflow.model import (ArcIndex, EqualFlowClass, Objective, ProblemInstance, VarBounds,
                             Witness, validate_instance, validate_witness)
from equalflow.oracle import EnumerationBudget, enumerate_feasible, oracle_verdict
from equalflow.reform import (AvailabilityPart, PenaltyConfig, assignment_from_transportation,
                              class_var, contract_classes, nw_corner, penalize_equality,
                              penalize_forbidden, split_variables, stack_by_index,
                              transportation_from_assignment)


def period(supply, demand, **kw):
    return ProblemInstance(len(supply), len(demand), 1, [[b] for b in supply],
                           [[a] for a in demand], **kw)


# -- stacking ---------------------------------------------------------------------

def test_stack_two_square_periods():
    stacked = stack_by_index([period([1, 1], [1, 1]), period([2, 0], [1, 1])])
    assert stacked.dims == (4, 4, 1)
    assert len(stacked.forbidden) == 8
    assert ArcIndex(0, 2, 0) in stacked.forbidden and ArcIndex(2, 2, 0) not in stacked.forbidden


def test_stack_single_period_is_identity():
    p = period([1, 2], [2, 1])
    assert stack_by_index([p]) is p


def test_stack_three_thin_periods():
    stacked = stack_by_index([period([1], [1, 0])] * 3)
    assert stacked.dims == (3, 6, 1)
    # brute-force count of cells whose row block and column block differ
    off = sum(1 for a, b in itertools.product(range(3), range(6)) if a != b // 2)
    assert off == 12
    assert len(stacked.forbidden) == 12


def test_stack_attaches_cross_period_classes():
    cls = EqualFlowClass("t", [(0, 0, 0), (0, 0, 1)])
    stacked = stack_by_index([period([1], [1])] * 2, [cls])
    assert stacked.classes[0].members == (ArcIndex(0, 0, 0), ArcIndex(1, 1, 0))
    assert validate_instance(stacked) == []


def test_stack_dimension_mismatch():
    with pytest.raises(ValueError):
        stack_by_index([period([1], [1]), period([1, 0], [1])])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_stacking_preserves_per_period_feasibility(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 3)
    dims = (rng.randint(1, 2), rng.randint(1, 2), 1)
    parts = [random_instance(rng, dims, 0, 0.2, form="transportation", max_upper=1)
             for _ in range(n)]
    stacked = stack_by_index(parts)
    expected = all(oracle_verdict(p).is_feasible for p in parts)
    assert oracle_verdict(stacked).is_feasible == expected


# -- penalties ----------------------------------------------------------------------

def test_penalize_forbidden_without_forbidden_arcs():
    inst = period([1], [1], objective=Objective({ArcIndex(0, 0, 0): 3}))
    assert penalize_forbidden(inst, PenaltyConfig(100)) is inst


def test_penalize_one_forbidden_arc():
    inst = period([1], [1, 0], col_rel="<=", forbidden={(0, 1, 0)}, objective=Objective())
    pen = penalize_forbidden(inst, PenaltyConfig(100))
    assert pen.forbidden == frozenset()
    assert pen.objective.linear == {ArcIndex(0, 1, 0): 100}


def test_forbidden_class_counts_once_per_member():
    members = [(0, 0, t) for t in range(3)]
    inst = ProblemInstance(1, 1, 3, [[0] * 3], [[0] * 3], row_rel="<=", col_rel="<=",
                           classes=[EqualFlowClass("t", members)], forbidden=members,
                           default_bounds=VarBounds(0, 2))
    pen = penalize_forbidden(inst, PenaltyConfig(100))
    contracted = contract_classes(pen).objective
    assert contracted.linear == {class_var("t"): 300}


def test_penalize_equality_without_classes():
    inst = period([1], [1])
    assert penalize_equality(inst, PenaltyConfig(10)) is inst


def test_penalize_equality_terms():
    inst = ProblemInstance(1, 1, 2, [[1, 1]], [[1, 1]], row_rel="<=", col_rel="<=",
                           default_bounds=VarBounds(0, 1),
                           classes=[EqualFlowClass("t", [(0, 0, 0), (0, 0, 1)])])
    pen = penalize_equality(inst, PenaltyConfig(10))
    assert pen.classes == () and pen.kind == "generalized"
    terms = {(q.weight, q.arc, q.aux) for q in pen.objective.quadratic}
    assert terms == {(10, ArcIndex(0, 0, 0), "t"), (10, ArcIndex(0, 0, 1), "t")}
    assert pen.objective.aux_bounds["t"] == VarBounds(0, 1)
    point = {ArcIndex(0, 0, 0): 1, ArcIndex(0, 0, 1): 0}
    # frozen by hand: 10 * ((1-1)**2 + (0-1)**2)
    assert pen.objective.evaluate(point, {"t": 1}) == 10


def test_default_lambda_rule():
    inst = period([2], [2], default_bounds=VarBounds(0, 3),
                  objective=Objective({ArcIndex(0, 0, 0): -4}))
    assert reform.default_lambda(inst) == 1 + 4 * 3
    assert reform.default_lambda(period([5], [5])) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 16))
def test_penalty_soundness_by_exhaustion(seed):
    """At every point in the box, the best shared values reproduce the cost
    exactly when forbidden arcs are empty and classes agree; otherwise the
    penalty adds at least the weight."""
    inst = oracle_corpus(seed, 1, max_variables=8, max_points=2 ** 12, with_cost=True)[0]
    inst = inst.replace(objective=inst.objective or Objective())
    lam = reform.default_lambda(inst)
    pen = reform.penalize(inst)
    arcs = list(inst.arcs())
    boxes = [range(inst.bounds(a).lower, inst.bounds(a).upper + 1) for a in arcs]
    if math.prod(map(len, boxes)) > 4096:
        return
    aux_names = list(pen.objective.aux_bounds)
    aux_boxes = [range(b.lower, b.upper + 1)
                 for b in (pen.objective.aux_bounds[n] for n in aux_names)]
    for values in itertools.product(*boxes):
        point = dict(zip(arcs, values))
        base = inst.objective.evaluate(point)
        best = min(pen.objective.evaluate(point, dict(zip(aux_names, t)))
                   for t in itertools.product(*aux_boxes))
        satisfied = (all(point[a] == 0 for a in inst.forbidden)
                     and all(len({point[m] for m in c.members}) == 1 for c in inst.classes))
        if satisfied:
            assert best == base
        else:
            assert best >= base + lam


# -- contraction ---------------------------------------------------------------------

def test_contraction_without_classes_mirrors_instance():
    inst = period([1, 1], [1, 1])
    con = contract_classes(inst)
    assert con.system.variables == tuple(reform.arc_var(a) for a in inst.arcs())
    assert len(con.system.inputs) == 4 + 4


def test_class_in_one_row_sums_coefficients():
    inst = ProblemInstance(1, 2, 1, [[2]], [[1], [1]],
                           classes=[EqualFlowClass("t", [(0, 0, 0), (0, 1, 0)])])
    row = contract_classes(inst).system.inputs[0]
    assert dict(row.coeffs) == {class_var("t"): 2}


def test_class_across_three_days_hits_each_capacity_row():
    members = [(0, 0, d) for d in range(3)]
    inst = ProblemInstance(2, 1, 3, [[1] * 3, [0] * 3], [[1] * 3], row_rel=">=", col_rel="<=",
                           classes=[EqualFlowClass("t", members)])
    con = contract_classes(inst)
    capacity_rows = [c for c in con.system.inputs if c.relation == "<=" and len(c.coeffs) > 1]
    assert len(capacity_rows) == 3
    assert all(c.coeffs[class_var("t")] == 1 for c in capacity_rows)


def test_forbidden_class_with_fixed_value_is_flagged():
    members = [(0, 0, 0), (0, 0, 1)]
    inst = ProblemInstance(1, 1, 2, [[1, 1]], [[1, 1]], default_bounds=VarBounds(0, 1),
                           classes=[EqualFlowClass("t", members, shared_value=1)],
                           forbidden=members)
    con = contract_classes(inst)
    assert con.infeasible_by_construction
    assert search.solve_contraction(con).certificate.is_infeasible


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 16))
def test_contraction_is_a_bijection_on_feasible_points(seed):
    inst = oracle_corpus(seed, 1, max_variables=9, max_points=2 ** 12)[0]
    con = contract_classes(inst)
    grid_points = enumerate_feasible(inst).points
    bounds = con.finite_bounds()
    reduced = [] if con.infeasible_by_construction else \
        enumerate_feasible(con.system, bounds=bounds).points
    assert len(grid_points) == len(reduced)
    for p in reduced:
        assert validate_witness(inst, con.expand(p.values))
    for w in grid_points:
        assert con.system.satisfied_by(con.restrict(w))


# -- transportation <-> assignment ------------------------------------------------------

def single_route(flow, slots, rel="="):
    return ProblemInstance(1, 1, 1, [[flow]], [[slots]], col_rel=rel)


def test_full_flow_fills_both_slots():
    inst = single_route(2, 2)
    a, aw = assignment_from_transportation(inst, Witness.from_matrix([[2]]))
    assert a.kind == "assignment" and a.n_dests == 2
    assert [aw.values[ArcIndex(0, s, 0)] for s in range(2)] == [1, 1]


def test_surplus_slot_takes_lowest_index():
    inst = single_route(1, 2, rel="<=")
    a, aw = assignment_from_transportation(inst, Witness.from_matrix([[1]]))
    assert [aw.values[ArcIndex(0, s, 0)] for s in range(2)] == [1, 0]
    again = assignment_from_transportation(inst, Witness.from_matrix([[1]]))
    assert again == (a, aw)


def test_zero_flow_gives_zero_assignment():
    inst = ProblemInstance(2, 2, 1, [[0], [0]], [[0], [0]])
    a, aw = assignment_from_transportation(inst, Witness.from_matrix([[0, 0], [0, 0]]))
    assert set(aw.values.values()) == {0}
    t, tw = transportation_from_assignment(a, aw)
    assert t.dims == inst.dims and set(tw.values.values()) == {0}


@pytest.mark.parametrize("flow, slots, rel", [(2, 2, "="), (1, 2, "<="), (0, 0, "=")])
def test_aggregation_mirrors_expansion(flow, slots, rel):
    inst = single_route(flow, slots, rel)
    w = Witness.from_matrix([[flow]])
    t, tw = transportation_from_assignment(*assignment_from_transportation(inst, w))
    assert tw == w
    assert t.col_demand == inst.col_demand


def test_route_classes_become_slot_classes():
    inst = ProblemInstance(2, 1, 2, [[1, 1], [1, 2]], [[2, 3]],
                           classes=[EqualFlowClass("r", [(0, 0, 0), (0, 0, 1)])])
    w = search.solve_instance(inst).certificate.witness
    a, aw = assignment_from_transportation(inst, w)
    assert {c.id for c in a.classes} == {"r#0", "r#1", "r#2"}
    assert validate_witness(a, aw)
    assert transportation_from_assignment(a, aw)[1] == w


def test_unequibounded_input_points_to_splitting():
    inst = ProblemInstance(1, 1, 2, [[1, 1]], [[1, 1]],
                           bound_overrides={(0, 0, 1): VarBounds(0, 5)},
                           classes=[EqualFlowClass("r", [(0, 0, 0), (0, 0, 1)])])
    w = Witness({ArcIndex(0, 0, 0): 1, ArcIndex(0, 0, 1): 1})
    with pytest.raises(ValueError, match="split_variables"):
        assignment_from_transportation(inst, w)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_transportation_feasible_iff_assignment_feasible(seed):
    rng = random.Random(seed)
    inst = same_route_instance(rng, (rng.randint(1, 2), rng.randint(1, 2), rng.randint(1, 2)))
    truth = oracle_verdict(inst)
    if not truth.is_feasible:
        return
    a, aw = assignment_from_transportation(inst, truth.witness)
    assert validate_witness(a, aw)
    assert oracle_verdict(a, EnumerationBudget(2 ** 22)).is_feasible
    assert transportation_from_assignment(a, aw)[1] == truth.witness


# -- splitting -----------------------------------------------------------------------

def s_fleet(quantity):
    cars = (Car("b0", frozenset({1}), "S1"), Car("b0", frozenset({1, 2}), "S2"),
            Car("b0", frozenset({2}), "S3"))
    fleet = FleetAvailability.from_roster(2, ("b0",), cars)
    return RentalScenario(fleet, (RentalRequest("r1", 1, 2, ("b0",), quantity),))


def test_split_s_fleet_pools():
    scenario = s_fleet(1)
    dec = decompose_availability(scenario.fleet, scenario.requests)
    assert dec.m_bT == {"b0": 1}
    assert dec.m_bd_prime == {("b0", 1): 1, ("b0", 2): 1}
    split = build_case3(scenario, refine=False).split
    assert [p.name for p in split.parts] == ["plus", "minus"]
    assert split.parts[0].capacity == ((1, 1),)
    assert split.parts[1].capacity == ((1, 1),)


def test_constant_availability_leaves_minus_pool_empty():
    fleet = FleetAvailability(2, ("b0",), ((2,), (2,)))
    scenario = RentalScenario(fleet, (RentalRequest("r1", 1, 2, ("b0",), 2),))
    split = build_case3(scenario).split
    minus = split.parts[1]
    assert minus.capacity == ((0, 0),)
    assert set(minus.arc_caps.values()) == {0}
    res = search.solve_instance(split.base)
    w = res.certificate.witness
    assert all(w.values[halves[1]] == 0 for halves in split.mapping.values())


def test_split_s_fleet_two_cars_infeasible():
    split = build_case3(s_fleet(2), refine=False).split
    assert search.solve_instance(split.base).certificate.is_infeasible
    split = build_case3(s_fleet(1), refine=False).split
    res = search.solve_instance(split.base)
    assert res.certificate.is_feasible
    flows = split.recombine(res.certificate.witness)
    assert validate_witness(split.original, flows)


def test_split_rejects_negative_capacity():
    inst = ProblemInstance(1, 1, 1, [[1]], [[1]], row_rel=">=", col_rel="<=")
    with pytest.raises(ValueError, match="negative"):
        split_variables(inst, [AvailabilityPart("plus", ((1,),)), AvailabilityPart("minus", ((-1,),))])


def test_split_duplicates_classes_per_part():
    inst = ProblemInstance(1, 1, 2, [[1, 1]], [[1, 1]], row_rel=">=", col_rel="<=",
                           classes=[EqualFlowClass("r", [(0, 0, 0), (0, 0, 1)])])
    split = split_variables(inst, [AvailabilityPart("plus", ((1, 1),)),
                                   AvailabilityPart("minus", ((0, 1),))])
    assert [c.id for c in split.base.classes] == ["r@plus", "r@minus"]
    assert split.mapping[ArcIndex(0, 0, 1)] == (ArcIndex(0, 0, 1), ArcIndex(0, 1, 1))


# -- north-west corner ---------------------------------------------------------------------

def test_nw_corner_hand_example():
    inst = period([3, 2], [2, 3])
    cert = nw_corner(inst)
    assert cert.is_feasible
    assert [[row[j][0] for j in range(2)] for row in cert.witness.grid(inst)] == [[2, 1], [0, 2]]


def test_nw_corner_single_cell():
    inst = period([1], [1])
    assert nw_corner(inst).witness.grid(inst) == [[[1]]]


def test_nw_corner_imbalance():
    cert = nw_corner(period([2], [1]))
    assert cert.is_infeasible and "unbalanced" in cert.reason


def test_nw_corner_precondition():
    assert nw_corner(period([1], [1], forbidden={(0, 0, 0)})).is_unknown
    assert nw_corner(period([1], [1], default_bounds=VarBounds(0, 1))).is_unknown
