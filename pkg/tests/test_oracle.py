import pytest

from equalflow.carrental import Car, FleetAvailability, RentalRequest, RentalScenario
from equalflow.fbce import ConstraintSystem, LinearConstraint as C
from equalflow.model import ArcIndex, EqualFlowClass, ProblemInstance, VarBounds, Witness
from equalflow.oracle import (BudgetExceeded, EnumerationBudget, enumerate_feasible,
                              oracle_minimum, oracle_verdict, rental_matching_exists,
                              space_size)


def test_two_by_two_assignment_has_two_points():
    inst = ProblemInstance(2, 2, 1, [[1], [1]], [[1], [1]], default_bounds=VarBounds(0, 1))
    points = enumerate_feasible(inst).points
    assert [p.grid(inst) for p in points] == [[[[0], [1]], [[1], [0]]], [[[1], [0]], [[0], [1]]]]


def test_system_points_in_order():
    s = ConstraintSystem.from_constraints(["x", "y"], [C({"x": 1, "y": 1}, "=", 1)])
    points = enumerate_feasible(s, bounds={"x": (0, 1), "y": (0, 1)}).points
    assert [p.values for p in points] == [{"x": 0, "y": 1}, {"x": 1, "y": 0}]


def test_systems_need_bounds():
    with pytest.raises(ValueError):
        enumerate_feasible(ConstraintSystem.from_constraints(["x"], []))


def s_scenario(quantity):
    cars = (Car("b0", frozenset({1}), "S1"), Car("b0", frozenset({1, 2}), "S2"),
            Car("b0", frozenset({2}), "S3"))
    fleet = FleetAvailability.from_roster(2, ("b0",), cars)
    return RentalScenario(fleet, (RentalRequest("r1", 1, 2, ("b0",), quantity),))


def test_two_day_request_against_three_cars():
    assert rental_matching_exists(s_scenario(1))
    assert not rental_matching_exists(s_scenario(2))


def test_matching_oracle_needs_roster():
    fleet = FleetAvailability(1, ("b0",), ((1,),))
    with pytest.raises(ValueError):
        rental_matching_exists(RentalScenario(fleet, (RentalRequest("r", 1, 1, ("b0",), 1),)))


def test_budget_is_enforced():
    inst = ProblemInstance(3, 3, 2, [[1, 1]] * 3, [[1, 1]] * 3, default_bounds=VarBounds(0, 3))
    assert space_size(inst) == 4 ** 18
    with pytest.raises(BudgetExceeded):
        enumerate_feasible(inst, EnumerationBudget(1000))
    cert = oracle_verdict(inst, EnumerationBudget(1000))
    assert cert.is_unknown and "budget" in cert.reason


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        EnumerationBudget(0)


def test_verdict_witness_is_lexicographically_first_and_stable():
    inst = ProblemInstance(2, 2, 1, [[1], [1]], [[1], [1]], default_bounds=VarBounds(0, 1))
    first = oracle_verdict(inst).witness
    assert first == oracle_verdict(inst).witness
    assert first == Witness.from_matrix([[0, 1], [1, 0]])


def test_limit_truncates():
    inst = ProblemInstance(2, 2, 1, [[1], [1]], [[1], [1]], default_bounds=VarBounds(0, 1))
    out = enumerate_feasible(inst, limit=1)
    assert len(out.points) == 1 and out.truncated


def test_class_and_forbidden_are_read_from_raw_fields():
    inst = ProblemInstance(1, 2, 2, [[1, 1]], [[1, 1], [1, 1]], col_rel="<=",
                           default_bounds=VarBounds(0, 1), forbidden={(0, 1, 0)},
                           classes=[EqualFlowClass("t", [(0, 0, 0), (0, 0, 1)])])
    points = enumerate_feasible(inst).points
    assert len(points) == 1
    assert points[0].values[ArcIndex(0, 0, 1)] == 1


def test_minimum_of_cost():
    from equalflow.model import Objective
    inst = ProblemInstance(2, 2, 1, [[1], [1]], [[1], [1]], default_bounds=VarBounds(0, 1),
                           objective=Objective({ArcIndex(0, 0, 0): 5, ArcIndex(1, 1, 0): 5,
                                                ArcIndex(0, 1, 0): 1}))
    value, w = oracle_minimum(inst)
    assert value == 1 and w == Witness.from_matrix([[0, 1], [1, 0]])


def test_infeasible_minimum_is_none():
    inst = ProblemInstance(1, 1, 1, [[2]], [[1]], default_bounds=VarBounds(0, 2))
    assert oracle_minimum(inst) == (None, None)
