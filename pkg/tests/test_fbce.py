import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from equalflow import fbce
from equalflow.fbce import ConstraintSystem, LinearConstraint as C
from equalflow.generate import oracle_corpus, random_binary_system, same_route_instance
from equalflow.model import EqualFlowClass, ProblemInstance, validate_witness
from equalflow.oracle import enumerate_feasible, oracle_verdict
from equalflow.reform import class_var, contract_classes


def system(*constraints, variables=None):
    names = variables or sorted({v for c in constraints for v in c.coeffs})
    return ConstraintSystem.from_constraints(names, constraints)


def rows_as_text(s):
    return sorted(str(r) for r in s.rows)


def test_equalities_become_two_rows():
    s = system(C({"x": 1, "y": 1}, "=", 1))
    assert rows_as_text(s) == ["-1*x + -1*y <= -1", "1*x + 1*y <= 1"]


def test_rows_are_normalized_to_primitive_integers():
    s = system(C({"x": Fraction(1, 2), "y": 1}, "<=", Fraction(3, 4)))
    assert rows_as_text(s) == ["1*x + 2*y <= 3/2"]


def test_undeclared_variable_is_rejected():
    with pytest.raises(ValueError):
        ConstraintSystem.from_constraints(["x"], [C({"y": 1}, "<=", 0)])


def test_eliminate_contradiction():
    out = fbce.eliminate(system(C({"x": 1}, ">=", 1), C({"x": 1}, "<=", 0)), "x")
    bad = out.contradiction()
    assert bad is not None and bad.rhs == -1
    assert out.variables == ()


def test_eliminate_absorbs_coupling():
    s = system(C({"x": 1}, ">=", 0), C({"x": 1}, "<=", 1), C({"x": 1, "y": 1}, ">=", 1),
               C({"y": 1}, ">=", 0), C({"y": 1}, "<=", 1))
    out = fbce.eliminate(s, "x")
    assert out.variables == ("y",)
    assert rows_as_text(out) == ["-1*y <= 0", "1*y <= 1"]


def test_eliminate_unknown_variable():
    with pytest.raises(ValueError):
        fbce.eliminate(system(C({"x": 1}, "<=", 1)), "z")


def _lifts(before, var, point):
    """Is there a rational value of ``var`` completing ``point`` in ``before``?"""
    lo, hi = None, None
    for r in before.rows:
        a = r.coeff(var)
        rest = r.rhs - sum(c * point[v] for v, c in r.coeffs if v != var)
        if a == 0:
            if rest < 0:
                return False
        elif a > 0:
            hi = rest / a if hi is None else min(hi, rest / a)
        else:
            lo = rest / a if lo is None else max(lo, rest / a)
    return lo is None or hi is None or lo <= hi


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_random_six_variable_projection(seed):
    rng = random.Random(seed)
    s = random_binary_system(rng, 6, rng.randint(3, 9))
    names = list(s.variables)
    out = fbce.eliminate(s, names[0])
    rest = names[1:]
    # integer soundness: every 0/1 point of the input projects into the output
    for bits in itertools.product((0, 1), repeat=6):
        point = dict(zip(names, bits))
        if s.satisfied_by(point):
            assert out.satisfied_by(point)
    # sampled lifts: rational points of the projection extend back
    for _ in range(200):
        point = {v: Fraction(rng.randint(-2, 6), 4) for v in rest}
        assert out.satisfied_by(point) == _lifts(s, names[0], point)


def test_prune_keeps_stronger_parallel_row():
    s = fbce.dominance_prune(system(C({"x": 1, "y": 1}, ">=", 1), C({"x": 1, "y": 1}, ">=", 0)))
    assert rows_as_text(s) == ["-1*x + -1*y <= -1"]


def test_prune_drops_superset_covering_row():
    s = system(C({"x": 1}, ">=", 1), C({"x": 1, "y": 1}, ">=", 1),
               C({"x": 1}, ">=", 0), C({"y": 1}, ">=", 0))
    assert rows_as_text(fbce.dominance_prune(s)) == ["-1*x <= -1", "-1*y <= 0"]


def test_prune_empty_system():
    assert fbce.dominance_prune(system(variables=["x"])).rows == ()


def test_prune_keeps_one_of_a_mutually_implying_pair():
    # x <= 0 and 2x <= 0 imply each other and normalize to the same row
    s = fbce.dominance_prune(system(C({"x": 1}, "<=", 0), C({"x": 2}, "<=", 0)))
    assert rows_as_text(s) == ["1*x <= 0"]


def test_prune_reports_single_contradiction():
    s = system(C({}, "<=", -1), C({}, "<=", -3), C({"x": 1}, "<=", 1), variables=["x"])
    out = fbce.dominance_prune(s)
    assert [r.rhs for r in out.rows] == [-3]


def test_project_keep_all_is_identity():
    s = system(C({"x": 1, "y": -1}, "<=", 0), C({"x": 1}, ">=", 0), C({"y": 1}, "<=", 3))
    proj = fbce.project(s, ["x", "y"])
    assert rows_as_text(proj.system) == rows_as_text(s)
    assert proj.trace[-1].step == 0


def test_project_keep_nothing_on_feasible_system():
    s = system(C({"x": 1, "y": 1}, "<=", 2), C({"x": 1}, ">=", 0), C({"y": 1}, ">=", 0))
    proj = fbce.project(s, [])
    assert proj.system.rows == () and proj.system.variables == ()


def test_projection_onto_class_variables_is_sound():
    rng = random.Random(11)
    inst = same_route_instance(rng, (2, 2, 2), class_density=1.0, forbidden_density=0.0)
    con = contract_classes(inst)
    keep = [class_var(c.id) for c in inst.classes]
    proj = fbce.project(con.system, keep)
    feasible = enumerate_feasible(inst).points
    assert feasible, "corpus seed should give a feasible instance"
    for w in feasible:
        point = con.restrict(w)
        assert proj.system.satisfied_by({v: point[v] for v in keep})


def test_certify_two_row_contradiction():
    s = system(C({"x": 1}, ">=", 1), C({"x": 1}, "<=", 0))
    cert = fbce.certify(s)
    assert cert.is_infeasible
    ref = cert.refutation
    assert len(ref.parents) == 2
    coeffs, rhs = fbce.replay(s, {(k, side): m for k, side, m in ref.combination})
    assert coeffs == {} and rhs == ref.rhs == -1


def test_certify_balanced_transportation_is_not_infeasible():
    inst = ProblemInstance(2, 2, 1, [[3], [2]], [[2], [3]])
    cert = fbce.certify(contract_classes(inst).system)
    assert not cert.is_infeasible


def test_certify_integer_gap_is_unknown():
    # a class spanning both columns of one row forces 2c = 1: rationally fine,
    # integer-empty (the oracle agrees)
    inst = ProblemInstance(1, 2, 1, [[1]], [[1], [1]], col_rel="<=",
                           classes=[EqualFlowClass("t", [(0, 0, 0), (0, 1, 0)])])
    assert oracle_verdict(inst).is_infeasible
    cert = fbce.certify(contract_classes(inst).system)
    assert cert.is_unknown
    assert "rationally feasible" in cert.reason


def test_certify_returns_checked_witness():
    s = system(C({"x": 1, "y": 1}, "=", 3), C({"x": 1}, ">=", 0), C({"y": 1}, ">=", 0),
               C({"x": 1}, "<=", 2), C({"y": 1}, "<=", 2))
    cert = fbce.certify(s)
    assert cert.is_feasible
    assert all(c.holds(cert.witness.values) for c in s.inputs)


def test_certify_row_limit_gives_unknown():
    rng = random.Random(3)
    s = random_binary_system(rng, 8, 14)
    cert = fbce.certify(s, max_rows=1)
    assert cert.is_unknown and "limit" in cert.reason


def test_trace_line_format():
    lines = []
    fbce.certify(system(C({"x": 1}, ">=", 1), C({"x": 1}, "<=", 0)),
                 on_step=lambda s: lines.append(str(s)))
    assert lines == ["step 1: eliminated x, constraints 2 → 1"]


def test_growth_report_single_variable():
    s = system(C({"x": 1}, ">=", 0), C({"x": 1}, "<=", 3), C({"x": 1}, "<=", 5))
    _, proj = fbce.certify(s, return_projection=True)
    counts = fbce.constraint_growth_report(proj.trace).counts
    assert len(counts) == 2 and counts[1] <= counts[0]


def test_growth_report_eight_binary_variables():
    rng = random.Random(8)
    s = random_binary_system(rng, 8, 12)
    _, proj = fbce.certify(s, return_projection=True)
    report = fbce.constraint_growth_report(proj.trace)
    assert report.live_variables[0] == 8
    assert all(c <= 2 ** 8 for c in report.counts)
    assert report.within_binary_bound()


def test_growth_report_empty():
    assert fbce.constraint_growth_report(()).counts == (0,)


def test_bound_constraints_skip_missing_sides():
    cons = fbce.bound_constraints({"x": (0, None), "y": (None, 2)})
    assert [str(c) for c in cons] == ["1*x >= 0", "1*y <= 2"]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_prune_preserves_solution_set(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 6)
    s = random_binary_system(rng, n, rng.randint(2, 10))
    names = list(s.variables)
    pruned = fbce.dominance_prune(s)
    for _ in range(300):
        point = {v: Fraction(rng.randint(-4, 8), rng.randint(1, 4)) for v in names}
        assert s.satisfied_by(point) == pruned.satisfied_by(point)
    for bits in itertools.product((-1, 0, 1, 2), repeat=n):
        point = dict(zip(names, bits))
        assert s.satisfied_by(point) == pruned.satisfied_by(point)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 16))
def test_certify_is_sound_and_refutations_replay(seed):
    for inst in oracle_corpus(seed, 3, max_variables=10, max_points=2 ** 14):
        con = contract_classes(inst)
        if con.infeasible_by_construction:
            continue
        cert = fbce.certify(con.system)
        truth = oracle_verdict(inst)
        if cert.is_infeasible:
            assert truth.is_infeasible
            combo = {(k, side): m for k, side, m in cert.refutation.combination}
            assert all(m >= 0 for m in combo.values())
            coeffs, rhs = fbce.replay(con.system, combo)
            assert coeffs == {} and rhs == cert.refutation.rhs < 0
        if cert.is_feasible:
            assert truth.is_feasible
            assert validate_witness(inst, con.expand(cert.witness.values))


def test_prune_drops_row_implied_by_a_combination():
    # v >= 0 follows from u <= 1 and u + 2v >= 1; no single row implies it
    s = system(C({"u": 1}, ">=", 0), C({"u": 1}, "<=", 1), C({"v": 1}, "<=", 1),
               C({"u": 1, "v": 2}, ">=", 1), C({"v": 1}, ">=", 0))
    assert "-1*v <= 0" not in rows_as_text(fbce.dominance_prune(s))


def test_prune_keeps_every_edge_of_a_pentagon():
    s = system(C({"x": 1}, ">=", 0), C({"x": 1}, "<=", 1), C({"y": 1}, ">=", 0),
               C({"y": 1}, "<=", 1), C({"x": 1, "y": 1}, "<=", Fraction(3, 2)))
    assert len(fbce.dominance_prune(s).rows) == 5


def test_prune_shrinks_an_empty_system_to_a_small_core():
    s = system(C({"x": 1}, ">=", 0), C({"y": 1}, ">=", 0), C({"x": 1}, "<=", 1),
               C({"y": 1}, "<=", 1), C({"x": 1, "y": 1}, ">=", 3))
    pruned = fbce.dominance_prune(s)
    assert len(pruned.rows) <= 3
    assert fbce.certify(pruned).is_infeasible
