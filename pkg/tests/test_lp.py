from fractions import Fraction as F
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from d2dcache.achievability import build_o1, lp_point
from d2dcache.converse import build_dual, gamma_table, uniform_alphas
from d2dcache.errors import MalformedLP
from d2dcache.golden import reference_k3, reference_k4
from d2dcache.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, solve, verify_certificate

RULES = ("bland", "dantzig")


@pytest.mark.parametrize("rule", RULES)
def test_small_max(rule):
    lp = LinearProgram("max")
    lp.add_variable("x", cost=3)
    lp.add_variable("y", cost=2)
    lp.add_constraint({"x": 1, "y": 1}, "<=", 4)
    lp.add_constraint({"x": 1, "y": 3}, "<=", 6)
    lp.add_constraint({"x": 1}, "<=", 3)
    sol = solve(lp, rule=rule)
    assert sol.status == OPTIMAL and sol.value == 11
    assert sol.point == {"x": 3, "y": 1}


def test_equality_and_free_variable():
    lp = LinearProgram("min")
    lp.add_variable("z", lower=None, cost=1)
    lp.add_variable("w", cost=1)
    lp.add_constraint({"z": 1, "w": 1}, "==", F(1, 3))
    lp.add_constraint({"z": 1}, ">=", F(-2, 7))
    sol = solve(lp)
    assert sol.value == F(1, 3)
    assert verify_certificate(lp, sol.point, F(1, 3))


def test_upper_bounds_are_honoured():
    lp = LinearProgram("max")
    lp.add_variable("x", upper=F(5, 2), cost=1)
    assert solve(lp).value == F(5, 2)


def test_infeasible_and_unbounded():
    lp = LinearProgram()
    lp.add_variable("x")
    lp.add_constraint({"x": 1}, "<=", -1)
    assert solve(lp).status == INFEASIBLE
    lp = LinearProgram("max")
    lp.add_variable("x", cost=1)
    lp.add_constraint({"x": 1}, ">=", 1)
    assert solve(lp).status == UNBOUNDED


def test_malformed_inputs():
    lp = LinearProgram()
    lp.add_variable("x")
    with pytest.raises(MalformedLP):
        lp.add_variable("x")
    with pytest.raises(MalformedLP):
        lp.add_constraint({"y": 1}, "<=", 0)
    with pytest.raises(MalformedLP):
        lp.add_constraint({"x": 1}, "<", 0)
    with pytest.raises(MalformedLP):
        solve(lp, rule="steepest")


def _vertex_optimum(c, A, b):
    """Brute force: max c.x over Ax <= b, x >= 0 with two variables."""
    rows = [(a, bi) for a, bi in zip(A, b)] + [((-1, 0), 0), ((0, -1), 0)]
    best = None
    for (a1, b1), (a2, b2) in combinations(rows, 2):
        det = F(a1[0] * a2[1] - a1[1] * a2[0])
        if det == 0:
            continue
        x = (b1 * a2[1] - b2 * a1[1]) / det
        y = (a1[0] * b2 - a2[0] * b1) / det
        if all(r[0] * x + r[1] * y <= rb for r, rb in rows):
            val = c[0] * x + c[1] * y
            best = val if best is None else max(best, val)
    return best


small = st.integers(-4, 6)


@given(c=st.tuples(small, small),
       A=st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=2, max_size=4),
       b=st.lists(st.integers(1, 9), min_size=4, max_size=4))
def test_matches_vertex_enumeration_on_bounded_polytopes(c, A, b):
    A = [*A, (1, 1)]             # keeps the region bounded
    b = b[:len(A) - 1] + [10]
    b += [10] * (len(A) - len(b))
    want = _vertex_optimum(c, A, b)
    for rule in RULES:
        lp = LinearProgram("max")
        lp.add_variable("x", cost=c[0])
        lp.add_variable("y", cost=c[1])
        for a, bi in zip(A, b):
            lp.add_constraint({"x": a[0], "y": a[1]}, "<=", bi)
        sol = solve(lp, rule=rule)
        assert sol.value == want
        assert verify_certificate(lp, sol.point, want)


@given(st.integers(1, 9))
def test_objective_scaling(k):
    lp = build_o1(reference_k3()[0])
    base = solve(lp).value
    for v, c in list(lp.objective.items()):
        lp.set_cost(v, c * k)
    assert solve(lp).value == base * k


def test_reference_plans_are_certified_optimal():
    for ref, want in ((reference_k3, F(9, 20)), (reference_k4, F(21, 20))):
        profile, scheme = ref()
        lp = build_o1(profile)
        assert verify_certificate(lp, lp_point(lp, scheme), want)


def test_perturbed_plan_is_rejected():
    profile, scheme = reference_k3()
    lp = build_o1(profile)
    point = lp_point(lp, scheme)
    key = next(v for v in point if v[0] == "v" and point[v] > 0)
    point[key] -= F(1, 100)
    v = verify_certificate(lp, point)
    assert not v and v.violations
    assert not verify_certificate(lp, lp_point(lp, scheme), F(2, 5))


def test_missing_variable_is_reported():
    lp = build_o1(reference_k3()[0])
    assert not verify_certificate(lp, {})


@pytest.mark.parametrize("lam0,lam,value", [
    (F(-7, 2), (F(3, 2),) * 3, F(7, 20)),
    (F(-3, 2), (F(1, 2),) * 3, F(9, 20)),
])
def test_uniform_dual_points_for_three_users(lam0, lam, value):
    profile, _ = reference_k3()
    dual = build_dual(profile, gamma_table(uniform_alphas(3)))
    point = {"lambda0": lam0, **{("lambda", k): lam[k - 1] for k in (1, 2, 3)}}
    assert verify_certificate(dual, point)
    assert dual.objective_value(point) == value


def test_uniform_dual_value_at_reference_profile():
    profile, _ = reference_k3()
    sol = solve(build_dual(profile, gamma_table(uniform_alphas(3))))
    assert sol.value == F(9, 20)


def test_text_dump_lists_every_row():
    lp = build_o1(reference_k3()[0])
    text = lp.to_text()
    assert text.count("\n") >= len(lp.constraints) + lp.num_variables
