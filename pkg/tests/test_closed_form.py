from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from d2dcache.achievability import min_load_uncoded_linear
from d2dcache.closed_form import (
    closed_form_load,
    d2d_equal_curve,
    d2d_server_identity_check,
    load_equal,
    load_large_memory,
    load_small_memory,
    load_threshold,
    load_three_user,
    server_load_equal,
    small_memory_formula,
)
from d2dcache.errors import HypothesisViolated, InsufficientTotalCache, Unsorted

from conftest import prof


@pytest.mark.parametrize("K", [3, 4, 5])
def test_equal_curve_corners(K):
    for t in range(1, K + 1):
        assert d2d_equal_curve(K, F(t)) == F(K - t, t)
        assert load_equal(K, F(t, K)).load == F(K - t, t)


def test_equal_curve_interpolates():
    assert d2d_equal_curve(4, F(3, 2)) == F(2)
    assert load_equal(4, F(3, 8)).load == F(2)
    with pytest.raises(HypothesisViolated):
        load_equal(4, F(1, 5))


def test_threshold_formula():
    assert load_threshold(prof("0.5", "0.55", "0.6", "0.65")).load == F(4, 5)
    with pytest.raises(HypothesisViolated):
        load_threshold(prof("0.2", "0.7", "0.7", "0.7"))
    assert not load_threshold(prof("0.2", "0.7", "0.7", "0.7"), strict=False).hypothesis_ok


def test_small_memory_formula():
    r = load_small_memory(prof("0.05", "0.4", "0.4", "0.4"))
    assert r.load == F(51, 20) and r.detail == "l=1"
    with pytest.raises(HypothesisViolated):
        load_small_memory(prof("0.5", "0.6", "0.7", "0.8"))


@pytest.mark.parametrize("m", [("0.1", "0.4", "0.4", "0.4"), ("0.2", "0.2", "0.5", "0.7")])
def test_small_memory_meets_threshold_on_the_boundary(m):
    p = prof(*m)
    assert small_memory_formula(p, 1) == load_threshold(p).load


def test_large_memory_formula():
    assert load_large_memory(prof("0.8", "0.95", "0.95", "0.95")).load == F(1, 5)
    # equality in the threshold condition sits outside the strict hypothesis
    with pytest.raises(HypothesisViolated):
        load_large_memory(prof("0.9", "0.9", "0.9", "0.9"))


def test_three_user_examples():
    assert load_three_user("0.6", "0.7", "0.8").load == F(9, 20)
    r = load_three_user("0.2", "0.8", "0.9")
    assert r.load == F(9, 10) and r.detail == "branch=2"
    assert load_three_user(1, 1, 1).load == 0
    with pytest.raises(Unsorted):
        load_three_user("0.8", "0.7", "0.6")
    with pytest.raises(InsufficientTotalCache):
        load_three_user("0.1", "0.2", "0.3")


@given(st.tuples(*[st.integers(0, 40)] * 3).filter(lambda xs: sum(xs) >= 40), st.integers(0, 2))
def test_three_user_is_continuous(xs, k):
    m = sorted(F(x, 40) for x in xs)
    a = load_three_user(*m).load
    m2 = list(m)
    m2[k] += F(1, 10**6)
    if m2[k] <= 1 and m2 == sorted(m2):
        assert abs(load_three_user(*m2).load - a) <= F(4, 10**6)


def test_closed_form_dispatch():
    assert closed_form_load(prof("0.6", "0.7", "0.8")).theorem == "Thm7"
    assert closed_form_load(prof("0.5", "0.55", "0.6", "0.65")).theorem == "Thm4"
    assert closed_form_load(prof("0.05", "0.4", "0.4", "0.4")).theorem == "Thm5"
    assert closed_form_load(prof("0.8", "0.95", "0.95", "0.95")).theorem == "Thm6"
    assert closed_form_load(prof("0.2", "0.7", "0.7", "0.7")) is None
    assert closed_form_load(prof("0.5", "0.5")) is None


def test_server_curve():
    assert server_load_equal(3, F(1, 3)) == 1
    assert server_load_equal(3, 1) == 0
    assert server_load_equal(2, 0) == 2


def test_identities():
    p = prof("0.5", "0.5", "0.5", "0.5")
    eq, thr, full = d2d_server_identity_check(p)
    assert eq.holds and thr.holds and full.holds is None
    r = d2d_server_identity_check(prof("0.3", "0.6", "1"))[2]
    assert r.applies and r.holds and r.d2d == F(1, 1) * max(2 - F(6, 10) - F(6, 10), F(7, 10))


def test_identity_with_supplied_load():
    r = d2d_server_identity_check(prof("0.5", "0.5", "0.5"), d2d_load=lambda p: F(0))[0]
    assert r.applies and not r.holds


def test_closed_forms_agree_with_lp_on_examples():
    for m in (("0.5", "0.55", "0.6", "0.65"), ("0.05", "0.4", "0.4", "0.4"),
              ("0.8", "0.95", "0.95", "0.95"), ("0.1", "0.3", "0.9")):
        p = prof(*m)
        assert closed_form_load(p).load == min_load_uncoded_linear(p).load
