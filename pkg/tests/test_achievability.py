import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from d2dcache.achievability import (
    CONSTRUCTORS,
    auto_scheme,
    build_o1,
    min_load_restricted,
    min_load_uncoded_linear,
    scheme_from_json,
    scheme_large_memory,
    scheme_small_memory,
    scheme_threshold,
    scheme_three_user,
    scheme_to_json,
    three_user_region,
    threshold_params,
)
from d2dcache.closed_form import closed_form_load, load_three_user
from d2dcache.core import (
    delivery_feasible,
    heterogeneity_level,
    placement_feasible,
    threshold_condition,
    validate_profile,
)
from d2dcache.errors import HypothesisViolated, ProfileError, WrongK
from d2dcache.verify import random_profile

from conftest import prof


def _assert_valid(profile, scheme):
    assert placement_feasible(profile, scheme.allocation).ok, placement_feasible(profile, scheme.allocation)
    assert delivery_feasible(scheme.allocation, scheme.plan).ok
    assert sum(scheme.allocation.a.values()) == 1


lattice3 = st.tuples(*[st.integers(0, 20)] * 3).filter(lambda xs: sum(xs) >= 20)


@given(lattice3)
def test_three_user_scheme_matches_lp(xs):
    p = validate_profile(3, 3, [F(x, 20) for x in xs])
    s = scheme_three_user(p)
    _assert_valid(p, s)
    assert s.load == min_load_uncoded_linear(p).load == load_three_user(*p.m).load


def test_reference_optima():
    assert min_load_uncoded_linear(prof("0.6", "0.7", "0.8")).load == F(9, 20)
    assert min_load_uncoded_linear(prof("0.2", "0.7", "0.7", "0.7")).load == F(21, 20)


def test_lp_witness_is_feasible_and_tight():
    p = prof("0.1", "0.3", "0.6", "0.9")
    s = min_load_uncoded_linear(p)
    _assert_valid(p, s)
    for rule in ("bland", "dantzig"):
        assert min_load_uncoded_linear(p, rule=rule).load == s.load


def test_assignment_sums_match_allocation_in_witness():
    p = prof("0.6", "0.7", "0.8")
    s = min_load_uncoded_linear(p)
    for j in range(1, 4):
        for (S, jj, T), x in s.plan.u.items():
            assert x <= s.allocation[S]


@given(lattice3, st.integers(0, 2), st.integers(1, 4))
def test_more_cache_never_hurts(xs, k, dx):
    m = [F(x, 20) for x in xs]
    bigger = list(m)
    bigger[k] = min(F(1), bigger[k] + F(dx, 20))
    lo = min_load_uncoded_linear(validate_profile(3, 3, bigger)).load
    assert lo <= min_load_uncoded_linear(validate_profile(3, 3, m)).load


@pytest.mark.parametrize("K", [3, 4])
def test_restricted_equals_equal_cache_curve(K):
    for t in range(1, K + 1):
        p = validate_profile(K, K, [F(t, K)] * K)
        assert min_load_restricted(p) == F(K - t, t)


def test_restricted_three_user_reference():
    assert min_load_restricted(prof("0.6", "0.7", "0.8")) == F(9, 20)


@given(lattice3)
def test_restricted_never_beats_full_lp(xs):
    p = validate_profile(3, 3, [F(x, 20) for x in xs])
    assert min_load_restricted(p) >= min_load_uncoded_linear(p).load


def test_restricted_lp_has_fewer_variables():
    p = prof("0.2", "0.7", "0.7", "0.7")
    assert build_o1(p, restricted=True).num_variables < build_o1(p).num_variables


def test_threshold_scheme_on_random_profiles():
    rng = random.Random(3)
    for _ in range(6):
        K = rng.choice((4, 5))
        p = random_profile(rng, K, accept=threshold_condition)
        s = scheme_threshold(p)
        _assert_valid(p, s)
        assert s.load == min_load_uncoded_linear(p).load


def test_threshold_rho_choices():
    p = prof("0.5", "0.55", "0.6", "0.65")
    t, params = threshold_params(p)
    assert t == 2 and sum(params.rho) == 1
    uniform_eta = scheme_threshold(p)
    assert uniform_eta.load == F(4, 5)
    with pytest.raises(ValueError):
        scheme_threshold(p, rho=(1, 0, 0, 0))


def test_threshold_hypothesis_boundary():
    # (K-2) m_1 = sum_{k>=2} m_k - 1 holds with equality here
    p = prof("0.3", "0.4", "0.4", "0.8")
    assert threshold_condition(p)
    _assert_valid(p, scheme_threshold(p))
    with pytest.raises(HypothesisViolated):
        scheme_threshold(prof("0.29", "0.4", "0.4", "0.8"))


def test_small_memory_scheme():
    rng = random.Random(8)
    for _ in range(5):
        K = rng.choice((4, 5))
        p = random_profile(rng, K, accept=lambda q: q.total <= 2 and heterogeneity_level(q) >= 1)
        s = scheme_small_memory(p)
        _assert_valid(p, s)
        assert s.load == min_load_uncoded_linear(p).load
    with pytest.raises(HypothesisViolated):
        scheme_small_memory(prof("0.5", "0.5", "0.5", "0.5"))


def test_large_memory_scheme():
    p = prof("0.8", "0.95", "0.95", "0.95")
    s = scheme_large_memory(p)
    _assert_valid(p, s)
    assert s.load == F(1, 5) == min_load_uncoded_linear(p).load
    with pytest.raises(HypothesisViolated):
        scheme_large_memory(prof("0.1", "0.2", "0.3", "0.9"))


def test_three_user_regions():
    assert three_user_region(F(3, 5), F(7, 10), F(4, 5)) == "III"
    assert three_user_region(F(1, 10), F(1, 2), F(7, 10)) == "II"
    assert three_user_region(F(1, 2), F(1, 2), F(1, 2)) == "I"
    assert three_user_region(F(1, 5), F(9, 10), F(19, 20)) == "IV"
    with pytest.raises(WrongK):
        scheme_three_user(prof("0.5", "0.5", "0.5", "0.5"))


def test_auto_scheme_and_json_roundtrip():
    for m in (("0.6", "0.7", "0.8"), ("0.05", "0.4", "0.4", "0.4"),
              ("0.2", "0.7", "0.7", "0.7"), ("0.8", "0.95", "0.95", "0.95")):
        p = prof(*m)
        s = auto_scheme(p)
        _assert_valid(p, s)
        back = scheme_from_json(scheme_to_json(s, p))
        assert back == s
        cf = closed_form_load(p)
        if cf is not None:
            assert cf.load == s.load


def test_constructor_table_covers_cli_names():
    assert set(CONSTRUCTORS) == {"threshold", "small", "large", "three-user", "lp"}


def test_two_users_use_the_lp():
    p = prof("0.5", "0.5")
    assert auto_scheme(p).load == 1
    assert auto_scheme(prof("0.3", "0.9")).load == F(4, 5)
    with pytest.raises(ProfileError):
        prof("0.2", "0.2")
