import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from d2dcache.achievability import min_load_uncoded_linear
from d2dcache.converse import (
    MAX_K,
    AlphaWeights,
    alphas_from_json,
    alphas_to_json,
    ascending_alphas,
    best_lower_bound,
    bound_table,
    certificate_from_json,
    certificate_to_json,
    cutset_bound,
    gamma,
    level_alphas,
    level_dual_point,
    level_gamma_formula,
    lower_bound_dual,
    lower_bound_primal,
    preset_alphas,
    uniform_alphas,
)
from d2dcache.core import full_set, mask_of, nonempty_subsets, validate_profile
from d2dcache.errors import EmptySet, MaxKExceeded
from d2dcache.verify import random_profile

from conftest import prof


def test_preset_names():
    assert [n for n, _ in preset_alphas(3)] == ["uniform", "level-1", "ascending"]
    assert [n for n, _ in preset_alphas(5)] == ["uniform", "level-1", "level-2", "level-3"]
    assert [n for n, _ in preset_alphas(2)] == ["uniform"]


def test_weights_are_validated():
    with pytest.raises(ValueError):
        AlphaWeights.from_maps(3, {1: {(2, 3): F(1, 2)}, 2: {(1, 3): 1}, 3: {(1, 2): 1}})
    with pytest.raises(ValueError):
        AlphaWeights.from_maps(3, {1: {(1, 3): 1}, 2: {(1, 3): 1}, 3: {(1, 2): 1}})
    with pytest.raises(MaxKExceeded):
        uniform_alphas(MAX_K + 1)


@pytest.mark.parametrize("K", range(2, 7))
def test_uniform_gamma(K):
    a = uniform_alphas(K)
    for S in nonempty_subsets(K):
        n = S.bit_count()
        assert gamma(S, a) == F(K - n, n) if 2 <= n else gamma(S, a) == K - 1


def test_gamma_edges():
    a = ascending_alphas(3)
    assert gamma(full_set(3), a) == 0
    assert gamma(mask_of({2}), a) == 2
    assert gamma(mask_of({2, 3}), a) == 1
    assert gamma(mask_of({1, 2}), a) == 0
    with pytest.raises(EmptySet):
        gamma(0, a)


@pytest.mark.parametrize("K", range(3, 7))
def test_level_gamma_formula_and_dual_point(K):
    for l in range(1, K - 1):
        a = level_alphas(K, l)
        lam0, lam = level_dual_point(K, l)
        for S in nonempty_subsets(K):
            g = gamma(S, a)
            want = level_gamma_formula(K, l, S)
            assert want is None or want == g
            assert lam0 + sum(lam[k - 1] for k in range(1, K + 1) if S >> (k - 1) & 1) + g >= 0


def test_reference_bounds():
    assert best_lower_bound(prof("0.6", "0.7", "0.8"))[0] == F(9, 20)
    assert best_lower_bound(prof("0.2", "0.7", "0.7", "0.7"))[0] == F(21, 20)
    bound, cert = best_lower_bound(prof("0.2", "0.8", "0.9"))
    assert bound == F(9, 10) and cert.preset == "ascending"


def test_certificate_checks_and_roundtrip():
    p = prof("0.1", "0.4", "0.5", "0.6")
    _, cert = best_lower_bound(p)
    assert cert.check(p)
    back = certificate_from_json(certificate_to_json(cert))
    assert back.check(p) and back.bound == cert.bound
    tampered = type(cert)(cert.alphas, cert.lambda0 - 1, cert.lam, cert.gamma, cert.bound)
    assert not tampered.check(p)


def test_alphas_json_roundtrip():
    a = level_alphas(5, 2)
    assert alphas_from_json(5, alphas_to_json(a)) == a


def test_strong_duality_random():
    rng = random.Random(21)
    for _ in range(15):
        K = rng.choice((2, 3, 4))
        p = random_profile(rng, K)
        for name, a in preset_alphas(p):
            assert lower_bound_primal(p, a) == lower_bound_dual(p, a, name).bound


lattice3 = st.tuples(*[st.integers(0, 10)] * 3).filter(lambda xs: sum(xs) >= 10)


@given(lattice3)
def test_bounds_sandwich_the_lp(xs):
    p = validate_profile(3, 3, [F(x, 10) for x in xs])
    o1 = min_load_uncoded_linear(p).load
    for _, b in bound_table(p):
        assert cutset_bound(p) <= o1
        assert b <= o1


def test_refinement_is_sound_and_not_worse():
    p = prof("0.32", "0.4", "0.56", "0.8")
    base, _ = best_lower_bound(p)
    refined, cert = best_lower_bound(p, refine=True, rounds=2)
    assert base <= refined <= min_load_uncoded_linear(p).load
    assert cert.check(p)


def test_cutset():
    assert cutset_bound(prof("0.2", "0.7", "0.7", "0.7")) == F(4, 5)
