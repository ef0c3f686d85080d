"""Self-check suites behind ``d2dcache verify``."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .achievability import build_o1, lp_point, min_load_restricted, min_load_uncoded_linear
from .closed_form import (
    d2d_server_identity_check,
    load_large_memory,
    load_small_memory,
    load_threshold,
    load_three_user,
)
from .converse import (
    best_lower_bound,
    gamma,
    level_alphas,
    level_dual_point,
    level_gamma_formula,
    lower_bound_dual,
    lower_bound_primal,
    preset_alphas,
    uniform_alphas,
)
from .core import (
    CacheProfile,
    delivery_feasible,
    members,
    nonempty_subsets,
    placement_feasible,
    threshold_condition,
    validate_profile,
)
from .errors import ProfileError
from .golden import reference_k3, reference_k4
from .lp import verify_certificate
from .simulator import simulate


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""


def random_profile(rng: random.Random, K: int, denom: int = 20,
                   accept: Callable[[CacheProfile], bool] | None = None,
                   tries: int = 10_000) -> CacheProfile:
    """Rejection-sample a valid profile on the 1/denom lattice."""
    for _ in range(tries):
        m = [Fraction(rng.randint(0, denom), denom) for _ in range(K)]
        try:
            p = validate_profile(K, K, m)
        except ProfileError:
            continue
        if accept is None or accept(p):
            return p
    raise RuntimeError("no profile found satisfying the predicate")


def _eq(name: str, got, want) -> Check:
    return Check(name, got == want, f"got {got}, expected {want}")


def suite_examples() -> list[Check]:
    out = []
    for label, ref, want in (("K=3", reference_k3, Fraction(9, 20)),
                             ("K=4", reference_k4, Fraction(21, 20))):
        profile, scheme = ref()
        lp_scheme = min_load_uncoded_linear(profile)
        out.append(_eq(f"{label} LP optimum", lp_scheme.load, want))
        out.append(Check(f"{label} LP witness feasible",
                         bool(placement_feasible(profile, lp_scheme.allocation))
                         and bool(delivery_feasible(lp_scheme.allocation, lp_scheme.plan))))
        lp = build_o1(profile)
        v = verify_certificate(lp, lp_point(lp, scheme), want)
        out.append(Check(f"{label} reference plan optimal", v.ok, "; ".join(v.violations[:3])))
        out.append(_eq(f"{label} best lower bound", best_lower_bound(profile)[0], want))
        rep = simulate(scheme, seed=7, profile=profile)
        out.append(Check(f"{label} reference plan simulates", rep.ok,
                         f"{rep.total_bits} bits at F={rep.F}"))
    p3, _ = reference_k3()
    out.append(_eq("K=3 restricted LP", min_load_restricted(p3), Fraction(9, 20)))
    out.append(_eq("three-user branch 2", load_three_user("0.2", "0.8", "0.9").load, Fraction(9, 10)))
    out.append(_eq("small-memory formula",
                   load_small_memory(validate_profile(4, 4, ["0.05", "0.4", "0.4", "0.4"])).load,
                   Fraction(51, 20)))
    out.append(_eq("large-memory formula",
                   load_large_memory(validate_profile(4, 4, ["0.8", "0.95", "0.95", "0.95"])).load,
                   Fraction(1, 5)))
    out.append(_eq("threshold formula",
                   load_threshold(validate_profile(4, 4, ["0.5", "0.55", "0.6", "0.65"])).load,
                   Fraction(4, 5)))
    return out


def suite_identities(seed: int = 11) -> list[Check]:
    out = []
    for K in (3, 4, 5):
        for t in range(1, K + 1):
            p = validate_profile(K, K, [Fraction(t, K)] * K)
            r = d2d_server_identity_check(p)[0]
            out.append(Check(f"equal caches K={K} m_tot={t}", bool(r.holds),
                             f"D2D {r.d2d} vs server {r.server}"))
    rng = random.Random(seed)
    for n in range(10):
        K = rng.choice((3, 4, 5))
        p = random_profile(rng, K, accept=threshold_condition)
        r = d2d_server_identity_check(p)[1]
        out.append(Check(f"threshold region #{n} K={K}", bool(r.holds),
                         f"m={[str(x) for x in p.m]}: D2D {r.d2d} vs server {r.server}"))
    for i in range(11):
        for j in range(i, 11):
            m = [Fraction(i, 10), Fraction(j, 10), Fraction(1)]
            if sum(m) < 1:
                continue
            r = d2d_server_identity_check(validate_profile(3, 3, m))[2]
            out.append(Check(f"full-cache user m=({i/10:g},{j/10:g},1)", bool(r.holds),
                             f"D2D {r.d2d} vs server {r.server}"))
    return out


def suite_duality(seed: int = 5, count: int = 50) -> list[Check]:
    rng = random.Random(seed)
    out = []
    for n in range(count):
        K = rng.choice((2, 3, 4))
        p = random_profile(rng, K)
        name, alphas = rng.choice(preset_alphas(p))
        dual = lower_bound_dual(p, alphas, name)
        primal = lower_bound_primal(p, alphas)
        out.append(Check(f"duality #{n} K={K} {name}", primal == dual.bound and dual.check(p),
                         f"m={[str(x) for x in p.m]}: primal {primal} dual {dual.bound}"))
    return out


def suite_gamma(max_K: int = 6) -> list[Check]:
    out = []
    for K in range(2, max_K + 1):
        uni = uniform_alphas(K)
        bad = [S for S in nonempty_subsets(K) if 2 <= S.bit_count() <= K - 1
               and gamma(S, uni) != Fraction(K - S.bit_count(), S.bit_count())]
        out.append(Check(f"uniform gamma K={K}", not bad, f"{len(bad)} mismatches"))
        for l in range(1, K - 1):
            lev = level_alphas(K, l)
            table = {S: gamma(S, lev) for S in nonempty_subsets(K)}
            bad = [S for S in table if level_gamma_formula(K, l, S) not in (None, table[S])]
            out.append(Check(f"level-{l} gamma formula K={K}", not bad, f"{len(bad)} mismatches"))
            lam0, lam = level_dual_point(K, l)
            worst = min(lam0 + sum(lam[k - 1] for k in members(S)) + g for S, g in table.items())
            out.append(Check(f"level-{l} dual point K={K}", worst >= 0, f"min slack {worst}"))
    return out


SUITES = {
    "examples": suite_examples,
    "identities": suite_identities,
    "duality": suite_duality,
    "gamma": suite_gamma,
}
