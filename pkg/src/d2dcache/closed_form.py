"""Closed-form trade-offs for the regions where the LP optimum is known
explicitly, plus the D2D-versus-server identities."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import (
    ZERO,
    CacheProfile,
    as_fraction,
    heterogeneity_level,
    memory_level,
    threshold_condition,
)
from .errors import HypothesisViolated, InsufficientTotalCache, Unsorted


@dataclass(frozen=True)
class TradeoffPoint:
    load: Fraction
    theorem: str
    hypothesis_ok: bool
    detail: str = ""


def _corner(K: int, t: int) -> Fraction:
    return Fraction(K - t, t)


def d2d_equal_curve(K: int, total: Fraction) -> Fraction:
    """Lower convex envelope of the corners ((K-t)/t at total t), t in [K]."""
    t = memory_level(K, total)
    lo, hi = _corner(K, t), _corner(K, t + 1)
    return lo + (total - t) * (hi - lo)


def load_equal(K: int, m) -> TradeoffPoint:
    m = as_fraction(m)
    if not ZERO <= m <= 1 or K * m < 1 or K < 2:
        raise HypothesisViolated(f"equal caches need 0 <= m <= 1 and K m >= 1 (K={K}, m={m})")
    return TradeoffPoint(d2d_equal_curve(K, K * m), "Thm3", True, f"t={memory_level(K, K * m)}")


def _point_or_raise(load, theorem, ok, why, strict, detail=""):
    if not ok and strict:
        raise HypothesisViolated(why)
    return TradeoffPoint(load, theorem, ok, detail)


def load_threshold(profile: CacheProfile, strict: bool = True) -> TradeoffPoint:
    ok = profile.K >= 3 and threshold_condition(profile)
    why = (f"(K-2) m_1 = {(profile.K - 2) * profile.m[0]} < "
           f"sum_(k>=2) m_k - 1 = {profile.tail(2) - 1}")
    t = memory_level(profile.K, profile.total)
    return _point_or_raise(d2d_equal_curve(profile.K, profile.total), "Thm4", ok, why, strict,
                           f"t={t}")


def small_memory_formula(profile: CacheProfile, l: int) -> Fraction:
    K, m = profile.K, profile.m
    head = sum(((K - i) * m[i - 1] for i in range(1, l + 1)), ZERO)
    return Fraction(3 * K - l - 2, 2) - head - Fraction(K - l, 2) * profile.tail(l + 1)


def load_small_memory(profile: CacheProfile, strict: bool = True) -> TradeoffPoint:
    K, s = profile.K, profile.total
    if K < 3 or not 1 <= s <= 2:
        return _point_or_raise(None, "Thm5", False, f"needs K >= 3 and 1 <= sum m <= 2 (sum={s})",
                               strict)
    l = heterogeneity_level(profile)
    if l == 0:
        return _point_or_raise(None, "Thm5", False,
                               "level l = 0: the threshold formula (load_threshold) applies", strict)
    return TradeoffPoint(small_memory_formula(profile, l), "Thm5", True, f"l={l}")


def large_memory_hypothesis(profile: CacheProfile) -> bool:
    K = profile.K
    return K >= 3 and profile.total >= K - 1 and (K - 2) * profile.m[0] < profile.tail(2) - 1


def load_large_memory(profile: CacheProfile, strict: bool = True) -> TradeoffPoint:
    ok = large_memory_hypothesis(profile)
    why = f"needs sum m >= K-1 and m_1 < (sum_(i>=2) m_i - 1)/(K-2) (m={list(map(str, profile.m))})"
    return _point_or_raise(1 - profile.m[0], "Thm6", ok, why, strict)


def three_user_branches(m1, m2, m3) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    s = m1 + m2 + m3
    return (Fraction(7, 2) - Fraction(3, 2) * s, 3 - 2 * m1 - m2 - m3, (3 - s) / 2, 1 - m1)


def load_three_user(m1, m2, m3) -> TradeoffPoint:
    m1, m2, m3 = (as_fraction(x) for x in (m1, m2, m3))
    if not m1 <= m2 <= m3:
        raise Unsorted(f"expected m1 <= m2 <= m3, got {m1}, {m2}, {m3}")
    if m1 + m2 + m3 < 1:
        raise InsufficientTotalCache(f"m1 + m2 + m3 = {m1 + m2 + m3} < 1")
    branches = three_user_branches(m1, m2, m3)
    best = max(branches)
    return TradeoffPoint(max(best, ZERO), "Thm7", True, f"branch={branches.index(best) + 1}")


def closed_form_load(profile: CacheProfile) -> TradeoffPoint | None:
    """First applicable closed form, or None outside every theorem."""
    K = profile.K
    if K == 3:
        return load_three_user(*profile.m)
    if K < 3:
        return None
    for f in (load_threshold, load_small_memory, load_large_memory):
        p = f(profile, strict=False)
        if p.hypothesis_ok:
            return p
    return None


# ---------------------------------------------------------------------------
# Server comparison
# ---------------------------------------------------------------------------

def server_load_equal(K: int, m) -> Fraction:
    """Uncoded-placement server trade-off for K users with equal caches."""
    m = as_fraction(m)
    if not ZERO <= m <= 1:
        raise ValueError(f"m={m} outside [0, 1]")
    x = K * m
    t = min(int(x), K - 1)
    lo, hi = Fraction(K - t, t + 1), Fraction(K - t - 1, t + 2)
    return lo + (x - t) * (hi - lo)


@dataclass(frozen=True)
class IdentityResult:
    name: str
    applies: bool
    d2d: Fraction | None
    server: Fraction | None

    @property
    def holds(self) -> bool | None:
        return None if not self.applies else self.d2d == self.server


def d2d_server_identity_check(profile: CacheProfile, d2d_load=None) -> list[IdentityResult]:
    """Evaluate each identity whose hypothesis holds.

    ``d2d_load`` supplies the D2D side (defaults to the joint LP optimum);
    the server side comes from the server trade-off of K-1 users.
    """
    if d2d_load is None:
        from .achievability import min_load_uncoded_linear
        d2d_load = lambda p: min_load_uncoded_linear(p).load  # noqa: E731
    K, s, m = profile.K, profile.total, profile.m
    out = []
    d2d = None

    def lazy():
        nonlocal d2d
        if d2d is None:
            d2d = d2d_load(profile)
        return d2d

    equal = len(set(m)) == 1 and K >= 2
    out.append(IdentityResult("equal-cache", equal,
                              lazy() if equal else None,
                              server_load_equal(K - 1, (s - 1) / (K - 1)) if equal else None))
    thr = K >= 3 and threshold_condition(profile)
    out.append(IdentityResult("threshold", thr,
                              lazy() if thr else None,
                              server_load_equal(K - 1, (s - 1) / (K - 1)) if thr else None))
    full = K == 3 and m[-1] == 1
    out.append(IdentityResult("full-cache-user", full,
                              lazy() if full else None,
                              max(2 - 2 * m[0] - m[1], 1 - m[0]) if full else None))
    return out

