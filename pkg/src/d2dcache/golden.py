"""Hand-built reference schemes with known optimal loads, used as golden
fixtures by the tests and by ``d2dcache verify --suite examples``."""
from __future__ import annotations

from fractions import Fraction

from .achievability import Scheme, make_scheme
from .core import Allocation, CacheProfile, DeliveryPlan, mask_of, validate_profile


def _multicast(u: dict, v: dict, j: int, T: tuple, x: Fraction) -> None:
    Tm = mask_of(T)
    v[(j, Tm)] = x
    for i in T:
        u[(mask_of({j, *T} - {i}), j, Tm)] = x


def reference_k3() -> tuple[CacheProfile, Scheme]:
    """m = (0.6, 0.7, 0.8): three pairwise multicasts, load 9/20."""
    profile = validate_profile(3, 3, ["0.6", "0.7", "0.8"])
    a = {mask_of({1, 2}): Fraction(1, 5), mask_of({1, 3}): Fraction(3, 10),
         mask_of({2, 3}): Fraction(2, 5), mask_of({1, 2, 3}): Fraction(1, 10)}
    u, v = {}, {}
    _multicast(u, v, 1, (2, 3), Fraction(1, 20))
    _multicast(u, v, 2, (1, 3), Fraction(3, 20))
    _multicast(u, v, 3, (1, 2), Fraction(1, 4))
    return profile, make_scheme(Allocation(3, a), DeliveryPlan(3, v, u), "LP-O1")


def reference_k4() -> tuple[CacheProfile, Scheme]:
    """m = (0.2, 0.7, 0.7, 0.7): user 1 sends nothing; each of users 2-4
    sends one unicast to user 1 that mixes side information, two
    multicasts with user 1 and one to the other two.  Load 21/20."""
    profile = validate_profile(4, 4, ["0.2", "0.7", "0.7", "0.7"])
    big = (2, 3, 4)
    a = {mask_of({1, x}): Fraction(1, 15) for x in big}
    a.update({mask_of({x, y}): Fraction(1, 6) for x in big for y in big if x < y})
    a[mask_of(big)] = Fraction(3, 10)
    u, v = {}, {}
    for j in big:
        o1, o2 = (x for x in big if x != j)
        one = mask_of({1})
        u[(mask_of({j, o1}), j, one)] = Fraction(1, 60)
        u[(mask_of({j, o2}), j, one)] = Fraction(1, 60)
        u[(mask_of(big), j, one)] = Fraction(1, 10)
        v[(j, one)] = Fraction(2, 15)
        for o in (o1, o2):
            _multicast(u, v, j, (1, o), Fraction(1, 15))
        _multicast(u, v, j, (o1, o2), Fraction(1, 12))
    return profile, make_scheme(Allocation(4, a), DeliveryPlan(4, v, u), "LP-O1")
