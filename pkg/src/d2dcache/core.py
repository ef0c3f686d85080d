"""Instance model: cache profiles, user-set combinatorics, and the feasibility
checks for placement and delivery.

User sets are plain ``int`` bitmasks (user ``k`` is bit ``k - 1``).  Every
normalized quantity is a :class:`fractions.Fraction`; nothing on the
feasibility path touches floating point.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    CacheOutOfRange,
    EmptySet,
    InsufficientTotalCache,
    InvalidK,
    NoLevel,
    NotInSideInfoFamily,
    ProfileError,
    TooFewFiles,
)

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Fractions
# ---------------------------------------------------------------------------

def as_fraction(x) -> Fraction:
    """Convert ``x`` to an exact rational.

    Strings may be decimals ("0.35") or ratios ("7/20"); both are parsed
    exactly.  Floats are converted through their shortest repr, so ``0.7``
    becomes ``7/10`` rather than the binary approximation.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not cache sizes")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def fmt_fraction(x: Fraction) -> str:
    x = as_fraction(x)
    return f"{x.numerator}/{x.denominator}"


def fmt_decimal(x: Fraction, digits: int = 6) -> str:
    s = f"{float(x):.{digits}f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


# ---------------------------------------------------------------------------
# User sets
# ---------------------------------------------------------------------------

def mask_of(users: Iterable[int]) -> int:
    m = 0
    for k in users:
        if k < 1:
            raise ValueError(f"user ids are 1-based, got {k}")
        m |= 1 << (k - 1)
    return m


def members(mask: int) -> tuple[int, ...]:
    out = []
    k = 1
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return tuple(out)


def size(mask: int) -> int:
    return mask.bit_count()


def full_set(K: int) -> int:
    return (1 << K) - 1


def bit(k: int) -> int:
    return 1 << (k - 1)


def canonical_key(mask: int) -> tuple[int, int]:
    return (mask.bit_count(), mask)


def fmt_set(mask: int) -> str:
    return "{" + ",".join(map(str, members(mask))) + "}"


def subsets_of(ground: int, min_size: int, max_size: int) -> list[int]:
    """All subsets of ``ground`` with size in ``[min_size, max_size]``,
    ordered by (cardinality, mask value)."""
    n = ground.bit_count()
    if not 0 <= min_size <= max_size <= n:
        raise ValueError(f"need 0 <= {min_size} <= {max_size} <= {n}")
    elems = [1 << b for b in range(ground.bit_length()) if ground >> b & 1]
    out = []
    for s in range(min_size, max_size + 1):
        layer = [sum(c) for c in itertools.combinations(elems, s)]
        layer.sort()
        out.extend(layer)
    return out


def nonempty_subsets(K: int) -> list[int]:
    return subsets_of(full_set(K), 1, K)


def permutations_of(mask: int) -> list[tuple[int, ...]]:
    """Every ordering of the users in ``mask``, lexicographic by user id."""
    if mask == 0:
        raise EmptySet("permutations of the empty set")
    return list(itertools.permutations(members(mask)))


def targets_of(K: int, j: int) -> list[int]:
    """Nonempty target sets a sender ``j`` can address."""
    return subsets_of(full_set(K) & ~bit(j), 1, K - 1)


def side_info_family(K: int, j: int, T: int, i: int) -> list[int]:
    """Subfile classes that ``j`` holds, every member of ``T`` but ``i``
    holds, and ``i`` lacks (canonical order)."""
    if not (T >> (i - 1)) & 1:
        raise ValueError(f"recipient {i} not in target set {fmt_set(T)}")
    core = bit(j) | (T & ~bit(i))
    free = full_set(K) & ~core & ~bit(i)
    return sorted((core | extra for extra in subsets_of(free, 0, free.bit_count())),
                  key=canonical_key)


def side_info_union(K: int, j: int, T: int) -> list[int]:
    out = []
    for i in members(T):
        out.extend(side_info_family(K, j, T, i))
    return sorted(out, key=canonical_key)


def recipient_of(S: int, j: int, T: int) -> int:
    """The unique member of ``T`` that a piece of subfile class ``S`` inside
    signal ``j -> T`` is meant for."""
    missing = T & ~S
    if not (S >> (j - 1)) & 1 or (T >> (j - 1)) & 1 or missing.bit_count() != 1:
        raise NotInSideInfoFamily(
            f"{fmt_set(S)} is not in the side-information family of {j}->{fmt_set(T)}")
    return missing.bit_length()


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CacheProfile:
    """K users, N files, and the normalized cache sizes sorted ascending.

    ``original_order[s]`` is the 0-based input position of the user that
    sits at sorted position ``s``.
    """

    K: int
    N: int
    m: tuple[Fraction, ...]
    original_order: tuple[int, ...]

    @property
    def total(self) -> Fraction:
        return sum(self.m, ZERO)

    def tail(self, start: int) -> Fraction:
        """Sum of m_i for i >= start (1-based)."""
        return sum(self.m[start - 1:], ZERO)

    def input_order_m(self) -> tuple[Fraction, ...]:
        out = [ZERO] * self.K
        for s, k in enumerate(self.original_order):
            out[k] = self.m[s]
        return tuple(out)

    def with_m(self, m: Iterable) -> "CacheProfile":
        return validate_profile(self.K, self.N, list(m))


def validate_profile(K: int, N: int, m_raw: Iterable) -> CacheProfile:
    m_in = [as_fraction(x) for x in m_raw]
    if K < 2:
        raise InvalidK(f"K={K}: need at least two users")
    if len(m_in) != K:
        raise ProfileError(f"expected {K} cache sizes, got {len(m_in)}")
    if N < K:
        raise TooFewFiles(f"N={N} < K={K}")
    for k, x in enumerate(m_in, 1):
        if not ZERO <= x <= ONE:
            raise CacheOutOfRange(f"m_{k}={x} outside [0, 1]")
    if sum(m_in, ZERO) < 1:
        raise InsufficientTotalCache(
            f"total cache {sum(m_in, ZERO)} < 1: the library cannot be served by D2D only")
    order = sorted(range(K), key=lambda k: (m_in[k], k))
    return CacheProfile(K, N, tuple(m_in[k] for k in order), tuple(order))


# ---------------------------------------------------------------------------
# Placement and delivery
# ---------------------------------------------------------------------------

def _nonzero(d: Mapping) -> dict:
    return {k: as_fraction(v) for k, v in d.items() if as_fraction(v) != 0}


@dataclass(frozen=True)
class Allocation:
    """Fraction ``a[S]`` of every file stored exclusively at user set ``S``."""

    K: int
    a: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        items = sorted(_nonzero(self.a).items(), key=lambda kv: canonical_key(kv[0]))
        object.__setattr__(self, "a", dict(items))

    def __getitem__(self, S: int) -> Fraction:
        return self.a.get(S, ZERO)

    def cached(self, k: int) -> Fraction:
        b = bit(k)
        return sum((x for S, x in self.a.items() if S & b), ZERO)

    def denominators(self) -> list[int]:
        return [x.denominator for x in self.a.values()]


@dataclass(frozen=True)
class DeliveryPlan:
    """Signal sizes ``v[(j, T)]`` and assignment sizes ``u[(S, j, T)]``."""

    K: int
    v: Mapping[tuple[int, int], Fraction] = field(default_factory=dict)
    u: Mapping[tuple[int, int, int], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        v = sorted(_nonzero(self.v).items(),
                   key=lambda kv: (kv[0][0], canonical_key(kv[0][1])))
        u = sorted(_nonzero(self.u).items(),
                   key=lambda kv: (kv[0][1], canonical_key(kv[0][2]), canonical_key(kv[0][0])))
        object.__setattr__(self, "v", dict(v))
        object.__setattr__(self, "u", dict(u))

    def sender_load(self, j: int) -> Fraction:
        return sum((x for (jj, _), x in self.v.items() if jj == j), ZERO)

    def denominators(self) -> list[int]:
        return [x.denominator for x in itertools.chain(self.v.values(), self.u.values())]


@dataclass
class Verdict:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def placement_feasible(profile: CacheProfile, alloc: Allocation) -> Verdict:
    bad = []
    full = full_set(profile.K)
    for S, x in alloc.a.items():
        if S == 0 or S & ~full:
            bad.append(f"a[{fmt_set(S)}]: not a nonempty subset of [{profile.K}]")
        if not ZERO <= x <= ONE:
            bad.append(f"a[{fmt_set(S)}]={x} outside [0, 1]")
    total = sum(alloc.a.values(), ZERO)
    if total != 1:
        bad.append(f"sum of allocation is {total}, not 1")
    for k in range(1, profile.K + 1):
        used = alloc.cached(k)
        if used > profile.m[k - 1]:
            bad.append(f"user {k} budget: caches {used} > m_{k}={profile.m[k - 1]}")
    return Verdict(not bad, bad)


def delivery_feasible(alloc: Allocation, plan: DeliveryPlan) -> Verdict:
    """Check the unicast structure, equal-size multicast, subfile redundancy,
    completion and box constraints, all exactly."""
    K = alloc.K
    if plan.K != K:
        return Verdict(False, [f"plan is for K={plan.K}, allocation for K={K}"])
    bad = []
    full = full_set(K)
    u, v = plan.u, plan.v

    for (j, T) in v:
        if not 1 <= j <= K or T == 0 or T & ~full or T & bit(j):
            bad.append(f"v[{j}->{fmt_set(T)}]: invalid signal key")
    for (S, j, T) in u:
        try:
            i = recipient_of(S, j, T)
        except NotInSideInfoFamily:
            bad.append(f"u[{fmt_set(S)}; {j}->{fmt_set(T)}]: S not in side-information family")
            continue
        if S & ~full or i > K:
            bad.append(f"u[{fmt_set(S)}; {j}->{fmt_set(T)}]: outside [{K}]")
        if S == bit(j):
            bad.append(f"u[{fmt_set(S)}; {j}->{fmt_set(T)}]: singleton subfiles are sent whole")
    if bad:
        return Verdict(False, bad)

    # box bounds
    for key, x in u.items():
        S = key[0]
        if not ZERO <= x <= alloc[S]:
            bad.append(f"u[{fmt_set(S)}; {key[1]}->{fmt_set(key[2])}]={x} outside [0, a_S={alloc[S]}]")
    for (j, T), x in v.items():
        if not ZERO <= x <= ONE:
            bad.append(f"v[{j}->{fmt_set(T)}]={x} outside [0, 1]")

    by_signal: dict[tuple[int, int], dict[int, Fraction]] = {}
    for (S, j, T), x in u.items():
        i = recipient_of(S, j, T)
        slot = by_signal.setdefault((j, T), {})
        slot[i] = slot.get(i, ZERO) + x

    for j in range(1, K + 1):
        for T in targets_of(K, j):
            vv = v.get((j, T), ZERO)
            got = by_signal.get((j, T), {})
            if T.bit_count() == 1:
                i = T.bit_length()
                rhs = alloc[bit(j)] + got.get(i, ZERO)
                if vv != rhs:
                    bad.append(f"unicast structure {j}->{{{i}}}: v={vv} != a_{{{j}}} + sum u = {rhs}")
            else:
                for i in members(T):
                    if vv != got.get(i, ZERO):
                        bad.append(f"multicast structure {j}->{fmt_set(T)} recipient {i}: "
                                   f"v={vv} != sum u = {got.get(i, ZERO)}")

    redundancy: dict[tuple[int, int], Fraction] = {}
    for (S, j, T), x in u.items():
        i = recipient_of(S, j, T)
        redundancy[(S, i)] = redundancy.get((S, i), ZERO) + x
    for (S, i), tot in redundancy.items():
        if tot > alloc[S]:
            bad.append(f"redundancy {fmt_set(S)} for user {i}: sum u = {tot} > a_S = {alloc[S]}")

    for k in range(1, K + 1):
        recv = sum((x for (j, T), x in v.items() if T & bit(k)), ZERO)
        need = ONE - alloc.cached(k)
        if recv < need:
            bad.append(f"completion user {k}: receives {recv} < {need}")
    return Verdict(not bad, bad)


def delivery_load(plan: DeliveryPlan) -> Fraction:
    return sum(plan.v.values(), ZERO)


# ---------------------------------------------------------------------------
# Region classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionInfo:
    t: int
    l: int
    applicable_theorems: frozenset[str]


def memory_level(K: int, total: Fraction) -> int:
    """t in [K-1] with t <= total <= t+1; an integral total sits at its own level."""
    return max(1, min(math.floor(total), K - 1))


def is_level_below(profile: CacheProfile, l: int) -> bool:
    """(K-l-1) m_l < sum_{i>l} m_i - 1: user l is individually binding."""
    K = profile.K
    if l == 0:
        return True
    if l >= K - 1:
        return False
    return (K - l - 1) * profile.m[l - 1] < profile.tail(l + 1) - 1


def heterogeneity_level(profile: CacheProfile) -> int:
    for l in range(0, profile.K - 1):
        if is_level_below(profile, l) and not is_level_below(profile, l + 1):
            return l
    raise NoLevel(f"no heterogeneity level fits m={list(map(str, profile.m))}")


def threshold_condition(profile: CacheProfile) -> bool:
    """(K-2) m_1 >= sum_{k>=2} m_k - 1."""
    return (profile.K - 2) * profile.m[0] >= profile.tail(2) - 1


def classify_region(profile: CacheProfile) -> RegionInfo:
    K, total = profile.K, profile.total
    t = memory_level(K, total)
    l = heterogeneity_level(profile)
    thms = set()
    if K >= 3:
        if len(set(profile.m)) == 1:
            thms.add("Thm3")
        if threshold_condition(profile):
            thms.add("Thm4")
        if 1 <= total <= 2 and l >= 1:
            thms.add("Thm5")
        if total >= K - 1 and not threshold_condition(profile):
            thms.add("Thm6")
        if K == 3:
            thms.add("Thm7")
    if not thms:
        thms.add("LP-only")
    return RegionInfo(t, l, frozenset(thms))


# ---------------------------------------------------------------------------
# JSON encodings
# ---------------------------------------------------------------------------

def set_to_json(mask: int) -> list[int]:
    return list(members(mask))


def allocation_to_json(alloc: Allocation) -> dict:
    return {"a": [{"S": set_to_json(S), "value": fmt_fraction(x)} for S, x in alloc.a.items()]}


def allocation_from_json(K: int, data: Mapping) -> Allocation:
    return Allocation(K, {mask_of(e["S"]): as_fraction(e["value"]) for e in data["a"]})


def plan_to_json(plan: DeliveryPlan) -> dict:
    return {
        "v": [{"j": j, "T": set_to_json(T), "value": fmt_fraction(x)}
              for (j, T), x in plan.v.items()],
        "u": [{"S": set_to_json(S), "j": j, "T": set_to_json(T), "value": fmt_fraction(x)}
              for (S, j, T), x in plan.u.items()],
    }


def plan_from_json(K: int, data: Mapping) -> DeliveryPlan:
    v = {}
    for e in data.get("v", []):
        v[(int(e["j"]), mask_of(e["T"]))] = as_fraction(e["value"])
    u = {}
    for e in data.get("u", []):
        u[(mask_of(e["S"]), int(e["j"]), mask_of(e["T"]))] = as_fraction(e["value"])
    return DeliveryPlan(K, v, u)
