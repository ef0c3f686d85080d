"""Achievable schemes: the joint placement/delivery LP and the explicit
constructions for each trade-off region."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .core import (
    ONE,
    ZERO,
    Allocation,
    CacheProfile,
    DeliveryPlan,
    allocation_from_json,
    allocation_to_json,
    bit,
    delivery_load,
    fmt_fraction,
    full_set,
    heterogeneity_level,
    is_level_below,
    memory_level,
    members,
    nonempty_subsets,
    plan_from_json,
    plan_to_json,
    side_info_family,
    subsets_of,
    targets_of,
    threshold_condition,
    as_fraction,
)
from .errors import HypothesisViolated, LPInfeasible, WrongK
from .lp import LinearProgram, solve

PROVENANCES = ("LP-O1", "ThresholdScheme", "SmallMemoryScheme", "LargeMemoryScheme",
               "ThreeUserScheme", "RestrictedLP")


@dataclass(frozen=True)
class Scheme:
    allocation: Allocation
    plan: DeliveryPlan
    load: Fraction
    provenance: str
    details: dict = field(default_factory=dict, compare=False)

    @property
    def K(self) -> int:
        return self.allocation.K


def make_scheme(alloc: Allocation, plan: DeliveryPlan, provenance: str, **details) -> Scheme:
    return Scheme(alloc, plan, delivery_load(plan), provenance, details)


@dataclass(frozen=True)
class SchemeParams:
    eta: tuple[Fraction, ...]
    theta: tuple[Fraction, ...]
    rho: tuple[Fraction, ...]


# ---------------------------------------------------------------------------
# The joint LP
# ---------------------------------------------------------------------------

def _allowed_u(K: int, j: int, T: int, restricted: bool) -> list[tuple[int, int]]:
    """(S, recipient) pairs that may carry a piece inside signal j -> T."""
    out = []
    for i in members(T):
        if restricted:
            if T.bit_count() == 1:
                continue
            out.append((bit(j) | (T & ~bit(i)), i))
        else:
            out.extend((S, i) for S in side_info_family(K, j, T, i) if S != bit(j))
    return out


def build_o1(profile: CacheProfile, restricted: bool = False) -> LinearProgram:
    """Minimize total D2D traffic over uncoded placements and linear deliveries.

    Box upper bounds ``u <= a_S`` are not emitted as rows: every ``u`` sits in
    exactly one redundancy row whose other terms are nonnegative, so they are
    implied.  With ``restricted`` each multicast may only use the subfile
    cached exactly at ``{j} | T - {i}`` and unicasts carry only ``a_{j}``.
    """
    K = profile.K
    lp = LinearProgram("min", name="O1-restricted" if restricted else "O1")
    subsets = nonempty_subsets(K)
    for S in subsets:
        lp.add_variable(("a", S))
    for j in range(1, K + 1):
        for T in targets_of(K, j):
            lp.add_variable(("v", j, T), cost=1)
    redundancy: dict[tuple[int, int], list] = {}
    signal_rows = []
    for j in range(1, K + 1):
        for T in targets_of(K, j):
            per_recipient: dict[int, list] = {i: [] for i in members(T)}
            for S, i in _allowed_u(K, j, T, restricted):
                name = ("u", S, j, T)
                lp.add_variable(name)
                per_recipient[i].append(name)
                redundancy.setdefault((S, i), []).append(name)
            signal_rows.append((j, T, per_recipient))

    lp.add_constraint({("a", S): 1 for S in subsets}, "==", 1, name="place:sum")
    for k in range(1, K + 1):
        lp.add_constraint({("a", S): 1 for S in subsets if S & bit(k)}, "<=", profile.m[k - 1],
                          name=f"place:cache:{k}")
    for j, T, per_recipient in signal_rows:
        if T.bit_count() == 1:
            i = T.bit_length()
            coeffs = {("v", j, T): 1, ("a", bit(j)): -1}
            coeffs.update({n: -1 for n in per_recipient[i]})
            lp.add_constraint(coeffs, "==", 0, name=f"unicast:{j}:{i}")
        else:
            for i, names in per_recipient.items():
                coeffs = {("v", j, T): 1}
                coeffs.update({n: -1 for n in names})
                lp.add_constraint(coeffs, "==", 0, name=f"multicast:{j}:{T}:{i}")
    for S in subsets_of(full_set(K), 2, K - 1) if K > 2 else ():
        for i in range(1, K + 1):
            names = redundancy.get((S, i))
            if S & bit(i) or not names:
                continue
            coeffs = {n: 1 for n in names}
            coeffs[("a", S)] = -1
            lp.add_constraint(coeffs, "<=", 0, name=f"redundancy:{S}:{i}")
    for k in range(1, K + 1):
        coeffs = {("v", j, T): 1 for j in range(1, K + 1) if j != k
                  for T in targets_of(K, j) if T & bit(k)}
        coeffs.update({("a", S): 1 for S in subsets if S & bit(k)})
        lp.add_constraint(coeffs, ">=", 1, name=f"completion:{k}")
    return lp


def scheme_from_point(K: int, point: dict, provenance: str) -> Scheme:
    a, v, u = {}, {}, {}
    for name, x in point.items():
        if name[0] == "a":
            a[name[1]] = x
        elif name[0] == "v":
            v[(name[1], name[2])] = x
        else:
            u[(name[1], name[2], name[3])] = x
    return make_scheme(Allocation(K, a), DeliveryPlan(K, v, u), provenance)


def min_load_uncoded_linear(profile: CacheProfile, rule: str = "dantzig") -> Scheme:
    sol = solve(build_o1(profile), rule=rule)
    if not sol.optimal:
        raise LPInfeasible(f"O1 returned {sol.status} for a valid profile")
    return scheme_from_point(profile.K, sol.point, "LP-O1")


def min_load_restricted(profile: CacheProfile, rule: str = "dantzig") -> Fraction:
    return restricted_scheme(profile, rule).load


def restricted_scheme(profile: CacheProfile, rule: str = "dantzig") -> Scheme:
    sol = solve(build_o1(profile, restricted=True), rule=rule)
    if not sol.optimal:
        raise LPInfeasible(f"restricted O1 returned {sol.status}")
    return scheme_from_point(profile.K, sol.point, "RestrictedLP")


# ---------------------------------------------------------------------------
# Threshold region: generalized equal-cache scheme
# ---------------------------------------------------------------------------

def threshold_params(profile: CacheProfile, rho=None) -> tuple[int, SchemeParams]:
    K, s = profile.K, profile.total
    if K < 3:
        raise HypothesisViolated("no closed-form construction for K = 2; use the LP")
    if not threshold_condition(profile):
        raise HypothesisViolated(
            f"(K-2) m_1 = {(K - 2) * profile.m[0]} < sum_(k>=2) m_k - 1 = {profile.tail(2) - 1}")
    t = memory_level(K, s)
    slack = t + 1 - s
    c1 = comb(K - 1, t - 1)
    excess = [1 + (K - 1) * mk - s for mk in profile.m]
    if slack == 0:
        caps = None
        rho = tuple(Fraction(1, K) for _ in range(K)) if rho is None else tuple(map(as_fraction, rho))
        eta = [ZERO] * K
    else:
        caps = [e / ((K - t) * slack) for e in excess]
        if rho is None:
            total_cap = sum(caps, ZERO)
            rho = tuple(c / total_cap for c in caps)
        else:
            rho = tuple(map(as_fraction, rho))
            if len(rho) != K or sum(rho, ZERO) != 1:
                raise ValueError("rho must have K entries summing to 1")
            for k, (r, c) in enumerate(zip(rho, caps), 1):
                if not ZERO <= r <= c:
                    raise ValueError(f"rho_{k}={r} outside [0, {c}]")
        eta = [r * slack / c1 for r in rho]
    if K - t - 1 > 0:
        theta = [Fraction(t, K - t - 1) * (e / ((K - t) * c1) - h) for e, h in zip(excess, eta)]
    else:
        # all (t+1)-subsets are [K]; only the total of theta is pinned down
        if slack and any(h != e / c1 for h, e in zip(eta, excess)):
            raise ValueError("for t = K-1 rho is forced to the caps")
        theta = [(s - (K - 1)) / K] * K
    return t, SchemeParams(tuple(eta), tuple(theta), tuple(rho))


def scheme_threshold(profile: CacheProfile, rho=None) -> Scheme:
    K = profile.K
    t, params = threshold_params(profile, rho)
    a = {}
    for S in subsets_of(full_set(K), t, min(t + 1, K)):
        src = params.eta if S.bit_count() == t else params.theta
        a[S] = sum((src[j - 1] for j in members(S)), ZERO)
    v, u = {}, {}
    for j in range(1, K + 1):
        for T in targets_of(K, j):
            n = T.bit_count()
            if n == t:
                x = params.eta[j - 1]
            elif n == t + 1:
                x = params.theta[j - 1]
            else:
                continue
            if not x:
                continue
            v[(j, T)] = x
            if n >= 2:
                for i in members(T):
                    u[(bit(j) | (T & ~bit(i)), j, T)] = x
    return make_scheme(Allocation(K, a), DeliveryPlan(K, v, u), "ThresholdScheme",
                       t=t, eta=params.eta, theta=params.theta, rho=params.rho)


# ---------------------------------------------------------------------------
# Small total memory
# ---------------------------------------------------------------------------

def _pair(x: int, y: int) -> int:
    return bit(x) | bit(y)


def small_memory_allocation_lp(profile: CacheProfile, l: int) -> LinearProgram:
    K = profile.K
    small = range(1, l + 1)
    large = list(range(l + 1, K + 1))
    lar_pairs = [(x, y) for x in large for y in large if x < y]
    lp = LinearProgram("min", name="small-memory-placement")
    for j in large:
        lp.add_variable(("a", bit(j)))
    for i in small:
        for j in large:
            lp.add_variable(("a", _pair(i, j)))
    for x, y in lar_pairs:
        lp.add_variable(("a", _pair(x, y)))
    for x in large:
        for y, z in lar_pairs:
            if x not in (y, z):
                lp.add_variable(("w", x, _pair(y, z)))

    lp.add_constraint({("a", bit(j)): 1 for j in large}, "==", 2 - profile.total)
    lp.add_constraint({("a", _pair(x, y)): 1 for x, y in lar_pairs}, "==", profile.tail(l + 1) - 1)
    for i in small:
        lp.add_constraint({("a", _pair(i, j)): 1 for j in large}, "==", profile.m[i - 1])
    for j in large:
        coeffs = {("a", bit(j)): 1}
        coeffs.update({("a", _pair(i, j)): 1 for i in range(1, K + 1) if i != j})
        lp.add_constraint(coeffs, "==", profile.m[j - 1])
    for j in large:
        for i1 in small:
            for i2 in small:
                if i1 < i2:
                    lp.add_constraint({("a", _pair(i1, j)): 1, ("a", _pair(i2, j)): -1}, "<=", 0)
    for x, y in lar_pairs:
        lp.add_constraint({("a", _pair(l, x)): 1, ("a", _pair(l, y)): 1, ("a", _pair(x, y)): -1},
                          "<=", 0)
    # multicasts among the large users must cover each shared pair exactly
    for x, y in lar_pairs:
        for z in large:
            if z in (x, y):
                continue
            lp.add_constraint({("w", x, _pair(y, z)): 1, ("w", y, _pair(x, z)): 1,
                               ("a", _pair(x, y)): -1}, "==", 0)
    return lp


def scheme_small_memory(profile: CacheProfile) -> Scheme:
    K, s = profile.K, profile.total
    if K < 3 or not 1 <= s <= 2:
        raise HypothesisViolated(f"small-memory scheme needs K >= 3 and 1 <= sum m <= 2 (got {s})")
    l = heterogeneity_level(profile)
    if l == 0:
        raise HypothesisViolated("heterogeneity level 0: use scheme_threshold")
    sol = solve(small_memory_allocation_lp(profile, l))
    if not sol.optimal:
        raise LPInfeasible("small-memory placement system has no nonnegative solution")
    pt = sol.point
    a = {name[1]: x for name, x in pt.items() if name[0] == "a"}
    A = Allocation(K, a)
    large = list(range(l + 1, K + 1))
    v: dict = {}
    u: dict = {}

    def add(S, j, T, x):
        if x:
            u[(S, j, T)] = u.get((S, j, T), ZERO) + x

    # multicast to the small users, one level at a time
    for k in range(1, l + 1):
        for j in large:
            x = A[_pair(k, j)]
            for i in range(k + 1, K + 1):
                if i == j or not x:
                    continue
                T = _pair(k, i)
                v[(j, T)] = x
                add(_pair(k, j), j, T, x)   # for user i
                add(_pair(i, j), j, T, x)   # for user k
    # multicast among the large users
    for name, x in pt.items():
        if name[0] == "w" and x:
            _, sender, T = name
            v[(sender, T)] = x
            for r in members(T):
                add(bit(sender) | (T & ~bit(r)), sender, T, x)
    # unicast: singletons, then what the multicasts left over for small users
    for j in large:
        for i in range(1, K + 1):
            if i != j:
                v[(j, bit(i))] = A[bit(j)]
    for k in range(1, l + 1):
        for k2 in range(k + 1, l + 1):
            for j in large:
                rest = A[_pair(k2, j)] - A[_pair(k, j)]
                add(_pair(k2, j), j, bit(k), rest)
                v[(j, bit(k))] += rest
        for x in large:
            for y in large:
                if x < y:
                    rest = A[_pair(x, y)] - A[_pair(k, x)] - A[_pair(k, y)]
                    add(_pair(x, y), x, bit(k), rest)
                    v[(x, bit(k))] += rest
    return make_scheme(A, DeliveryPlan(K, v, u), "SmallMemoryScheme", l=l)


# ---------------------------------------------------------------------------
# Large total memory
# ---------------------------------------------------------------------------

def large_memory_level(profile: CacheProfile) -> int:
    """Smallest l >= 1 with (K-l-1) m_l <= sum_{i>l} m_i - 1 and the next
    user not binding; the weak inequality admits the threshold boundary."""
    K = profile.K
    for l in range(1, K - 1):
        weak = (K - l - 1) * profile.m[l - 1] <= profile.tail(l + 1) - 1
        if weak and not is_level_below(profile, l + 1):
            return l
    raise HypothesisViolated("no level satisfies the large-memory construction")


def scheme_large_memory(profile: CacheProfile) -> Scheme:
    K, s = profile.K, profile.total
    if K < 3:
        raise HypothesisViolated("large-memory scheme needs K >= 3")
    if s < K - 1:
        raise HypothesisViolated(f"sum m = {s} < K - 1 = {K - 1}")
    if (K - 2) * profile.m[0] > profile.tail(2) - 1:
        raise HypothesisViolated(
            f"m_1 = {profile.m[0]} above (sum_(i>=2) m_i - 1)/(K-2): threshold region")
    l = large_memory_level(profile)
    m = profile.m
    full = full_set(K)
    a = {full: s - (K - 1)}
    for k in range(1, K + 1):
        a[full & ~bit(k)] = 1 - m[k - 1]
    tail = profile.tail(l + 1)
    v, u = {}, {}

    def emit(j, T, x):
        if not x:
            return
        v[(j, T)] = x
        for k in members(T):
            u[(full & ~bit(k), j, T)] = x

    for i in range(1, l):
        emit(K, full_set(i), m[i] - m[i - 1])
    emit(K, full_set(l), (tail - 1 - (K - l - 1) * m[l - 1]) / (K - l - 1))
    for j in range(l + 1, K + 1):
        emit(j, full & ~bit(j), ((K - l - 1) * m[j - 1] + 1 - tail) / (K - l - 1))
    return make_scheme(Allocation(K, a), DeliveryPlan(K, v, u), "LargeMemoryScheme", l=l)


# ---------------------------------------------------------------------------
# Three users
# ---------------------------------------------------------------------------

def three_user_region(m1, m2, m3) -> str:
    s = m1 + m2 + m3
    if s <= 2:
        return "I" if m1 >= m2 + m3 - 1 else "II"
    return "III" if m2 + m3 <= 1 + m1 else "IV"


def scheme_three_user(profile: CacheProfile, rho=None) -> Scheme:
    if profile.K != 3:
        raise WrongK(f"three-user scheme called with K={profile.K}")
    m1, m2, m3 = profile.m
    s = profile.total
    region = three_user_region(m1, m2, m3)
    A1, A2, A3 = bit(1), bit(2), bit(3)
    A12, A13, A23, A123 = A1 | A2, A1 | A3, A2 | A3, 7
    a: dict[int, Fraction] = {}
    v: dict = {}
    u: dict = {}

    def multicast(j, T, x):
        if not x:
            return
        v[(j, T)] = x
        for i in members(T):
            u[(bit(j) | (T & ~bit(i)), j, T)] = x

    if region == "I":
        mm = (m1, m2, m3)
        if s == 2:
            rho = (ONE / 3,) * 3 if rho is None else tuple(map(as_fraction, rho))
            single = [ZERO] * 3
        else:
            caps = [(2 * x + 1 - s) / (2 * (2 - s)) for x in mm]
            if rho is None:
                rho = tuple(c / sum(caps, ZERO) for c in caps)
            else:
                rho = tuple(map(as_fraction, rho))
                if sum(rho, ZERO) != 1 or any(not ZERO <= r <= c for r, c in zip(rho, caps)):
                    raise ValueError("rho must sum to 1 and respect its caps")
            single = [r * (2 - s) for r in rho]
        mc = [(2 * x + 1 - s) / 2 - y for x, y in zip(mm, single)]
        for j in (1, 2, 3):
            a[bit(j)] = single[j - 1]
        a[A12] = mc[0] + mc[1]
        a[A13] = mc[0] + mc[2]
        a[A23] = mc[1] + mc[2]
        for j in (1, 2, 3):
            for i in (1, 2, 3):
                if i != j:
                    v[(j, bit(i))] = single[j - 1]
        multicast(1, A23, mc[0])
        multicast(2, A13, mc[1])
        multicast(3, A12, mc[2])
    elif region == "II":
        a[A23] = m2 + m3 - 1
        if m1 + m3 <= 1:
            a[A13] = ZERO
            a[A12] = m1
            a[A2] = 1 - m3 - m1
            a[A3] = 1 - m2
        else:
            a[A2] = ZERO
            a[A12] = 1 - m3
            a[A13] = m1 - 1 + m3
            a[A3] = 1 - m2 - a[A13]
        v[(2, A1)] = v[(2, A3)] = a[A2]
        v[(3, A2)] = a[A3]
        rest = a[A23] - a[A12] - a[A13]
        v[(3, A1)] = a[A3] + rest
        if rest:
            u[(A23, 3, A1)] = rest
        multicast(2, A13, a[A12])
        multicast(3, A12, a[A13])
    else:
        a[A12], a[A13], a[A23], a[A123] = 1 - m3, 1 - m2, 1 - m1, s - 2
        if region == "III":
            multicast(1, A23, (m1 + 1 - m2 - m3) / 2)
            multicast(2, A13, (m2 + 1 - m1 - m3) / 2)
            multicast(3, A12, (m3 + 1 - m1 - m2) / 2)
        else:
            rest = m2 + m3 - m1 - 1
            v[(3, A1)] = rest
            u[(A23, 3, A1)] = rest
            multicast(2, A13, 1 - m3)
            multicast(3, A12, 1 - m2)
    return make_scheme(Allocation(3, a), DeliveryPlan(3, v, u), "ThreeUserScheme", region=region)


# ---------------------------------------------------------------------------
# Dispatch and serialization
# ---------------------------------------------------------------------------

CONSTRUCTORS = {
    "threshold": scheme_threshold,
    "small": scheme_small_memory,
    "large": scheme_large_memory,
    "three-user": scheme_three_user,
    "lp": min_load_uncoded_linear,
}


def auto_scheme(profile: CacheProfile) -> Scheme:
    """Pick the explicit construction whose region contains ``profile``;
    fall back to the LP when none applies."""
    K = profile.K
    if K == 3:
        return scheme_three_user(profile)
    if K >= 3:
        if threshold_condition(profile):
            return scheme_threshold(profile)
        if profile.total <= 2:
            return scheme_small_memory(profile)
        if profile.total >= K - 1:
            return scheme_large_memory(profile)
    return min_load_uncoded_linear(profile)


def scheme_to_json(scheme: Scheme, profile: CacheProfile | None = None) -> dict:
    out = {"K": scheme.K, "provenance": scheme.provenance, "load": fmt_fraction(scheme.load)}
    if profile is not None:
        out["N"] = profile.N
        out["m"] = [fmt_fraction(x) for x in profile.m]
    for key, val in sorted(scheme.details.items()):
        if isinstance(val, tuple):
            val = [fmt_fraction(x) for x in val]
        out.setdefault("details", {})[key] = val
    out["allocation"] = allocation_to_json(scheme.allocation)
    out["plan"] = plan_to_json(scheme.plan)
    return out


def scheme_from_json(data: dict) -> Scheme:
    K = int(data["K"])
    alloc = allocation_from_json(K, data["allocation"])
    plan = plan_from_json(K, data["plan"])
    details = dict(data.get("details", {}))
    return Scheme(alloc, plan, delivery_load(plan), data.get("provenance", "LP-O1"), details)


def lp_point(lp: LinearProgram, scheme: Scheme) -> dict:
    """Express a scheme as a point over the variables of ``build_o1``."""
    point = dict.fromkeys(lp.variables, ZERO)
    values = {("a", S): x for S, x in scheme.allocation.a.items()}
    values.update({("v", j, T): x for (j, T), x in scheme.plan.v.items()})
    values.update({("u", S, j, T): x for (S, j, T), x in scheme.plan.u.items()})
    for name, x in values.items():
        if name not in point:
            raise KeyError(f"{name!r} is not a variable of {lp.name}")
        point[name] = x
    return point
