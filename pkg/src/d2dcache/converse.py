"""Lower bounds on the D2D delivery load under uncoded placement.

For a fixed choice of permutation weights the bound is a small LP in
``(lambda_0, lambda_1..lambda_K)``; its value depends on the weights only
through the functional ``gamma(S)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping

from .core import (
    ZERO,
    CacheProfile,
    as_fraction,
    bit,
    fmt_fraction,
    full_set,
    members,
    nonempty_subsets,
    permutations_of,
    set_to_json,
    mask_of,
)
from .errors import EmptySet, LPInfeasible, MaxKExceeded
from .lp import LinearProgram, solve

MAX_K = 7

Perm = tuple[int, ...]


@dataclass(frozen=True)
class AlphaWeights:
    """Per-sender probability weights over orderings of the other users."""

    K: int
    weights: tuple[tuple[tuple[Perm, Fraction], ...], ...]   # index j-1

    @classmethod
    def from_maps(cls, K: int, maps: Mapping[int, Mapping[Perm, object]]) -> "AlphaWeights":
        rows = []
        for j in range(1, K + 1):
            others = full_set(K) & ~bit(j)
            row = {}
            for q, x in maps.get(j, {}).items():
                q = tuple(q)
                if sorted(q) != list(members(others)):
                    raise ValueError(f"{q} is not an ordering of [K] minus {j}")
                x = as_fraction(x)
                if x < 0:
                    raise ValueError(f"negative weight {x} on {q}")
                if x:
                    row[q] = x
            if sum(row.values(), ZERO) != 1:
                raise ValueError(f"weights of sender {j} sum to {sum(row.values(), ZERO)}, not 1")
            rows.append(tuple(sorted(row.items())))
        return cls(K, tuple(rows))

    def of(self, j: int) -> tuple[tuple[Perm, Fraction], ...]:
        return self.weights[j - 1]

    def as_maps(self) -> dict[int, dict[Perm, Fraction]]:
        return {j: dict(self.of(j)) for j in range(1, self.K + 1)}


def _check_K(K: int, max_K: int = MAX_K) -> None:
    if K > max_K:
        raise MaxKExceeded(f"K={K} exceeds the enumeration limit {max_K}")


def uniform_alphas(K: int) -> AlphaWeights:
    _check_K(K)
    w = Fraction(1, factorial(K - 1))
    return AlphaWeights.from_maps(
        K, {j: {q: w for q in permutations_of(full_set(K) & ~bit(j))} for j in range(1, K + 1)})


def level_alphas(K: int, l: int) -> AlphaWeights:
    """Senders up to ``l`` use the ascending order; the rest put the small
    users first and average over orders of the remaining large users."""
    _check_K(K)
    if not 1 <= l <= K - 2:
        raise ValueError(f"level {l} outside [1, K-2]")
    head = tuple(range(1, l + 1))
    maps = {}
    for j in range(1, K + 1):
        if j <= l:
            maps[j] = {tuple(i for i in range(1, K + 1) if i != j): 1}
        else:
            rest = mask_of(range(l + 1, K + 1)) & ~bit(j)
            perms = permutations_of(rest) if rest else [()]
            w = Fraction(1, len(perms))
            maps[j] = {head + tail: w for tail in perms}
    return AlphaWeights.from_maps(K, maps)


def ascending_alphas(K: int) -> AlphaWeights:
    return AlphaWeights.from_maps(
        K, {j: {tuple(i for i in range(1, K + 1) if i != j): 1} for j in range(1, K + 1)})


def preset_alphas(profile: CacheProfile | int) -> list[tuple[str, AlphaWeights]]:
    K = profile if isinstance(profile, int) else profile.K
    out = [("uniform", uniform_alphas(K))]
    out += [(f"level-{l}", level_alphas(K, l)) for l in range(1, K - 1)]
    if K == 3:
        out.append(("ascending", ascending_alphas(K)))
    return out


# ---------------------------------------------------------------------------
# gamma
# ---------------------------------------------------------------------------

def _lead_outside(q: Perm, S: int) -> int:
    """Number of leading entries of ``q`` outside ``S``."""
    for pos, x in enumerate(q):
        if S & bit(x):
            return pos
    return len(q)


def sender_cost(S: int, j: int, alphas: AlphaWeights) -> Fraction:
    """Weighted count of transmissions sender ``j`` spends on a subfile at ``S``."""
    K = alphas.K
    n = S.bit_count()
    if n == 1:
        return Fraction(K - 1)
    if n == K:
        return ZERO
    return sum((x * _lead_outside(q, S) for q, x in alphas.of(j)), ZERO)


def gamma(S: int, alphas: AlphaWeights, K: int | None = None) -> Fraction:
    K = alphas.K if K is None else K
    if not S:
        raise EmptySet("gamma of the empty set")
    _check_K(K)
    n = S.bit_count()
    if n == 1:
        return Fraction(K - 1)
    if S == full_set(K):
        return ZERO
    return min(sender_cost(S, j, alphas) for j in members(S))


def gamma_table(alphas: AlphaWeights) -> dict[int, Fraction]:
    return {S: gamma(S, alphas) for S in nonempty_subsets(alphas.K)}


# ---------------------------------------------------------------------------
# The bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowerBoundCertificate:
    alphas: AlphaWeights
    lambda0: Fraction
    lam: tuple[Fraction, ...]
    gamma: dict
    bound: Fraction
    preset: str = ""

    def check(self, profile: CacheProfile) -> bool:
        """Re-verify dual feasibility and the claimed value from scratch."""
        if any(x < 0 for x in self.lam):
            return False
        for S in nonempty_subsets(profile.K):
            g = gamma(S, self.alphas)
            if g != self.gamma[S]:
                return False
            if self.lambda0 + sum(self.lam[k - 1] for k in members(S)) + g < 0:
                return False
        value = -self.lambda0 - sum((mk * x for mk, x in zip(profile.m, self.lam)), ZERO)
        return value == self.bound


def build_dual(profile: CacheProfile, gammas: Mapping[int, Fraction]) -> LinearProgram:
    K = profile.K
    lp = LinearProgram("max", name="O2-dual")
    lp.add_variable("lambda0", lower=None, cost=-1)
    for k in range(1, K + 1):
        lp.add_variable(("lambda", k), cost=-profile.m[k - 1])
    for S in nonempty_subsets(K):
        coeffs = {"lambda0": 1}
        coeffs.update({("lambda", k): 1 for k in members(S)})
        lp.add_constraint(coeffs, ">=", -gammas[S], name=f"gamma:{S}")
    return lp


def lower_bound_dual(profile: CacheProfile, alphas: AlphaWeights, preset: str = "") -> LowerBoundCertificate:
    gam = gamma_table(alphas)
    sol = solve(build_dual(profile, gam))
    if not sol.optimal:
        raise LPInfeasible(f"dual bound LP returned {sol.status}")
    lam = tuple(sol.point[("lambda", k)] for k in range(1, profile.K + 1))
    return LowerBoundCertificate(alphas, sol.point["lambda0"], lam, gam, sol.value, preset)


def build_primal(profile: CacheProfile, alphas: AlphaWeights) -> LinearProgram:
    """Split-allocation form: subfile S is charged to one of its members j."""
    K = profile.K
    lp = LinearProgram("min", name="O2-primal")
    for S in nonempty_subsets(K):
        for j in members(S):
            lp.add_variable(("a", S, j), cost=sender_cost(S, j, alphas))
    lp.add_constraint({n: 1 for n in lp.variables}, "==", 1, name="sum")
    for k in range(1, K + 1):
        lp.add_constraint({n: 1 for n in lp.variables if n[1] & bit(k)}, "<=", profile.m[k - 1],
                          name=f"cache:{k}")
    return lp


def lower_bound_primal(profile: CacheProfile, alphas: AlphaWeights) -> Fraction:
    _check_K(profile.K)
    sol = solve(build_primal(profile, alphas))
    if not sol.optimal:
        raise LPInfeasible(f"primal bound LP returned {sol.status}")
    return sol.value


def best_lower_bound(profile: CacheProfile, refine: bool = False,
                     rounds: int = 20) -> tuple[Fraction, LowerBoundCertificate]:
    """Best bound over the preset weight families; ties go to the later preset.

    With ``refine`` each preset is additionally improved by coordinate ascent
    over single-sender mixtures.  The result is always a valid bound but is
    not certified to be the maximum over all weights.
    """
    best = None
    for name, alphas in preset_alphas(profile):
        cert = lower_bound_dual(profile, alphas, name)
        if refine:
            cert = _ascend(profile, cert, rounds)
        if best is None or cert.bound >= best.bound:
            best = cert
    return best.bound, best


def _ascend(profile: CacheProfile, cert: LowerBoundCertificate, rounds: int) -> LowerBoundCertificate:
    K = profile.K
    steps = (Fraction(1), Fraction(1, 2), Fraction(1, 4))
    for _ in range(rounds):
        improved = False
        for j in range(1, K + 1):
            current = cert.alphas.as_maps()
            for q in permutations_of(full_set(K) & ~bit(j)):
                for s in steps:
                    row = {p: (1 - s) * x for p, x in current[j].items()}
                    row[q] = row.get(q, ZERO) + s
                    trial_maps = dict(current)
                    trial_maps[j] = row
                    trial = lower_bound_dual(profile, AlphaWeights.from_maps(K, trial_maps),
                                             cert.preset + "+ascent")
                    if trial.bound > cert.bound:
                        cert, current, improved = trial, trial.alphas.as_maps(), True
        if not improved:
            break
    return cert


def cutset_bound(profile: CacheProfile) -> Fraction:
    return 1 - profile.m[0]


def level_dual_point(K: int, l: int) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Explicit dual point matching the small-memory load formula."""
    lam0 = -Fraction(3 * K - l - 2, 2)
    lam = tuple(Fraction(K - j) if j <= l else Fraction(K - l, 2) for j in range(1, K + 1))
    return lam0, lam


def level_gamma_formula(K: int, l: int, S: int) -> Fraction | None:
    """Closed form of gamma under level-l weights for S inside the large users
    (None outside that case).  Derived by counting; see the tests for the
    enumeration cross-check."""
    n = S.bit_count()
    if S & full_set(l) or not 2 <= n <= K - 1:
        return None
    return Fraction(K + l * (n - 1) - n, n)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def alphas_to_json(alphas: AlphaWeights) -> dict:
    return {str(j): [{"q": list(q), "value": fmt_fraction(x)} for q, x in alphas.of(j)]
            for j in range(1, alphas.K + 1)}


def alphas_from_json(K: int, data: Mapping) -> AlphaWeights:
    return AlphaWeights.from_maps(
        K, {int(j): {tuple(e["q"]): e["value"] for e in rows} for j, rows in data.items()})


def certificate_to_json(cert: LowerBoundCertificate) -> dict:
    return {
        "K": cert.alphas.K,
        "preset": cert.preset,
        "bound": fmt_fraction(cert.bound),
        "lambda0": fmt_fraction(cert.lambda0),
        "lambda": [fmt_fraction(x) for x in cert.lam],
        "gamma": [{"S": set_to_json(S), "value": fmt_fraction(g)} for S, g in cert.gamma.items()],
        "alphas": alphas_to_json(cert.alphas),
    }


def certificate_from_json(data: Mapping) -> LowerBoundCertificate:
    K = int(data["K"])
    gam = {mask_of(e["S"]): as_fraction(e["value"]) for e in data["gamma"]}
    return LowerBoundCertificate(
        alphas_from_json(K, data["alphas"]),
        as_fraction(data["lambda0"]),
        tuple(as_fraction(x) for x in data["lambda"]),
        gam,
        as_fraction(data["bound"]),
        data.get("preset", ""),
    )


def bound_table(profile: CacheProfile, presets: Iterable[tuple[str, AlphaWeights]] | None = None):
    """(name, bound) for each preset, in preset order."""
    presets = preset_alphas(profile) if presets is None else presets
    return [(name, lower_bound_dual(profile, a, name).bound) for name, a in presets]
