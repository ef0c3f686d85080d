"""Bit-level execution of a scheme: placement, delivery signals, decoding."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .achievability import Scheme
from .core import (
    ZERO,
    Allocation,
    CacheProfile,
    bit,
    delivery_load,
    fmt_fraction,
    fmt_set,
    members,
    recipient_of,
    set_to_json,
    validate_profile,
)
from .errors import (
    GranularityOverflow,
    MissingSideInformation,
    NonIntegralFragment,
    PieceOverflow,
    RepeatedDemand,
    SignalStructureError,
    SimulationError,
)

DEFAULT_MAX_F = 1 << 20


def max_granularity() -> int:
    env = os.environ.get("D2DCACHE_MAX_F")
    return int(env) if env else DEFAULT_MAX_F


def granularity(scheme: Scheme, cap: int | None = None) -> int:
    """Smallest file size in bits making every fragment an integer."""
    cap = max_granularity() if cap is None else cap
    dens = scheme.allocation.denominators() + scheme.plan.denominators()
    F = math.lcm(1, *dens)
    if F > cap:
        raise GranularityOverflow(f"granularity {F} exceeds the cap {cap}")
    return F


def _bits(x: Fraction, F: int, what: str) -> int:
    n = x * F
    if n.denominator != 1:
        raise NonIntegralFragment(f"{what}: {x} * F={F} is not an integer")
    return int(n)


@dataclass
class Library:
    N: int
    F: int
    files: np.ndarray   # shape (N, F), values 0/1
    seed: int | None = None

    def file(self, n: int) -> np.ndarray:
        return self.files[n - 1]


@dataclass
class CacheContents:
    """Per-user stored fragments, keyed by (file, S), plus subfile bit ranges."""

    ranges: dict[int, tuple[int, int]]
    store: dict[int, dict[tuple[int, int], np.ndarray]]

    def bits_at(self, k: int) -> int:
        return sum(len(x) for x in self.store[k].values())

    def fetch(self, k: int, n: int, S: int, start: int, stop: int) -> np.ndarray:
        frag = self.store[k].get((n, S))
        if frag is None:
            raise MissingSideInformation(f"user {k} does not cache W_{n},{fmt_set(S)}")
        s0, s1 = self.ranges[S]
        if not s0 <= start <= stop <= s1:
            raise MissingSideInformation(f"range [{start},{stop}) outside W_{n},{fmt_set(S)}")
        return frag[start - s0:stop - s0]


def run_placement(profile: CacheProfile, alloc: Allocation, F: int,
                  seed: int | None = 0) -> tuple[Library, CacheContents]:
    K, N = profile.K, profile.N
    rng = np.random.default_rng(seed)
    files = rng.integers(0, 2, size=(N, F), dtype=np.uint8)
    ranges = {}
    cursor = 0
    for S, x in alloc.a.items():
        n = _bits(x, F, f"a[{fmt_set(S)}]")
        ranges[S] = (cursor, cursor + n)
        cursor += n
    if cursor != F:
        raise SimulationError(f"subfiles cover {cursor} of {F} bits")
    store: dict[int, dict] = {k: {} for k in range(1, K + 1)}
    for S, (s0, s1) in ranges.items():
        for k in members(S):
            for n in range(1, N + 1):
                store[k][(n, S)] = files[n - 1, s0:s1].copy()
    caches = CacheContents(ranges, store)
    for k in range(1, K + 1):
        if caches.bits_at(k) > profile.m[k - 1] * N * F:
            raise SimulationError(f"user {k} stores {caches.bits_at(k)} bits over budget")
    return Library(N, F, files, seed), caches


@dataclass(frozen=True)
class Segment:
    file: int
    S: int
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start


@dataclass
class Signal:
    sender: int
    targets: int
    payload: np.ndarray
    manifest: dict[int, list[Segment]]

    @property
    def is_unicast(self) -> bool:
        return self.targets.bit_count() == 1


def _check_demand(demand, K: int, N: int) -> list[int]:
    demand = [int(d) for d in demand]
    if len(demand) != K:
        raise ValueError(f"demand has {len(demand)} entries, expected {K}")
    if any(not 1 <= d <= N for d in demand):
        raise ValueError(f"demand {demand} references files outside [1, {N}]")
    if len(set(demand)) != K:
        raise RepeatedDemand(f"demand {demand} repeats a file; only distinct demands are supported")
    return demand


def build_transmissions(scheme: Scheme, demand, F: int, library: Library,
                        caches: CacheContents) -> list[Signal]:
    K = scheme.K
    alloc, plan = scheme.allocation, scheme.plan
    demand = _check_demand(demand, K, library.N)
    # carve pieces of each needed subfile in canonical (j, T) order
    cursor: dict[tuple[int, int], int] = {}
    per_signal: dict[tuple[int, int], dict[int, list[Segment]]] = {}
    for (S, j, T), x in sorted(plan.u.items(), key=lambda kv: (kv[0][1], kv[0][2].bit_count(),
                                                                 kv[0][2], kv[0][0].bit_count(),
                                                                 kv[0][0])):
        i = recipient_of(S, j, T)
        n = _bits(x, F, f"u[{fmt_set(S)}; {j}->{fmt_set(T)}]")
        s0, s1 = caches.ranges.get(S, (0, 0))
        off = cursor.get((S, i), s0)
        if off + n > s1:
            raise PieceOverflow(f"pieces of W_(d_{i}),{fmt_set(S)} exceed a_S")
        cursor[(S, i)] = off + n
        per_signal.setdefault((j, T), {}).setdefault(i, []).append(
            Segment(demand[i - 1], S, off, off + n))

    signals = []
    for (j, T), x in plan.v.items():
        length = _bits(x, F, f"v[{j}->{fmt_set(T)}]")
        manifest = {i: [] for i in members(T)}
        if T.bit_count() == 1:
            i = T.bit_length()
            s0, s1 = caches.ranges.get(bit(j), (0, 0))
            if s1 > s0:
                manifest[i].append(Segment(demand[i - 1], bit(j), s0, s1))
        for i, segs in per_signal.get((j, T), {}).items():
            manifest[i].extend(segs)
        payload = np.zeros(length, dtype=np.uint8)
        for i, segs in manifest.items():
            chunk = _concat(caches, j, segs)
            if len(chunk) > length:
                raise SignalStructureError(
                    f"signal {j}->{fmt_set(T)}: piece for user {i} has {len(chunk)} > {length} bits")
            payload[:len(chunk)] ^= chunk
        signals.append(Signal(j, T, payload, manifest))
    return signals


def _concat(caches: CacheContents, k: int, segs: list[Segment]) -> np.ndarray:
    if not segs:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate([caches.fetch(k, s.file, s.S, s.start, s.stop) for s in segs])


def sender_audit(signals: list[Signal]) -> list[str]:
    """Fragments a sender would need but cannot hold."""
    return [f"user {sig.sender} sends a piece of W_{seg.file},{fmt_set(seg.S)}"
            for sig in signals for segs in sig.manifest.values() for seg in segs
            if not seg.S & bit(sig.sender)]


def decode_all(signals: list[Signal], caches: CacheContents, demand, F: int) -> dict[int, np.ndarray | None]:
    """Rebuild each user's requested file; None where some bits stay unknown."""
    K = len(demand)
    out = {}
    for k in range(1, K + 1):
        want = demand[k - 1]
        buf = np.zeros(F, dtype=np.uint8)
        known = np.zeros(F, dtype=bool)
        for (n, S), frag in caches.store[k].items():
            if n == want:
                s0, s1 = caches.ranges[S]
                buf[s0:s1] = frag
                known[s0:s1] = True
        for sig in signals:
            if not sig.targets & bit(k):
                continue
            own = sig.payload.copy()
            for i, segs in sig.manifest.items():
                if i != k:
                    chunk = _concat(caches, k, segs)
                    own[:len(chunk)] ^= chunk
            pos = 0
            for seg in sig.manifest[k]:
                buf[seg.start:seg.stop] = own[pos:pos + len(seg)]
                known[seg.start:seg.stop] = True
                pos += len(seg)
        out[k] = buf if known.all() else None
    return out


@dataclass
class SimulationReport:
    F: int
    demand: list[int]
    seed: int | None
    decoded: dict[int, bool]
    total_bits: int
    per_sender_bits: dict[int, int]
    expected_load: Fraction
    audit: list[str] = field(default_factory=list)
    signals: list[Signal] = field(default_factory=list, repr=False)

    @property
    def realized_load(self) -> Fraction:
        return Fraction(self.total_bits, self.F)

    @property
    def per_sender_load(self) -> dict[int, Fraction]:
        return {j: Fraction(b, self.F) for j, b in self.per_sender_bits.items()}

    @property
    def ok(self) -> bool:
        return (all(self.decoded.values()) and not self.audit
                and self.realized_load == self.expected_load)

    def to_json(self, hexdump: bool = False) -> dict:
        out = {
            "ok": self.ok,
            "F": self.F,
            "demand": self.demand,
            "seed": self.seed,
            "decoded": {str(k): v for k, v in self.decoded.items()},
            "total_bits": self.total_bits,
            "realized_load": fmt_fraction(self.realized_load),
            "expected_load": fmt_fraction(self.expected_load),
            "per_sender_load": {str(j): fmt_fraction(x) for j, x in self.per_sender_load.items()},
            "audit": self.audit,
        }
        if hexdump:
            out["signals"] = [signal_to_json(s) for s in self.signals]
        return out


def signal_to_json(sig: Signal) -> dict:
    return {
        "j": sig.sender,
        "T": set_to_json(sig.targets),
        "bits": int(len(sig.payload)),
        "hex": np.packbits(sig.payload).tobytes().hex(),
        "manifest": {str(i): [{"file": s.file, "S": set_to_json(s.S), "range": [s.start, s.stop]}
                              for s in segs] for i, segs in sig.manifest.items()},
    }


def implied_profile(scheme: Scheme, N: int | None = None) -> CacheProfile:
    """Tightest profile the allocation fits, for schemes stored without m."""
    K = scheme.K
    return validate_profile(K, N or K, [scheme.allocation.cached(k) for k in range(1, K + 1)])


def simulate(scheme: Scheme, demand=None, seed: int | None = 0,
             profile: CacheProfile | None = None, cap: int | None = None) -> SimulationReport:
    K = scheme.K
    profile = implied_profile(scheme) if profile is None else profile
    demand = list(range(1, K + 1)) if demand is None else _check_demand(demand, K, profile.N)
    F = granularity(scheme, cap)
    library, caches = run_placement(profile, scheme.allocation, F, seed)
    signals = build_transmissions(scheme, demand, F, library, caches)
    decoded = decode_all(signals, caches, demand, F)
    verdict = {k: f is not None and np.array_equal(f, library.file(demand[k - 1]))
               for k, f in decoded.items()}
    per_sender = {j: 0 for j in range(1, K + 1)}
    for s in signals:
        per_sender[s.sender] += len(s.payload)
    return SimulationReport(F, demand, seed, verdict, sum(per_sender.values()), per_sender,
                            delivery_load(scheme.plan), sender_audit(signals), signals)


__all__ = [
    "granularity", "run_placement", "build_transmissions", "decode_all", "simulate",
    "SimulationReport", "Library", "CacheContents", "Signal", "Segment", "ZERO",
]
