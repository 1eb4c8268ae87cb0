"""Noise-fingerprint generation (single-shot and trajectory-chained) and bundle assembly."""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, InsufficientDensity, IntegrityError, NoCandidates
from .graph import OverlapGraph
from .world import Fingerprint

DRAWS_PER_SET = 32
RESAMPLES_PER_POINTER = 4


@dataclass(frozen=True)
class NoiseSet:
    ap_ids: frozenset[str]
    pointer_vertex: str
    synthesized_strengths: Mapping[str, float] = field(default_factory=dict, compare=False)
    # e-CSDA only: the chain from the previous set was broken and this set was drawn afresh
    fallback: bool = False

    def __post_init__(self):
        if self.pointer_vertex in self.ap_ids:
            raise IntegrityError("pointer vertex must not be part of its own noise set")

    def __len__(self) -> int:
        return len(self.ap_ids)

    def as_observations(self) -> dict[str, float]:
        return {ap: float(self.synthesized_strengths[ap]) for ap in sorted(self.ap_ids)}


@dataclass(frozen=True)
class RequestBundle:
    """h+1 same-size fingerprint sets in shuffled order.

    ``real_index`` is simulator-side truth; the wire record omits it.
    """

    sets: tuple[Mapping[str, float], ...]
    real_index: int
    session_id: str = ""

    def __post_init__(self):
        if not 0 <= self.real_index < len(self.sets):
            raise IntegrityError(f"real_index {self.real_index} out of range for {len(self.sets)} sets")
        sizes = {len(s) for s in self.sets}
        if len(sizes) > 1:
            raise IntegrityError(f"bundle sets have unequal cardinalities {sorted(sizes)}")

    @property
    def h(self) -> int:
        return len(self.sets) - 1

    def wire_record(self) -> dict:
        return {"session_id": self.session_id, "sets": [dict(s) for s in self.sets]}

    def truth_record(self) -> dict:
        return {"session_id": self.session_id, "real_index": self.real_index}


def _candidates(coeffs: Mapping[str, float], epsilon: float) -> list[str]:
    # c > epsilon as in the CSDA candidate rule; c == 1 is admitted so that
    # epsilon = 1.0 selects perfectly clustered pointers instead of nothing.
    return sorted(v for v, c in coeffs.items() if c > epsilon or c >= 1.0)


def _synthesize(ap_ids: Sequence[str], real: Mapping[str, float], rng: np.random.Generator) -> dict[str, float]:
    vals = list(real.values())
    lo, hi = min(vals), max(vals)
    draws = rng.uniform(lo, hi, size=len(ap_ids)) if hi > lo else np.full(len(ap_ids), lo)
    return {ap: float(v) for ap, v in zip(ap_ids, draws)}


def _sample_neighbors(
    g: OverlapGraph, pointer: str, n: int, taken: set[frozenset[str]], rng: np.random.Generator
) -> frozenset[str] | None:
    nbrs = g.sorted_neighbors(pointer)
    if len(nbrs) < n:
        return None
    for _ in range(RESAMPLES_PER_POINTER):
        pick = frozenset(nbrs[i] for i in rng.choice(len(nbrs), size=n, replace=False))
        if pick not in taken:
            return pick
    return None


def csda(
    g: OverlapGraph,
    real: Fingerprint,
    epsilon: float,
    h: int,
    seed=0,
    *,
    strict: bool = False,
) -> list[NoiseSet]:
    """Draw ``h`` noise sets, each ``len(real)`` neighbours of a high-coefficient pointer.

    Pointers are drawn uniformly (with replacement) from vertices whose cached
    clustering coefficient exceeds ``epsilon``; a pointer with too few
    neighbours is re-drawn. Sets equal to the real set or to an earlier set in
    the same call are re-drawn too. At most ``32 * h`` pointer draws are made.
    """
    if h < 0:
        raise ConfigurationError("h must be >= 0")
    n = len(real)
    if n < 1:
        raise ConfigurationError("real fingerprint is empty")
    rng = np.random.default_rng(seed)
    if h == 0:
        return []
    coeffs = g.coefficient_table(strict)
    pool = _candidates(coeffs, epsilon)
    if not pool:
        raise NoCandidates(epsilon)
    taken = {real.ap_ids}
    return _csda_fill(g, real, pool, h, taken, rng)


def _csda_fill(
    g: OverlapGraph,
    real: Fingerprint,
    pool: list[str],
    h: int,
    taken: set[frozenset[str]],
    rng: np.random.Generator,
    fallback: bool = False,
) -> list[NoiseSet]:
    n = len(real)
    budget = DRAWS_PER_SET * h
    attempts = 0
    out: list[NoiseSet] = []
    while len(out) < h:
        if attempts >= budget:
            best = max(g.degree(v) for v in pool)
            raise InsufficientDensity(n, best, attempts)
        pointer = pool[rng.integers(len(pool))]
        attempts += 1
        pick = _sample_neighbors(g, pointer, n, taken, rng)
        if pick is None:
            continue
        taken.add(pick)
        ordered = sorted(pick)
        out.append(NoiseSet(pick, pointer, _synthesize(ordered, real.observations, rng), fallback))
    return out


def e_csda(
    g: OverlapGraph,
    real: Fingerprint,
    prev: Sequence[NoiseSet],
    epsilon: float,
    seed=0,
    *,
    strict: bool = False,
) -> list[NoiseSet]:
    """Chain each previous noise set into a new one anchored on one of its members.

    A member qualifies as the new pointer when its coefficient is >= ``epsilon``
    and it has at least ``len(real)`` neighbours. Members are tried in random
    order; if none qualifies the slot is refilled by a plain CSDA draw and the
    resulting set is marked ``fallback``.
    """
    if not prev:
        raise ConfigurationError("e_csda needs the previous noise sets")
    n = len(real)
    if n < 1:
        raise ConfigurationError("real fingerprint is empty")
    rng = np.random.default_rng(seed)
    coeffs = g.coefficient_table(strict)
    taken = {real.ap_ids}
    out: list[NoiseSet] = []
    for previous in prev:
        members = sorted(previous.ap_ids)
        made = None
        for i in rng.permutation(len(members)):
            v = members[i]
            if v not in coeffs or coeffs[v] < epsilon or g.degree(v) < n:
                continue
            pick = _sample_neighbors(g, v, n, taken, rng)
            if pick is None:
                continue
            made = NoiseSet(pick, v, _synthesize(sorted(pick), real.observations, rng))
            break
        if made is None:
            pool = _candidates(coeffs, epsilon)
            if not pool:
                raise NoCandidates(epsilon)
            made = _csda_fill(g, real, pool, 1, taken, rng, fallback=True)[0]
        taken.add(made.ap_ids)
        out.append(made)
    return out


def fabricate_noise(real: Fingerprint, h: int, seed=0) -> list[NoiseSet]:
    """Control mode: noise sets of random, never-deployed AP identifiers."""
    rng = np.random.default_rng(seed)
    n = len(real)
    out = []
    for _ in range(h):
        raw = rng.integers(0, 256, size=(n + 1, 6))
        # globally administered prefix 0x06 keeps these disjoint from field ids (0x02)
        ids = [":".join(f"{b:02x}" for b in [0x06, *row[1:]]) for row in raw]
        out.append(NoiseSet(frozenset(ids[1:]), ids[0], _synthesize(ids[1:], real.observations, rng)))
    return out


def assemble_bundle(
    real: Fingerprint, noise: Sequence[NoiseSet], seed=0, session_id: str | None = None
) -> RequestBundle:
    n = len(real)
    for s in noise:
        if len(s) != n:
            raise IntegrityError(f"noise set of size {len(s)} does not match real size {n}")
    rng = np.random.default_rng(seed)
    sets: list[dict[str, float]] = [dict(real.observations)]
    for s in noise:
        if set(s.synthesized_strengths) >= s.ap_ids:
            sets.append(s.as_observations())
        else:
            sets.append(_synthesize(sorted(s.ap_ids), real.observations, rng))
    order = rng.permutation(len(sets))
    shuffled = tuple(sets[i] for i in order)
    real_index = int(np.flatnonzero(order == 0)[0])
    if session_id is None:
        session_id = uuid.UUID(bytes=rng.bytes(16), version=4).hex
    return RequestBundle(shuffled, real_index, session_id)


def privacy_metric(k: int, n: int) -> int:
    """Number of decoy locations carried by a request: total noise APs over real size."""
    if n < 1:
        raise ConfigurationError("real fingerprint size must be >= 1")
    if k < 0 or k % n:
        raise IntegrityError(f"{k} noise APs is not a whole number of {n}-AP sets")
    return k // n


def bundle_privacy(bundle: RequestBundle) -> int:
    n = len(bundle.sets[0])
    k = sum(len(s) for s in bundle.sets) - n
    return privacy_metric(k, n)
