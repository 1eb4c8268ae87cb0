"""Location-provider attacks on request bundles.

Attacks only see what goes over the wire: the shuffled sets of a bundle, or
the per-set locations the provider computed from them.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, Unlocatable
from .locator import LocationEstimate

LUCK = "LUCK"
DISTRIBUTION = "DISTRIBUTION"
HOMOGENEITY = "HOMOGENEITY"


@dataclass(frozen=True)
class AttackVerdict:
    chosen_index: int
    confidence: float
    attack: str
    # homogeneity only: set index the chosen chain used at every step
    chain: tuple[int, ...] = ()


@dataclass
class QueryFrequencyTable:
    counts: Counter = field(default_factory=Counter)
    total_requests: int = 0

    def record(self, sets: Iterable[Iterable[str]]) -> None:
        seen = False
        for s in sets:
            seen = True
            # iterate keys: Counter.update on a mapping would add its values
            self.counts.update(list(s))
        if seen:
            self.total_requests += 1

    def mean_frequency(self, aps: Iterable[str]) -> float:
        aps = list(aps)
        if not aps:
            return 0.0
        return sum(self.counts.get(a, 0) for a in aps) / len(aps)

    def entropy(self, universe: int | None = None) -> float:
        """Shannon entropy of the per-AP count distribution, normalised by log(universe)."""
        vals = np.array([c for c in self.counts.values() if c > 0], dtype=float)
        size = universe or len(vals)
        if len(vals) == 0 or size < 2:
            return 0.0
        p = vals / vals.sum()
        return float(-(p * np.log(p)).sum() / math.log(size))

    def copy(self) -> "QueryFrequencyTable":
        return QueryFrequencyTable(Counter(self.counts), self.total_requests)


def record_traffic(table: QueryFrequencyTable, sets: Iterable[Iterable[str]]) -> QueryFrequencyTable:
    table.record(sets)
    return table


def luck_guess(bundle_size: int, seed=0) -> AttackVerdict:
    if bundle_size < 1:
        raise ConfigurationError("bundle_size must be >= 1")
    rng = np.random.default_rng(seed)
    return AttackVerdict(int(rng.integers(bundle_size)), 1.0 / bundle_size, LUCK)


def _argmax_random_tie(scores: Sequence[float], rng: np.random.Generator) -> int:
    best = max(scores)
    winners = [i for i, s in enumerate(scores) if s == best]
    return winners[int(rng.integers(len(winners)))]


def distribution_attack(
    sets: Sequence[Iterable[str]], table: QueryFrequencyTable, seed=0
) -> AttackVerdict:
    """Pick the set whose APs were historically queried most often (mean count)."""
    sets = [list(s) for s in sets]
    if table.total_requests == 0 or not table.counts:
        return luck_guess(len(sets), seed)
    rng = np.random.default_rng(seed)
    scores = [table.mean_frequency(s) for s in sets]
    i = _argmax_random_tie(scores, rng)
    total = sum(scores)
    return AttackVerdict(i, scores[i] / total if total else 1.0 / len(sets), DISTRIBUTION)


StepResults = Sequence[tuple[int, "LocationEstimate | Unlocatable"]]


def _positions(step: StepResults) -> dict[int, tuple[float, float] | None]:
    return {i: (r.position if isinstance(r, LocationEstimate) else None) for i, r in step}


def link_chains(session: Sequence[StepResults], linkage: str = "nearest") -> list[list[int]]:
    """Split a session into per-chain set indices, one index per step.

    ``nearest`` greedily matches each chain's last located position to the
    closest location of the next step; ``index`` assumes set order is stable.
    """
    first = _positions(session[0])
    size = len(first)
    if any(len(step) != size for step in session):
        raise ConfigurationError("every step of a session must carry the same number of sets")
    if linkage == "index":
        return [[i] * len(session) for i in sorted(first)]
    if linkage != "nearest":
        raise ConfigurationError(f"unknown linkage {linkage!r}")

    chains = [[i] for i in sorted(first)]
    last = [first[i] for i in sorted(first)]
    for step in session[1:]:
        pos = _positions(step)
        located = [i for i in sorted(pos) if pos[i] is not None]
        pairs = []
        for c, lp in enumerate(last):
            if lp is None:
                continue
            for i in located:
                d = math.dist(lp, pos[i])
                pairs.append((d, c, i))
        pairs.sort()
        assigned: dict[int, int] = {}
        used: set[int] = set()
        for _, c, i in pairs:
            if c in assigned or i in used:
                continue
            assigned[c] = i
            used.add(i)
        leftovers = [i for i in located if i not in used] + [i for i in sorted(pos) if pos[i] is None]
        for c in range(size):
            if c not in assigned:
                assigned[c] = leftovers.pop(0)
        for c in range(size):
            i = assigned[c]
            chains[c].append(i)
            if pos[i] is not None:
                last[c] = pos[i]
    return chains


def chain_smoothness(
    session: Sequence[StepResults], chain: Sequence[int], max_step: float, penalty: float
) -> tuple[float, int]:
    """Negative of (step-length variance + penalty per unlocatable step or over-long jump).

    Returns the score and the number of located positions in the chain.
    """
    pts = []
    bad = 0
    for step, i in zip(session, chain):
        r = dict(step)[i]
        if isinstance(r, LocationEstimate):
            pts.append(r.position)
        else:
            bad += 1
    if len(pts) >= 2:
        lengths = np.linalg.norm(np.diff(np.asarray(pts), axis=0), axis=1)
        var = float(lengths.var())
        bad += int((lengths > max_step).sum())
    else:
        var = 0.0
    return -(var + penalty * bad), len(pts)


def homogeneity_attack(
    session: Sequence[StepResults],
    seed=0,
    *,
    linkage: str = "nearest",
    max_step: float = 30.0,
    penalty: float = 100.0,
) -> AttackVerdict:
    """Pick the index chain whose located trajectory moves most smoothly.

    The verdict's ``chosen_index`` is the chain's set index at the last step.
    """
    if len(session) < 2:
        raise ConfigurationError("homogeneity attack needs at least two steps")
    chains = link_chains(session, linkage)
    scored = [chain_smoothness(session, ch, max_step, penalty) for ch in chains]
    if all(n_loc == 0 for _, n_loc in scored):
        return luck_guess(len(chains), seed)
    rng = np.random.default_rng(seed)
    scores = [s for s, _ in scored]
    best = _argmax_random_tie(scores, rng)
    return AttackVerdict(chains[best][-1], scores[best], HOMOGENEITY, tuple(chains[best]))


def attack_record(
    experiment: str, trial: int, verdict: AttackVerdict, h: int, epsilon: float | None, real_index: int
) -> dict:
    return {
        "experiment": experiment,
        "trial": trial,
        "attack": verdict.attack,
        "h": h,
        "epsilon": epsilon,
        "chosen_index": verdict.chosen_index,
        "was_real": verdict.chosen_index == real_index,
    }
