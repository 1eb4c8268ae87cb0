"""Slow, independent re-implementations used to cross-check the fast paths.

Nothing here shares code with the modules it checks beyond the data types.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

from .graph import OverlapGraph
from .locator import IMPUTE_OFFSET_DB, RadioMap
from .world import ApField


def ap_signal(tx: float, dx: float, dy: float, gamma: float) -> float:
    d = max(math.sqrt(dx * dx + dy * dy), 1.0)
    return tx - 10.0 * gamma * math.log10(d)


def scan_members(field: ApField, pos, sensitivity: float) -> set[str]:
    """AP ids audible at ``pos``, one AP at a time."""
    x, y = float(pos[0]), float(pos[1])
    return {
        ap.id
        for ap in field.aps
        if ap_signal(ap.tx_power, x - ap.x, y - ap.y, field.path_loss_exponent) >= sensitivity
    }


def sampled_overlap_edges(
    field: ApField, threshold: float, resolution: float = 0.5
) -> tuple[set[tuple[str, str]], set[tuple[str, str]]]:
    """Edges witnessed by a common grid point where both APs reach ``threshold``.

    Returns ``(witnessed, marginal)``: pairs whose coverage disks overlap by
    less than two grid cells can be missed by sampling, so they are reported
    separately instead of being counted either way.
    """
    xs = np.arange(0.0, field.width + resolution / 2, resolution)
    ys = np.arange(0.0, field.height + resolution / 2, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    covered = []
    for ap in field.aps:
        d = np.maximum(np.hypot(pts[:, 0] - ap.x, pts[:, 1] - ap.y), 1.0)
        ss = ap.tx_power - 10.0 * field.path_loss_exponent * np.log10(d)
        covered.append(set(np.flatnonzero(ss >= threshold).tolist()))
    radius = [
        10 ** ((ap.tx_power - threshold) / (10 * field.path_loss_exponent)) if ap.tx_power >= threshold else 0.0
        for ap in field.aps
    ]
    witnessed, marginal = set(), set()
    slack = 2 * math.sqrt(2) * resolution
    aps = field.aps
    for i in range(len(aps)):
        for j in range(i + 1, len(aps)):
            gap = math.dist(aps[i].position, aps[j].position) - (radius[i] + radius[j])
            pair = tuple(sorted((aps[i].id, aps[j].id)))
            if abs(gap) <= slack:
                marginal.add(pair)
            elif covered[i] & covered[j]:
                witnessed.add(pair)
    return witnessed, marginal


def has_clique(g: OverlapGraph, m: int) -> bool:
    """Backtracking search for any m-clique; extends candidates in sorted order."""
    if m <= 0:
        return True
    verts = g.vertices

    def extend(chosen: list[str], cands: list[str]) -> bool:
        if len(chosen) == m:
            return True
        for k, v in enumerate(cands):
            if len(chosen) + len(cands) - k < m:
                return False
            nb = g.neighbors(v)
            if extend(chosen + [v], [u for u in cands[k + 1 :] if u in nb]):
                return True
        return False

    return extend([], verts)


def pairwise_clique(g: OverlapGraph, members: Iterable[str]) -> bool:
    ms = list(members)
    if any(v not in g for v in ms):
        return False
    return all(g.has_edge(ms[i], ms[j]) for i in range(len(ms)) for j in range(i + 1, len(ms)))


def local_coefficient(g: OverlapGraph, v: str) -> float:
    nb = g.sorted_neighbors(v)
    k = len(nb)
    if k < 2:
        return 0.0
    links = sum(1 for i in range(k) for j in range(i + 1, k) if g.has_edge(nb[i], nb[j]))
    return links / (k * (k - 1) / 2)


def pbl_best(rmap: RadioMap, observations: Mapping[str, float], sigma: float = 4.0) -> tuple[int, float]:
    """Exhaustive maximum-likelihood point, first index wins ties. Returns (index, loglik)."""
    floor = rmap.sensitivity - IMPUTE_OFFSET_DB
    best_i, best_ll = -1, -math.inf
    for i in range(len(rmap)):
        sig = rmap.signature(i)
        ll = 0.0
        for ap, ss in observations.items():
            ref = sig.get(ap, floor)
            # signatures are stored as float32
            ref = float(np.float32(ref))
            ll -= (float(np.float32(ss)) - ref) ** 2 / (2 * sigma**2)
        if ll > best_ll:
            best_i, best_ll = i, ll
    return best_i, best_ll
