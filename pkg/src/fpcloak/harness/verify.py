"""Oracle-equivalence checks: fast code paths against the slow references in ``oracles``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import oracles
from ..errors import InsufficientDensity, NoCandidates
from ..graph import OverlapGraph, brute_force_clique
from ..locator import build_radio_map, locate_pbl
from ..noise import csda
from ..world import Fingerprint, generate_field, ground_truth_graph, random_walk, scan


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _small_world(seed: int):
    return generate_field(40, (150.0, 150.0), "clustered", seed, path_loss_exponent=3.0, cluster_size=6.0)


def check_scan(seed: int, positions: int = 500) -> Check:
    f = _small_world(seed)
    rng = np.random.default_rng(seed)
    bad = 0
    for p in rng.uniform((0, 0), f.bounds, size=(positions, 2)):
        if set(scan(f, p, -80.0).ap_ids) != oracles.scan_members(f, p, -80.0):
            bad += 1
    return Check("scan membership", bad == 0, f"{bad}/{positions} mismatches")


def check_ground_truth(seed: int, tau: float = -75.0) -> Check:
    f = _small_world(seed)
    fast = set(ground_truth_graph(f, tau).edges())
    witnessed, marginal = oracles.sampled_overlap_edges(f, tau)
    missing = witnessed - fast
    extra = fast - witnessed - marginal
    return Check(
        "ground-truth edges",
        not missing and not extra,
        f"{len(fast)} edges, {len(marginal)} marginal pairs skipped, {len(missing)} missing, {len(extra)} extra",
    )


def _collected(seed: int, tau: float = -75.0):
    f = _small_world(seed)
    g = OverlapGraph()
    walk = random_walk(f, (75.0, 75.0), 600, 4.0, seed)
    for p in walk:
        g.scsoa_update(scan(f, p, -80.0).observations, tau)
    return f, g.recompute_coefficients()


def check_coefficients(seed: int) -> Check:
    _, g = _collected(seed)
    table = g.coefficient_table(strict=True)
    worst = max((abs(table[v] - oracles.local_coefficient(g, v)) for v in g.vertices), default=0.0)
    return Check("clustering coefficients", worst < 1e-12, f"max deviation {worst:.2e} over {len(g)} vertices")


def check_csda_cliques(seed: int, trials: int = 200) -> Check:
    f, g = _collected(seed)
    rng = np.random.default_rng(seed)
    emitted = bad = 0
    for t in range(trials):
        fp = scan(f, rng.uniform((0, 0), f.bounds), -80.0)
        if not len(fp):
            continue
        try:
            sets = csda(g, fp, 1.0, 3, seed=[seed, t])
        except (NoCandidates, InsufficientDensity):
            continue
        for s in sets:
            emitted += 1
            bad += not (g.is_clique(s.ap_ids) and oracles.pairwise_clique(g, s.ap_ids))
    return Check("CSDA clique guarantee", bad == 0 and emitted > 0, f"{bad}/{emitted} non-clique sets")


def check_brute_force(seed: int) -> Check:
    _, g = _collected(seed)
    bad = 0
    for m in range(1, 7):
        got = brute_force_clique(g, m, seed=seed)
        exists = oracles.has_clique(g, m)
        if (got is not None) != exists or (got is not None and (len(got) != m or not oracles.pairwise_clique(g, got))):
            bad += 1
    return Check("brute-force clique", bad == 0, f"{bad}/6 sizes disagree with backtracking search")


def check_pbl(seed: int, fingerprints: int = 30) -> Check:
    f = _small_world(seed)
    rmap = build_radio_map(f, 5.0, -80.0)
    rng = np.random.default_rng(seed)
    bad = checked = 0
    for p in rng.uniform((0, 0), f.bounds, size=(fingerprints * 3, 2)):
        fp = scan(f, p, -80.0)
        if not len(fp):
            continue
        checked += 1
        est = locate_pbl(rmap, fp)
        i, ll = oracles.pbl_best(rmap, fp.observations)
        if abs(est.score - ll) > 1e-3 * max(1.0, abs(ll)):
            bad += 1
        if checked == fingerprints:
            break
    return Check("PBL maximum likelihood", bad == 0, f"{bad}/{checked} likelihood mismatches")


def check_containment(seed: int, positions: int = 2000, tau: float = -75.0) -> Check:
    f = _small_world(seed)
    gt = ground_truth_graph(f, tau)
    rng = np.random.default_rng(seed)
    bad = 0
    for p in rng.uniform((0, 0), f.bounds, size=(positions, 2)):
        if not gt.is_clique(scan(f, p, tau).ap_ids):
            bad += 1
    return Check("scan containment at sensitivity = tau", bad == 0, f"{bad}/{positions} scans not cliques")


CHECKS = (
    check_scan,
    check_ground_truth,
    check_coefficients,
    check_csda_cliques,
    check_brute_force,
    check_pbl,
    check_containment,
)


def run_verify(seed: int = 0) -> list[Check]:
    return [c(seed) for c in CHECKS]
