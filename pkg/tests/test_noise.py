import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpcloak.errors import ConfigurationError, InsufficientDensity, IntegrityError, NoCandidates
from fpcloak.graph import OverlapGraph
from fpcloak.noise import (
    DRAWS_PER_SET,
    NoiseSet,
    RequestBundle,
    assemble_bundle,
    bundle_privacy,
    csda,
    e_csda,
    fabricate_noise,
    privacy_metric,
)
from fpcloak.world import Fingerprint, random_walk, scan, scan_many

from helpers import SENS, complete_graph


def fp_of(names, strengths=None):
    strengths = strengths or [-50.0 - 3 * i for i in range(len(names))]
    return Fingerprint(dict(zip(names, strengths)))


def two_pockets():
    """A K6 and a sparse star hanging off it."""
    g = complete_graph(6)
    g.add_vertices(["s", "t1", "t2", "t3"])
    g.add_edges([("s", "t1"), ("s", "t2"), ("s", "t3")])
    return g.recompute_coefficients()


def test_complete_graph_two_sets():
    g = complete_graph(6)
    real = fp_of(["v0", "v1", "v2"])
    sets = csda(g, real, 0.95, 2, seed=3)
    assert len(sets) == 2
    for s in sets:
        assert len(s) == 3
        assert g.is_clique(s.ap_ids)
        assert s.ap_ids != real.ap_ids
        assert s.pointer_vertex not in s.ap_ids
    assert sets[0].ap_ids != sets[1].ap_ids


def test_star_has_no_candidates():
    g = OverlapGraph()
    g.add_edges([("c", "a"), ("c", "b"), ("c", "d")])
    g.recompute_coefficients()
    with pytest.raises(NoCandidates):
        csda(g, fp_of(["a"]), 0.95, 1)


def test_insufficient_density_reports_best_degree():
    g = complete_graph(4)
    with pytest.raises(InsufficientDensity) as err:
        csda(g, fp_of(["x1", "x2", "x3", "x4", "x5"]), 0.5, 2)
    assert err.value.max_available == 3
    assert err.value.attempts == 2 * DRAWS_PER_SET


def test_exhausted_distinct_sets_raise():
    # K3 offers exactly three distinct 2-sets; one is the real set
    g = complete_graph(3)
    with pytest.raises(InsufficientDensity):
        csda(g, fp_of(["v0", "v1"]), 0.5, 3, seed=0)
    assert len(csda(g, fp_of(["v0", "v1"]), 0.5, 2, seed=0)) == 2


def test_epsilon_one_always_cliques(collected, small_field, rng):
    emitted = 0
    for t in range(1000):
        real = scan(small_field, rng.uniform(0, 150, 2), SENS)
        if not len(real):
            continue
        try:
            sets = csda(collected, real, 1.0, 2, seed=t)
        except (NoCandidates, InsufficientDensity):
            continue
        emitted += len(sets)
        assert all(collected.is_clique(s.ap_ids) for s in sets)
    assert emitted > 100


def test_strict_threshold_below_one():
    g = OverlapGraph()
    # v sits in a 2/3-dense neighbourhood, so c(v) = 2/3 exactly
    g.add_edges([("v", "a"), ("v", "b"), ("v", "c"), ("a", "b"), ("b", "c")])
    g.recompute_coefficients()
    pointers = {s.pointer_vertex for t in range(50) for s in csda(g, fp_of(["z"]), 0.6, 1, seed=t)}
    assert "v" in pointers
    for t in range(50):
        assert all(s.pointer_vertex != "v" for s in _safe_csda(g, fp_of(["z"]), 2 / 3, t))


def _safe_csda(g, real, eps, seed):
    try:
        return csda(g, real, eps, 1, seed=seed)
    except NoCandidates:
        return []


def test_csda_deterministic(collected, small_field):
    real = scan(small_field, (75.0, 75.0), SENS)
    assert csda(collected, real, 0.9, 5, seed=42) == csda(collected, real, 0.9, 5, seed=42)


def test_csda_h_zero_and_bad_inputs(collected):
    assert csda(collected, fp_of(["q"]), 0.9, 0) == []
    with pytest.raises(ConfigurationError):
        csda(collected, fp_of(["q"]), 0.9, -1)
    with pytest.raises(ConfigurationError):
        csda(collected, Fingerprint({}), 0.9, 1)


def test_strengths_within_real_range(collected, small_field):
    real = scan(small_field, (75.0, 75.0), SENS)
    lo, hi = min(real.observations.values()), max(real.observations.values())
    for s in csda(collected, real, 0.9, 6, seed=1):
        assert set(s.synthesized_strengths) == s.ap_ids
        assert all(lo <= v <= hi for v in s.synthesized_strengths.values())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 8), st.floats(0.0, 1.0))
def test_bundle_sets_pairwise_distinct(seed, h, eps):
    g = complete_graph(9)
    real = fp_of(["v0", "v3", "v5"])
    try:
        sets = csda(g, real, eps, h, seed=seed)
    except InsufficientDensity:
        return
    ids = [s.ap_ids for s in sets] + [real.ap_ids]
    assert len(set(ids)) == len(ids)
    assert privacy_metric(sum(len(s) for s in sets), len(real)) == h


def test_e_csda_stays_adjacent_in_k8():
    g = complete_graph(8)
    real = fp_of(["v0", "v1", "v2"])
    prev = csda(g, real, 0.9, 3, seed=1)
    nxt = e_csda(g, real, prev, 0.9, seed=2)
    for p, n in zip(prev, nxt):
        assert n.pointer_vertex in p.ap_ids
        assert n.ap_ids <= g.neighbors(n.pointer_vertex)
        assert not n.fallback


def test_e_csda_fallback_from_sparse_pocket():
    g = two_pockets()
    real = fp_of(["v0", "v1"])
    prev = [NoiseSet(frozenset({"t1", "t2"}), "s", {"t1": -50.0, "t2": -55.0})]
    (nxt,) = e_csda(g, real, prev, 0.95, seed=0)
    assert nxt.fallback
    assert g.is_clique(nxt.ap_ids)


def test_e_csda_needs_previous(collected):
    with pytest.raises(ConfigurationError):
        e_csda(collected, fp_of(["a"]), [], 0.5)


def test_e_csda_chain_along_walk(collected, small_field):
    walk = random_walk(small_field, (75.0, 75.0), 50, 4.0, 8)
    prev = None
    for k, fp in enumerate(scan_many(small_field, walk.steps, SENS)):
        if not len(fp):
            continue
        try:
            cur = csda(collected, fp, 0.5, 3, seed=k) if prev is None else e_csda(collected, fp, prev, 0.5, seed=k)
        except (NoCandidates, InsufficientDensity):
            continue
        if prev is not None:
            for p, n in zip(prev, cur):
                if not n.fallback:
                    assert n.pointer_vertex in p.ap_ids
                    assert n.ap_ids <= collected.neighbors(n.pointer_vertex)
        prev = cur


def test_bundle_h_zero():
    real = fp_of(["a", "b"])
    b = assemble_bundle(real, [], seed=4)
    assert b.sets == (real.observations,)
    assert b.real_index == 0
    assert bundle_privacy(b) == 0


def test_bundle_shuffle_is_uniform():
    g = complete_graph(7)
    real = fp_of(["v0", "v1"])
    noise = csda(g, real, 0.5, 4, seed=0)
    counts = np.bincount([assemble_bundle(real, noise, seed=s).real_index for s in range(10_000)], minlength=5)
    p = 0.2
    sd = np.sqrt(10_000 * p * (1 - p))
    assert np.all(np.abs(counts - 10_000 * p) < 3 * sd)


def test_bundle_cardinality_mismatch():
    real = fp_of(["a", "b"])
    with pytest.raises(IntegrityError):
        assemble_bundle(real, [NoiseSet(frozenset({"c"}), "d", {"c": -50.0})])
    with pytest.raises(IntegrityError):
        RequestBundle(({"a": -1.0}, {"b": -1.0, "c": -2.0}), 0)


def test_wire_record_hides_truth(collected, small_field):
    real = scan(small_field, (75.0, 75.0), SENS)
    b = assemble_bundle(real, csda(collected, real, 0.5, 3, seed=0), seed=0, session_id="s1")
    wire = b.wire_record()
    assert "real_index" not in wire
    assert wire["sets"][b.real_index] == real.observations
    assert b.truth_record() == {"session_id": "s1", "real_index": b.real_index}


def test_privacy_metric():
    assert privacy_metric(15, 5) == 3
    assert privacy_metric(0, 5) == 0
    with pytest.raises(IntegrityError):
        privacy_metric(7, 5)
    with pytest.raises(ConfigurationError):
        privacy_metric(5, 0)


def test_bundle_privacy_equals_h(collected, small_field):
    real = scan(small_field, (75.0, 75.0), SENS)
    b = assemble_bundle(real, csda(collected, real, 0.3, 7, seed=2), seed=1)
    assert bundle_privacy(b) == 7


def test_fabricated_ids_are_foreign(small_field):
    real = scan(small_field, (75.0, 75.0), SENS)
    known = set(small_field.ids)
    for s in fabricate_noise(real, 5, seed=1):
        assert len(s) == len(real)
        assert not s.ap_ids & known
