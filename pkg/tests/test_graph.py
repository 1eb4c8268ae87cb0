import threading

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpcloak import oracles
from fpcloak.errors import ConfigurationError
from fpcloak.graph import OverlapGraph, brute_force_clique, is_clique, load_graph, save_graph, scsoa_update
from fpcloak.world import Fingerprint, random_walk, scan_many

from helpers import TAU, complete_graph


def graph_from_edges(nodes, edges):
    g = OverlapGraph()
    g.add_vertices(nodes)
    g.add_edges(edges)
    return g.recompute_coefficients()


@st.composite
def random_graphs(draw, max_nodes=12):
    n = draw(st.integers(0, max_nodes))
    names = [f"n{i}" for i in range(n)]
    pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return graph_from_edges(names, [p for p, keep in zip(pairs, mask) if keep])


def test_scsoa_trace():
    g = OverlapGraph()
    added = g.scsoa_update({"A": -40.0, "B": -45.0, "C": -80.0}, -70.0)
    assert set(g.vertices) == {"A", "B", "C"}
    assert list(g.edges()) == [("A", "B")]
    assert added == 1
    assert g.coefficients_dirty


def test_scsoa_single_ap():
    g = scsoa_update(OverlapGraph(), Fingerprint({"A": -40.0}), -70.0)
    assert g.vertices == ["A"]
    assert g.n_edges == 0


def test_scsoa_skips_existing_edges_and_continues():
    g = OverlapGraph()
    g.scsoa_update({"A": -40.0, "B": -45.0}, -70.0)
    # the first pair is already adjacent; the rest of the scan must still be processed
    added = g.scsoa_update({"A": -40.0, "B": -45.0, "C": -50.0}, -70.0)
    assert added == 2
    assert g.is_clique({"A", "B", "C"})


def test_scsoa_rejects_nonfinite_tau():
    with pytest.raises(ConfigurationError):
        OverlapGraph().scsoa_update({"A": -40.0}, float("nan"))


def test_dense_walk_scans_are_cliques(small_field):
    g = OverlapGraph()
    walk = random_walk(small_field, (70.0, 70.0), 400, 3.0, 2)
    for fp in scan_many(small_field, walk.steps, TAU):
        g.scsoa_update(fp.observations, TAU)
        assert g.is_clique(fp.ap_ids)


def test_triangle_coefficients():
    g = complete_graph(3)
    assert g.coefficient_table() == {"v0": 1.0, "v1": 1.0, "v2": 1.0}


def test_star_coefficients():
    g = graph_from_edges(["c", "a", "b", "d"], [("c", "a"), ("c", "b"), ("c", "d")])
    assert all(v == 0.0 for v in g.coefficient_table().values())


def test_two_of_three_neighbour_pairs():
    g = graph_from_edges(["v", "a", "b", "c"], [("v", "a"), ("v", "b"), ("v", "c"), ("a", "b"), ("b", "c")])
    assert g.coefficient_table()["v"] == pytest.approx(2 / 3)


def test_dirty_flag_and_strict_table():
    g = complete_graph(3)
    g.scsoa_update({"v0": -40.0, "x": -40.0}, -70.0)
    assert g.coefficients_dirty
    # stale cache is served unless strict
    assert "x" not in g.coefficient_table()
    assert g.coefficient_table(strict=True)["x"] == 0.0
    assert not g.coefficients_dirty


@settings(max_examples=60, deadline=None)
@given(random_graphs())
def test_coefficients_match_networkx(g):
    ref = nx.Graph()
    ref.add_nodes_from(g.vertices)
    ref.add_edges_from(g.edges())
    expect = nx.clustering(ref)
    table = g.coefficient_table()
    for v in g.vertices:
        assert table[v] == pytest.approx(expect[v])
        assert 0.0 <= table[v] <= 1.0


@settings(max_examples=60, deadline=None)
@given(random_graphs())
def test_unit_coefficient_means_clique_neighbourhood(g):
    for v, c in g.coefficient_table().items():
        if c == 1.0:
            assert g.is_clique(g.neighbors(v))


def test_is_clique_small_cases():
    g = graph_from_edges(["a", "b", "c"], [("a", "b")])
    assert is_clique(g, {"c"})
    assert is_clique(g, set())
    assert not is_clique(g, {"a", "c"})
    assert not is_clique(g, {"a", "zz"})


@given(st.integers(1, 9), st.data())
def test_subsets_of_complete_graph_are_cliques(n, data):
    g = complete_graph(n)
    s = data.draw(st.sets(st.sampled_from(g.vertices)))
    assert g.is_clique(s)


def test_brute_force_path_has_no_triangle():
    g = graph_from_edges(list("abcd"), [("a", "b"), ("b", "c"), ("c", "d")])
    assert brute_force_clique(g, 3) is None


def test_brute_force_k4():
    g = complete_graph(4)
    s = brute_force_clique(g, 3, seed=5)
    assert len(s) == 3 and g.is_clique(s)


def test_brute_force_m_larger_than_graph():
    assert brute_force_clique(complete_graph(3), 4) is None


def test_brute_force_rejects_nonpositive_m():
    with pytest.raises(ConfigurationError):
        brute_force_clique(complete_graph(3), 0)


def test_brute_force_agrees_with_backtracking_on_gnp():
    for seed in range(30):
        ref = nx.gnp_random_graph(20, 0.4, seed=seed)
        g = graph_from_edges([str(v) for v in ref.nodes], [(str(a), str(b)) for a, b in ref.edges])
        got = brute_force_clique(g, 4, seed=seed)
        assert (got is not None) == oracles.has_clique(g, 4)
        if got is not None:
            assert len(got) == 4 and oracles.pairwise_clique(g, got)


@settings(max_examples=40, deadline=None)
@given(random_graphs(10), st.integers(1, 5), st.integers(0, 1000))
def test_brute_force_result_is_clique(g, m, seed):
    got = brute_force_clique(g, m, seed=seed)
    assert (got is not None) == oracles.has_clique(g, m)
    if got is not None:
        assert len(got) == m and g.is_clique(got)


def test_graph_roundtrip(tmp_path, collected):
    p = tmp_path / "g.json"
    save_graph(collected, p)
    back = load_graph(p)
    assert back.vertices == collected.vertices
    assert list(back.edges()) == list(collected.edges())
    assert back.coefficient_table() == collected.coefficient_table()
    assert back.digest() == collected.digest()


def test_dirty_graph_roundtrip_keeps_flag(tmp_path):
    g = OverlapGraph()
    g.scsoa_update({"a": -40.0, "b": -40.0}, -70.0)
    p = tmp_path / "g.json"
    save_graph(g, p)
    assert load_graph(p).coefficients_dirty


def test_copy_is_independent(collected):
    c = collected.copy()
    c.scsoa_update({"new1": -40.0, "new2": -40.0}, -70.0)
    assert "new1" not in collected


def test_concurrent_writers_do_not_lose_edges():
    g = OverlapGraph()

    def writer(k):
        for i in range(200):
            g.scsoa_update({f"a{k}_{i}": -40.0, f"b{k}_{i}": -40.0}, -70.0)

    threads = [threading.Thread(target=writer, args=(k,)) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert g.n_edges == 800
    assert len(g) == 1600
