import csv
import io
import json
import statistics
import time

import pytest

from fpcloak.errors import ConfigurationError
from fpcloak.harness import EXPERIMENTS, ExperimentConfig, load_config, run_experiment, write_report
from fpcloak.harness.experiments import derive, workbench
from fpcloak.harness.report import rows_to_csv
from fpcloak.harness.verify import run_verify
from fpcloak.noise import csda
from fpcloak.world import Fingerprint

from helpers import tiny_config


def test_default_config_validates():
    cfg = load_config()
    assert isinstance(cfg, ExperimentConfig)
    assert cfg.fixed_epsilon == 0.95 and cfg.hs == [1, 5, 10, 20]


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("trials: 17\nworld:\n  ap_count: 12\n")
    cfg = load_config(p, world={"seed": 9})
    assert cfg.trials == 17
    assert cfg.world.ap_count == 12 and cfg.world.seed == 9


@pytest.mark.parametrize("bad", [{"trials": 0}, {"epsilons": [1.5]}, {"hs": [0]}, {"unknown_knob": 1}])
def test_invalid_config(bad):
    with pytest.raises(ConfigurationError):
        load_config(**bad)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.yaml")


def test_seed_streams_distinct_and_stable():
    a = derive(1, "success", "h=1", 0).generate_state(2).tolist()
    assert a == derive(1, "success", "h=1", 0).generate_state(2).tolist()
    assert a != derive(1, "success", "h=1", 1).generate_state(2).tolist()
    assert a != derive(2, "success", "h=1", 0).generate_state(2).tolist()


def test_unknown_experiment():
    with pytest.raises(ValueError):
        run_experiment("nope", tiny_config())


def test_zero_sessions_give_zero_ratios():
    rep = run_experiment("graph-quality", tiny_config(walk={"sessions": 0}))
    first = rep.rows[0]
    assert first["vertex_ratio"] == 0.0 and first["edge_ratio"] == 0.0


def test_graph_quality_shape():
    rep = run_experiment("graph-quality", tiny_config())
    trips = [r for r in rep.rows if r["walk"] == "random"]
    assert [r["sessions"] for r in trips] == [0, 1, 2, 3]
    assert all(a["vertex_ratio"] <= b["vertex_ratio"] for a, b in zip(trips, trips[1:]))
    cover = rep.rows[-1]
    assert cover["walk"] == "coverage" and cover["vertex_ratio"] >= 0.95
    assert all(r["incorrect_vertices"] == 0 and r["incorrect_edges"] == 0 for r in rep.rows)


def test_shadowing_can_create_wrong_edges():
    rep = run_experiment("graph-quality", tiny_config(shadowing_db=6.0))
    assert sum(r["incorrect_edges"] for r in rep.rows) > 0


def test_success_rows_and_epsilon_one_cliques():
    rep = run_experiment("success", tiny_config())
    sweeps = {r["sweep"] for r in rep.rows}
    assert sweeps == {"h", "epsilon", "scale"}
    for r in rep.rows:
        if r["sweep"] == "epsilon" and r["value"] == 1.0 and r["emitting_trials"]:
            assert r["clique_rate"] == 1.0
        assert 0.0 <= r["x"] <= 1.0
    assert rep.extra_tables["success_factor"]


def test_trajectory_without_noise_always_hits():
    rep = run_experiment("trajectory", tiny_config(trajectory_h=0))
    assert all(r["hit_rate"] == 1.0 for r in rep.rows)


def test_trajectory_report_tables():
    rep = run_experiment("trajectory", tiny_config(trajectory_h=2))
    assert {r["mode"] for r in rep.rows} == {"csda", "e-csda"}
    assert rep.extra_tables["trajectory_traces"]
    assert all(a["h"] == 2 for a in rep.extra_tables["trajectory_attacks"])


def test_distribution_untrained_is_chance():
    # one tight hotspot in the small world, so query popularity is clearly skewed
    attack = {"window": 400, "protected_requests": 400, "hotspots": 1, "hotspot_spread": 15.0}
    rep = run_experiment("distribution", tiny_config(attack=attack))
    p = rep.rows[0]["baseline"]
    n = rep.provenance["untrained_trials"]
    se = (p * (1 - p) / n) ** 0.5
    assert abs(rep.provenance["untrained_hit_rate"] - p) <= 3 * se
    # popularity skew exists, so the trained attacker beats chance at the start
    assert rep.rows[0]["hit_rate"] > p


def test_cost_report_flags_timing_columns():
    rep = run_experiment("cost", tiny_config())
    assert "csda_median_s" in rep.timing_columns
    assert {r["sweep"] for r in rep.rows} == {"scale", "h"}


def test_csda_time_scales_with_h():
    bench = workbench(load_config())
    real = Fingerprint({a: -60.0 for a in bench.graph.vertices[:3]})

    def median(h):
        ts = []
        for s in range(101):
            t0 = time.perf_counter()
            csda(bench.graph, real, 0.95, h, s)
            ts.append(time.perf_counter() - t0)
        return statistics.median(ts)

    median(10)
    ratio = median(20) / median(10)
    assert 2 * 0.7 <= ratio <= 2 * 1.3


@pytest.mark.parametrize("name", ["graph-quality", "success", "trajectory", "distribution", "cost"])
def test_reruns_are_byte_identical(name, tmp_path):
    from fpcloak.harness import experiments

    outs = []
    for k in range(2):
        experiments._BENCH_CACHE.clear()
        rep = run_experiment(name, tiny_config())
        outs.append(
            [rows_to_csv(rep.rows, drop=rep.timing_columns)]
            + [rows_to_csv(t) for _, t in sorted(rep.extra_tables.items())]
        )
    assert outs[0] == outs[1]


def test_write_report(tmp_path):
    rep = run_experiment("graph-quality", tiny_config())
    paths = write_report(rep, tmp_path)
    names = {p.name for p in paths}
    assert {"graph_quality.csv", "graph_quality_summary.txt", "graph_quality_meta.json"} <= names
    rows = list(csv.DictReader(io.StringIO((tmp_path / "graph_quality.csv").read_text())))
    assert rows and rows[0]["schema_version"] == "1"
    meta = json.loads((tmp_path / "graph_quality_meta.json").read_text())
    assert meta["master_seed"] == 5 and "graph_digest" in meta


def test_every_experiment_registered():
    assert set(EXPERIMENTS) == {"graph-quality", "success", "cost", "trajectory", "distribution"}


def test_verify_suite_passes():
    checks = run_verify(1)
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]
