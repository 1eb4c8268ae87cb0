"""Experiment runners wiring world -> graph -> noise -> locator -> adversary."""

from __future__ import annotations

import hashlib
import json
import math
import statistics
import time
import zlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .. import adversary as adv
from ..errors import InsufficientDensity, NoCandidates
from ..graph import BruteForceTimeout, OverlapGraph, brute_force_clique, scsoa_update
from ..locator import LocationEstimate, RadioMap, build_radio_map, locate, noise_succeeds, serve_bundle
from ..noise import NoiseSet, assemble_bundle, csda, e_csda
from ..world import ApField, Fingerprint, generate_field, ground_truth_graph, random_walk, scan, scan_many
from .config import ExperimentConfig

SCHEMA_VERSION = 1
EXPERIMENTS = ("graph-quality", "success", "cost", "trajectory", "distribution")


@dataclass
class ExperimentReport:
    experiment: str
    rows: list[dict]
    seeds: dict
    provenance: dict = field(default_factory=dict)
    # columns holding wall-clock measurements; excluded from determinism checks
    timing_columns: tuple[str, ...] = ()
    extra_tables: dict[str, list[dict]] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)


# -- seeding -------------------------------------------------------------
def _key(k) -> int:
    if isinstance(k, (int, np.integer)):
        return int(k) & 0xFFFFFFFF
    return zlib.crc32(str(k).encode())


def derive(master: int, *keys) -> np.random.SeedSequence:
    """Independent, reproducible stream for one (experiment, cell, trial) coordinate."""
    return np.random.SeedSequence([int(master) & 0xFFFFFFFF, *(_key(k) for k in keys)])


# -- shared world ----------------------------------------------------------
@dataclass
class Workbench:
    field: ApField
    truth: OverlapGraph
    sessions: list[list[dict[str, float]]]
    snapshots: list[OverlapGraph]
    radio_map: RadioMap

    @property
    def graph(self) -> OverlapGraph:
        return self.snapshots[-1]

    def graph_from_prefix(self, n_scans: int, tau: float) -> OverlapGraph:
        g = OverlapGraph()
        left = n_scans
        for session in self.sessions:
            for obs in session[:left]:
                g.scsoa_update(obs, tau)
            left -= len(session)
            if left <= 0:
                break
        return g.recompute_coefficients()


_BENCH_CACHE: dict[str, Workbench] = {}


def _bench_key(cfg: ExperimentConfig) -> str:
    relevant = {
        "world": cfg.world.model_dump(),
        "tau": cfg.tau,
        "sensitivity": cfg.sensitivity,
        "shadowing_db": cfg.shadowing_db,
        "grid_spacing": cfg.grid_spacing,
        "walk": cfg.walk.model_dump(include={"sessions", "session_steps", "collect_step_length"}),
        "seed": cfg.seed,
    }
    return hashlib.sha256(json.dumps(relevant, sort_keys=True).encode()).hexdigest()


def make_field(cfg: ExperimentConfig) -> ApField:
    w = cfg.world
    return generate_field(
        w.ap_count,
        (w.width, w.height),
        w.placement,
        w.seed,
        path_loss_exponent=w.path_loss_exponent,
        tx_range=(w.tx_low, w.tx_high),
        cluster_size=w.cluster_size,
        cluster_spread=w.cluster_spread,
        background_fraction=w.background_fraction,
    )


def collection_scans(f: ApField, cfg: ExperimentConfig, session: int) -> list[dict[str, float]]:
    """Scans of one volunteer trip, in walking order."""
    rng = np.random.default_rng(derive(cfg.seed, "collect-start", session))
    start = rng.uniform((0.0, 0.0), (f.width, f.height))
    walk = random_walk(
        f, start, cfg.walk.session_steps, cfg.walk.collect_step_length, derive(cfg.seed, "collect-walk", session)
    )
    if cfg.shadowing_db > 0:
        srng = np.random.default_rng(derive(cfg.seed, "shadow", session))
        return [dict(scan(f, p, cfg.sensitivity, shadowing_db=cfg.shadowing_db, rng=srng).observations) for p in walk]
    return [dict(fp.observations) for fp in scan_many(f, walk.steps, cfg.sensitivity)]


def workbench(cfg: ExperimentConfig) -> Workbench:
    key = _bench_key(cfg)
    if key in _BENCH_CACHE:
        return _BENCH_CACHE[key]
    f = make_field(cfg)
    truth = ground_truth_graph(f, cfg.tau)
    g = OverlapGraph()
    sessions, snaps = [], []
    for s in range(cfg.walk.sessions):
        scans = collection_scans(f, cfg, s)
        for obs in scans:
            g.scsoa_update(obs, cfg.tau)
        sessions.append(scans)
        snaps.append(g.copy().recompute_coefficients())
    if not snaps:
        snaps.append(g.copy().recompute_coefficients())
    bench = Workbench(f, truth, sessions, snaps, build_radio_map(f, cfg.grid_spacing, cfg.sensitivity))
    _BENCH_CACHE[key] = bench
    return bench


def _provenance(cfg: ExperimentConfig, bench: Workbench | None = None) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "config_sha256": hashlib.sha256(cfg.model_dump_json().encode()).hexdigest()[:16],
        "master_seed": cfg.seed,
    }
    if bench is not None:
        out["graph_digest"] = bench.graph.digest()
        out["truth_digest"] = bench.truth.digest()
    return out


def request_positions(
    f: ApField, cfg: ExperimentConfig, count: int, tag: str, min_aps: int = 1
) -> list[Fingerprint]:
    """Uniform positions at which the device senses at least ``min_aps`` APs."""
    rng = np.random.default_rng(derive(cfg.seed, "requests", tag))
    out: list[Fingerprint] = []
    while len(out) < count:
        pts = rng.uniform((0.0, 0.0), (f.width, f.height), size=(4 * (count - len(out)) + 16, 2))
        for fp in scan_many(f, pts, cfg.sensitivity):
            if len(fp) >= min_aps:
                out.append(fp)
                if len(out) == count:
                    break
    return out


def _rate(values: list[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    a = np.asarray(values, dtype=float)
    se = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
    return float(a.mean()), se


# -- graph quality --------------------------------------------------------
def exp_graph_quality(cfg: ExperimentConfig) -> ExperimentReport:
    bench = workbench(cfg)
    truth = bench.truth
    tv, te = len(truth), truth.n_edges
    true_edges = set(truth.edges())
    rows = [_quality_row(0, "random", OverlapGraph(), tv, te, true_edges, truth)]
    for t, g in enumerate(bench.snapshots[: cfg.walk.sessions], start=1):
        rows.append(_quality_row(t, "random", g, tv, te, true_edges, truth))
    # one exhaustive sweep on top of the trips
    from ..world import coverage_walk

    g = bench.graph.copy() if cfg.walk.sessions else OverlapGraph()
    sweep = coverage_walk(bench.field, cfg.grid_spacing)
    for fp in scan_many(bench.field, sweep.steps, cfg.sensitivity):
        g.scsoa_update(fp.observations, cfg.tau)
    rows.append(_quality_row(cfg.walk.sessions + 1, "coverage", g, tv, te, true_edges, truth))
    last = rows[-2]
    return ExperimentReport(
        "graph-quality",
        rows,
        {"master": cfg.seed, "world": cfg.world.seed},
        _provenance(cfg, bench),
        summary=[
            f"ground truth: {tv} vertices, {te} edges",
            f"after {cfg.walk.sessions} trips: |V| ratio {last['vertex_ratio']:.3f}, |E| ratio {last['edge_ratio']:.3f}",
            f"after coverage sweep: |V| ratio {rows[-1]['vertex_ratio']:.3f}, |E| ratio {rows[-1]['edge_ratio']:.3f}",
        ],
    )


def _quality_row(t, walk, g: OverlapGraph, tv, te, true_edges, truth) -> dict:
    wrong_v = sum(1 for v in g.vertices if v not in truth)
    wrong_e = sum(1 for e in g.edges() if e not in true_edges)
    return {
        "schema_version": SCHEMA_VERSION,
        "sessions": t,
        "walk": walk,
        "n_vertices": len(g),
        "n_edges": g.n_edges,
        "vertex_ratio": len(g) / tv if tv else 0.0,
        "edge_ratio": g.n_edges / te if te else 0.0,
        "incorrect_vertices": wrong_v,
        "incorrect_edges": wrong_e,
        "graph_digest": g.digest(),
    }


# -- success rate ---------------------------------------------------------
@dataclass
class _Trial:
    emitted: int
    clique: float
    locatable: float
    success: dict[str, float]
    n: int


def _success_cell(
    cfg: ExperimentConfig,
    bench: Workbench,
    g: OverlapGraph,
    reals: list[Fingerprint],
    real_est: list[dict],
    epsilon: float,
    h: int,
    cell: str,
    factors: tuple[float, ...],
) -> tuple[list[_Trial], dict[float, dict[str, list[float]]]]:
    trials: list[_Trial] = []
    by_factor: dict[float, dict[str, list[float]]] = {f: {b: [] for b in cfg.backends} for f in factors}
    for t, real in enumerate(reals):
        try:
            sets = csda(g, real, epsilon, h, derive(cfg.seed, "success", cell, t))
        except (NoCandidates, InsufficientDensity):
            trials.append(_Trial(0, 0.0, 0.0, {b: 0.0 for b in cfg.backends}, len(real)))
            continue
        clique = np.mean([bench.truth.is_clique(s.ap_ids) for s in sets])
        succ: dict[str, float] = {}
        loc = []
        for b in cfg.backends:
            ests = serve_bundle(bench.radio_map, [s.as_observations() for s in sets], b, **_loc_kwargs(cfg, b))
            loc.extend(isinstance(e, LocationEstimate) for _, e in ests)
            for fct in factors:
                by_factor[fct][b].append(np.mean([noise_succeeds(real_est[t][b], e, fct) for _, e in ests]))
            succ[b] = float(np.mean([noise_succeeds(real_est[t][b], e, cfg.score_factor) for _, e in ests]))
        trials.append(_Trial(len(sets), float(clique), float(np.mean(loc)), succ, len(real)))
    return trials, by_factor


def _loc_kwargs(cfg: ExperimentConfig, backend: str) -> dict:
    if backend == "RADAR":
        return {"k_aps": cfg.k_aps, "k_nn": cfg.k_nn}
    return {"sigma": cfg.pbl_sigma}


def _success_rows(cfg, sweep: str, value, epsilon, h, g: OverlapGraph, trials: list[_Trial]) -> list[dict]:
    rows = []
    emitting = [t for t in trials if t.emitted]
    for subset, sel in (("all", emitting), ("n>k_aps", [t for t in emitting if t.n > cfg.k_aps])):
        clique, clique_se = _rate([t.clique for t in sel])
        for b in cfg.backends:
            x, se = _rate([t.success[b] for t in sel])
            rows.append(
                {
                    "schema_version": SCHEMA_VERSION,
                    "sweep": sweep,
                    "value": value,
                    "epsilon": epsilon,
                    "h": h,
                    "graph_vertices": len(g),
                    "graph_edges": g.n_edges,
                    "backend": b,
                    "subset": subset,
                    "trials": len(trials),
                    "emitting_trials": len(sel),
                    "availability": len(emitting) / len(trials) if trials else 0.0,
                    "x": x,
                    "x_se": se,
                    "clique_rate": clique,
                    "clique_se": clique_se,
                    "locatable_rate": float(np.mean([t.locatable for t in sel])) if sel else 0.0,
                }
            )
    return rows


def exp_success_rate(cfg: ExperimentConfig) -> ExperimentReport:
    bench = workbench(cfg)
    reals = request_positions(bench.field, cfg, cfg.trials, "success")
    real_est = []
    for real in reals:
        real_est.append(
            {b: locate(bench.radio_map, real, b, **_loc_kwargs(cfg, b)) for b in cfg.backends}
        )
    rows: list[dict] = []
    factor_rows: list[dict] = []
    g = bench.graph

    def run(sweep, value, epsilon, h, graph, cell, factors=()):
        trials, by_factor = _success_cell(cfg, bench, graph, reals, real_est, epsilon, h, cell, factors)
        rows.extend(_success_rows(cfg, sweep, value, epsilon, h, graph, trials))
        for fct, per_b in by_factor.items():
            for b, vals in per_b.items():
                x, se = _rate(vals)
                factor_rows.append(
                    {"schema_version": SCHEMA_VERSION, "sweep": sweep, "value": value, "epsilon": epsilon,
                     "h": h, "backend": b, "score_factor": fct, "x": x, "x_se": se}
                )

    for h in cfg.hs:
        run("h", h, cfg.fixed_epsilon, h, g, f"h={h}")
    for eps in cfg.epsilons:
        run("epsilon", eps, eps, cfg.fixed_h, g, f"eps={eps}", tuple(cfg.score_factors))
    total = sum(len(s) for s in bench.sessions)
    for k in range(1, cfg.scale_prefixes + 1):
        n_scans = math.ceil(total * k / cfg.scale_prefixes)
        prefix = bench.graph_from_prefix(n_scans, cfg.tau)
        run("scale", len(prefix), cfg.fixed_epsilon, cfg.fixed_h, prefix, f"scale={k}")

    summary = []
    for r in rows:
        if r["subset"] == "all":
            summary.append(
                f"{r['sweep']:>7}={r['value']!s:<6} {r['backend']:<5} x={r['x']:.3f}±{r['x_se']:.3f} "
                f"clique={r['clique_rate']:.3f} avail={r['availability']:.2f}"
            )
    return ExperimentReport(
        "success",
        rows,
        {"master": cfg.seed, "world": cfg.world.seed},
        _provenance(cfg, bench),
        extra_tables={"success_factor": factor_rows},
        summary=summary,
    )


# -- computational cost -----------------------------------------------------
def _median_time(fn: Callable[[], object], repeats: int, warmups: int) -> float:
    for _ in range(warmups):
        fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _cost_fingerprint(bench: Workbench, cfg: ExperimentConfig) -> Fingerprint:
    m = cfg.cost.clique_size
    for fp in request_positions(bench.field, cfg, 200, "cost", min_aps=m):
        return Fingerprint(fp.strongest(m), fp.position_truth)
    raise NoCandidates(cfg.fixed_epsilon)


def exp_cost(cfg: ExperimentConfig) -> ExperimentReport:
    bench = workbench(cfg)
    real = _cost_fingerprint(bench, cfg)
    m = len(real)
    c = cfg.cost
    total = sum(len(s) for s in bench.sessions)
    # geometric prefix sizes so the sweep spans small and large graphs
    cuts = sorted({max(1, round(total / 2 ** (c.prefixes - 1 - i))) for i in range(c.prefixes)})
    rows: list[dict] = []
    censored_from = None
    for i, n_scans in enumerate(cuts):
        g = bench.graph_from_prefix(n_scans, cfg.tau)
        row = {
            "schema_version": SCHEMA_VERSION,
            "sweep": "scale",
            "prefix": i,
            "graph_vertices": len(g),
            "graph_edges": g.n_edges,
            "h": c.scale_h,
            "clique_size": m,
        }
        row.update(_time_generators(g, real, cfg, c.scale_h, f"scale{i}"))
        if censored_from is None:
            bf, cens, found = _time_brute_force(g, m, cfg, i)
            row.update({"bruteforce_median_s": bf, "bruteforce_censored": cens, "bruteforce_found": found})
            if cens:
                censored_from = i
        else:
            row.update({"bruteforce_median_s": None, "bruteforce_censored": True, "bruteforce_found": None})
        rows.append(row)
    g = bench.graph
    for h in c.hs:
        row = {
            "schema_version": SCHEMA_VERSION,
            "sweep": "h",
            "prefix": len(cuts) - 1,
            "graph_vertices": len(g),
            "graph_edges": g.n_edges,
            "h": h,
            "clique_size": m,
        }
        row.update(_time_generators(g, real, cfg, h, f"h{h}"))
        rows.append(row)

    summary = [
        f"|G|={r['graph_vertices']:>4} h={r['h']:>2} csda={_fmt(r['csda_median_s'])} "
        f"ecsda={_fmt(r['ecsda_median_s'])} brute={_fmt(r.get('bruteforce_median_s'))}"
        f"{' (censored)' if r.get('bruteforce_censored') else ''}"
        for r in rows
    ]
    return ExperimentReport(
        "cost",
        rows,
        {"master": cfg.seed, "world": cfg.world.seed},
        _provenance(cfg, bench),
        timing_columns=("csda_median_s", "ecsda_median_s", "bruteforce_median_s", "bruteforce_censored", "bruteforce_found"),
        summary=summary,
    )


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v * 1e3:.3f}ms"


def _time_generators(g: OverlapGraph, real: Fingerprint, cfg: ExperimentConfig, h: int, tag: str) -> dict:
    eps = cfg.fixed_epsilon
    seeds = iter(range(10**6))
    try:
        prev = csda(g, real, eps, h, derive(cfg.seed, "cost-prev", tag))
    except (NoCandidates, InsufficientDensity):
        return {"csda_median_s": None, "ecsda_median_s": None, "generator_status": "no-candidates"}

    def run_csda():
        try:
            csda(g, real, eps, h, derive(cfg.seed, "cost", tag, next(seeds)))
        except (NoCandidates, InsufficientDensity):
            pass

    def run_ecsda():
        try:
            e_csda(g, real, prev, eps, derive(cfg.seed, "cost-e", tag, next(seeds)))
        except (NoCandidates, InsufficientDensity):
            pass

    return {
        "csda_median_s": _median_time(run_csda, cfg.cost.repeats, cfg.cost.warmups),
        "ecsda_median_s": _median_time(run_ecsda, cfg.cost.repeats, cfg.cost.warmups),
        "generator_status": "ok",
    }


def _time_brute_force(g: OverlapGraph, m: int, cfg: ExperimentConfig, prefix: int):
    c = cfg.cost
    times = []
    found = None
    for r in range(c.brute_force_repeats):
        t0 = time.perf_counter()
        try:
            res = brute_force_clique(g, m, seed=_key(f"bf{prefix}-{r}") ^ cfg.seed, timeout=c.brute_force_timeout)
        except BruteForceTimeout:
            return None, True, None
        found = res is not None
        times.append(time.perf_counter() - t0)
    return statistics.median(times), False, found


# -- trajectory ---------------------------------------------------------------
def _slot_positions(bundle, noise: list[NoiseSet], results) -> list[tuple[float, float] | None]:
    """Located position per noise slot, recovered from the shuffled bundle."""
    where = {frozenset(s): i for i, s in enumerate(bundle.sets)}
    res = dict(results)
    out = []
    for ns in noise:
        e = res[where[ns.ap_ids]]
        out.append(e.position if isinstance(e, LocationEstimate) else None)
    return out


def _run_session(cfg, bench, fps, mode: str, walk_id: int, backend: str):
    h, eps = cfg.trajectory_h, cfg.trajectory_epsilon
    session, reals, traces = [], [], []
    prev: list[NoiseSet] | None = None
    fallbacks = emitted = 0
    for k, fp in enumerate(fps):
        seed = derive(cfg.seed, "trajectory", mode, walk_id, k)
        try:
            if h == 0:
                noise = []
            elif mode == "csda" or prev is None:
                noise = csda(bench.graph, fp, eps, h, seed)
            else:
                noise = e_csda(bench.graph, fp, prev, eps, seed)
        except (NoCandidates, InsufficientDensity):
            continue
        prev = noise or prev
        fallbacks += sum(ns.fallback for ns in noise)
        emitted += len(noise)
        bundle = assemble_bundle(fp, noise, derive(cfg.seed, "bundle", mode, walk_id, k), session_id=f"{mode}-{walk_id}")
        results = serve_bundle(bench.radio_map, bundle, backend, **_loc_kwargs(cfg, backend))
        session.append(results)
        reals.append(bundle.real_index)
        real_res = dict(results)[bundle.real_index]
        traces.append(
            {
                "walk": walk_id,
                "mode": mode,
                "step": k,
                "chain": "real",
                "true_x": fp.position_truth[0],
                "true_y": fp.position_truth[1],
                "x": real_res.position[0] if isinstance(real_res, LocationEstimate) else None,
                "y": real_res.position[1] if isinstance(real_res, LocationEstimate) else None,
                "fallback": False,
            }
        )
        for i, (ns, pos) in enumerate(zip(noise, _slot_positions(bundle, noise, results))):
            traces.append(
                {"walk": walk_id, "mode": mode, "step": k, "chain": f"noise{i}", "true_x": None, "true_y": None,
                 "x": None if pos is None else pos[0], "y": None if pos is None else pos[1], "fallback": ns.fallback}
            )
    return session, reals, traces, fallbacks, emitted


def _chain_steps(traces: list[dict]) -> dict[str, list[float]]:
    """Located step lengths per chain kind, skipping steps right after a fallback."""
    out: dict[str, list[float]] = {"real": [], "noise": []}
    by_chain: dict[str, list[dict]] = {}
    for t in traces:
        by_chain.setdefault(t["chain"], []).append(t)
    for name, seq in by_chain.items():
        kind = "real" if name == "real" else "noise"
        for a, b in zip(seq, seq[1:]):
            if None in (a["x"], b["x"]) or b["fallback"]:
                continue
            out[kind].append(math.dist((a["x"], a["y"]), (b["x"], b["y"])))
    return out


def exp_trajectory(cfg: ExperimentConfig) -> ExperimentReport:
    bench = workbench(cfg)
    f = bench.field
    backend = cfg.backends[0]
    w = cfg.walk
    h = cfg.trajectory_h
    modes = ("csda", "e-csda")
    hits = {m: [] for m in modes}
    fb = {m: [0, 0] for m in modes}
    steps = {m: {"real": [], "noise": []} for m in modes}
    attacks: list[dict] = []
    traces_out: list[dict] = []
    starts = request_positions(f, cfg, w.walks, "trajectory-start", min_aps=w.min_request_aps)
    for walk_id in range(w.walks):
        walk = random_walk(
            f, starts[walk_id].position_truth, w.walk_steps, w.walk_step_length, derive(cfg.seed, "walk", walk_id)
        )
        fps = [fp for fp in scan_many(f, walk.steps, cfg.sensitivity) if len(fp) >= w.min_request_aps]
        for mode in modes:
            session, reals, traces, n_fb, n_emit = _run_session(cfg, bench, fps, mode, walk_id, backend)
            fb[mode][0] += n_fb
            fb[mode][1] += n_emit
            for kind, vals in _chain_steps(traces).items():
                steps[mode][kind].extend(vals)
            if walk_id < 5:
                traces_out.extend(traces)
            if len(session) < 2:
                hits[mode].append(None)
                continue
            verdict = adv.homogeneity_attack(
                session,
                derive(cfg.seed, "attack", mode, walk_id),
                linkage=cfg.attack.linkage,
                max_step=cfg.attack.max_step,
                penalty=cfg.attack.penalty,
            )
            hits[mode].append(verdict.chosen_index == reals[-1])
            attacks.append(adv.attack_record(f"trajectory/{mode}", walk_id, verdict, h, cfg.trajectory_epsilon, reals[-1]))

    paired = [(a, b) for a, b in zip(hits["csda"], hits["e-csda"]) if a is not None and b is not None]
    plain_only = sum(1 for a, b in paired if a and not b)
    e_only = sum(1 for a, b in paired if b and not a)
    discordant = plain_only + e_only
    p_value = float(stats.binomtest(plain_only, discordant, 0.5, alternative="greater").pvalue) if discordant else 1.0
    rows = []
    for m in modes:
        vals = [float(x) for x in hits[m] if x is not None]
        rate, se = _rate(vals)
        rows.append(
            {
                "schema_version": SCHEMA_VERSION,
                "mode": m,
                "h": h,
                "epsilon": cfg.trajectory_epsilon,
                "backend": backend,
                "walks": len(vals),
                "hit_rate": rate,
                "hit_se": se,
                "baseline": 1.0 / (h + 1),
                "fallback_rate": fb[m][0] / fb[m][1] if fb[m][1] else 0.0,
                "real_step_median": float(np.median(steps[m]["real"])) if steps[m]["real"] else None,
                "noise_step_median": float(np.median(steps[m]["noise"])) if steps[m]["noise"] else None,
                "noise_step_p90": float(np.percentile(steps[m]["noise"], 90)) if steps[m]["noise"] else None,
                "paired_plain_only": plain_only,
                "paired_e_only": e_only,
                "paired_p_value": p_value,
            }
        )
    summary = [
        f"{r['mode']:>7}: hit {r['hit_rate']:.3f}±{r['hit_se']:.3f} (chance {r['baseline']:.3f}), "
        f"fallback {r['fallback_rate']:.3f}, median step real {r['real_step_median']} noise {r['noise_step_median']}"
        for r in rows
    ] + [f"paired one-sided exact test (csda > e-csda): p = {p_value:.3g} over {len(paired)} walks"]
    return ExperimentReport(
        "trajectory",
        rows,
        {"master": cfg.seed, "world": cfg.world.seed},
        _provenance(cfg, bench),
        extra_tables={"trajectory_attacks": attacks, "trajectory_traces": traces_out},
        summary=summary,
    )


# -- distribution attack ------------------------------------------------------
def _population(bench: Workbench, cfg: ExperimentConfig, count: int, tag: str) -> list[Fingerprint]:
    """Requests from a skewed population: users gather around a few popular hotspots."""
    a = cfg.attack
    f = bench.field
    hubs = request_positions(f, cfg, a.hotspots, "hotspots", min_aps=2)
    weights = 1.0 / np.arange(1, a.hotspots + 1)
    weights /= weights.sum()
    rng = np.random.default_rng(derive(cfg.seed, "population", tag))
    out: list[Fingerprint] = []
    while len(out) < count:
        hub = hubs[rng.choice(a.hotspots, p=weights)].position_truth
        p = np.clip(np.asarray(hub) + rng.normal(0.0, a.hotspot_spread, 2), 0.0, (f.width, f.height))
        fp = scan(f, p, cfg.sensitivity)
        if len(fp):
            out.append(fp)
    return out


def exp_distribution(cfg: ExperimentConfig) -> ExperimentReport:
    bench = workbench(cfg)
    a = cfg.attack
    h, eps = cfg.trajectory_h, cfg.fixed_epsilon
    universe = len(bench.field.aps)
    trained = adv.QueryFrequencyTable()
    for fp in _population(bench, cfg, a.population_requests, "train"):
        trained.record([fp.ap_ids])
    baseline = trained.copy()
    untrained = adv.QueryFrequencyTable()
    traffic = _population(bench, cfg, a.protected_requests, "protected")
    rows: list[dict] = []
    attacks: list[dict] = []
    window_hits: list[float] = []
    untrained_hits: list[float] = []
    skipped = 0
    for t, real in enumerate(traffic):
        try:
            noise = csda(bench.graph, real, eps, h, derive(cfg.seed, "dist-noise", t))
        except (NoCandidates, InsufficientDensity):
            skipped += 1
            noise = None
        if noise is not None:
            bundle = assemble_bundle(real, noise, derive(cfg.seed, "dist-bundle", t), session_id=f"dist-{t}")
            verdict = adv.distribution_attack(bundle.sets, trained, derive(cfg.seed, "dist-attack", t))
            window_hits.append(float(verdict.chosen_index == bundle.real_index))
            attacks.append(adv.attack_record("distribution", t, verdict, h, eps, bundle.real_index))
            if t < a.window:
                uv = adv.distribution_attack(bundle.sets, untrained, derive(cfg.seed, "dist-untrained", t))
                untrained_hits.append(float(uv.chosen_index == bundle.real_index))
            trained.record(bundle.sets)
        baseline.record([real.ap_ids])
        if (t + 1) % a.window == 0 or t + 1 == len(traffic):
            rate, se = _rate(window_hits)
            rows.append(
                {
                    "schema_version": SCHEMA_VERSION,
                    "requests": t + 1,
                    "window_requests": len(window_hits),
                    "hit_rate": rate,
                    "hit_se": se,
                    "baseline": 1.0 / (h + 1),
                    "entropy_protected": trained.entropy(universe),
                    "entropy_no_noise": baseline.entropy(universe),
                    "skipped": skipped,
                }
            )
            window_hits = []
    u_rate, u_se = _rate(untrained_hits)
    summary = [
        f"after {r['requests']:>6} requests: hit {r['hit_rate']:.3f}±{r['hit_se']:.3f} "
        f"entropy protected {r['entropy_protected']:.4f} vs no-noise {r['entropy_no_noise']:.4f}"
        for r in rows
    ] + [f"untrained attacker (first window): hit {u_rate:.3f}±{u_se:.3f}, chance {1 / (h + 1):.3f}"]
    return ExperimentReport(
        "distribution",
        rows,
        {"master": cfg.seed, "world": cfg.world.seed},
        _provenance(cfg, bench) | {"untrained_hit_rate": u_rate, "untrained_hit_se": u_se, "untrained_trials": len(untrained_hits)},
        extra_tables={"distribution_attacks": attacks},
        summary=summary,
    )


RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "graph-quality": exp_graph_quality,
    "success": exp_success_rate,
    "cost": exp_cost,
    "trajectory": exp_trajectory,
    "distribution": exp_distribution,
}


def run_experiment(name: str, cfg: ExperimentConfig) -> ExperimentReport:
    try:
        runner = RUNNERS[name]
    except KeyError:
        raise ValueError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}") from None
    return runner(cfg)
