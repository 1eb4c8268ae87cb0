"""Command line entry point: ``fpcloak <command>``."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from .errors import FpCloakError
from .graph import OverlapGraph, load_graph, save_graph
from .harness.config import load_config
from .harness.experiments import EXPERIMENTS, collection_scans, make_field, run_experiment
from .harness.report import write_report
from .harness.verify import run_verify
from .locator import build_radio_map, load_radio_map, save_radio_map
from .world import load_field, save_field


def _overrides(pairs: tuple[str, ...]) -> dict:
    """``a.b=value`` strings to a nested dict; values are parsed as YAML scalars/lists."""
    out: dict = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"expected key=value, got {pair!r}", param_hint="--set")
        node = out
        *parents, leaf = key.replace("-", "_").split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = yaml.safe_load(raw)
    return out


def _config(path, sets, **flat):
    over = _overrides(sets)
    world = {k: flat.pop(k) for k in ("ap_count", "placement") if k in flat}
    world = {k: v for k, v in world.items() if v is not None}
    if world:
        over.setdefault("world", {}).update(world)
    over.update({k: v for k, v in flat.items() if v is not None})
    return load_config(path, **over)


config_opt = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML or JSON config file.")
set_opt = click.option("--set", "sets", multiple=True, metavar="KEY=VALUE", help="Override any config field, e.g. walk.walks=50.")


@click.group()
def main():
    """Fingerprint-cloaking workbench: worlds, overlap graphs, noise generation and attacks."""


@main.command("gen-world")
@config_opt
@set_opt
@click.option("--ap-count", type=int)
@click.option("--placement", type=click.Choice(["uniform", "clustered"]))
@click.option("--seed", type=int, help="World seed (world.seed).")
@click.option("--radio-map", type=click.Path(dir_okay=False), help="Also write the calibration grid here.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def gen_world(config_path, sets, ap_count, placement, seed, radio_map, out):
    """Generate an AP field and save it as JSON."""
    cfg = _config(config_path, sets + ((f"world.seed={seed}",) if seed is not None else ()), ap_count=ap_count, placement=placement)
    f = make_field(cfg)
    save_field(f, out)
    click.echo(f"wrote {out}: {len(f.aps)} APs in {f.width:g} x {f.height:g} m")
    if radio_map:
        save_radio_map(build_radio_map(f, cfg.grid_spacing, cfg.sensitivity), radio_map)
        click.echo(f"wrote {radio_map}")


@main.command()
@config_opt
@set_opt
@click.option("--world", "world_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--sessions", type=int)
@click.option("--seed", type=int)
@click.option("--graph", "graph_path", type=click.Path(dir_okay=False), help="Extend an existing graph instead of starting empty.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def collect(config_path, sets, world_path, sessions, seed, graph_path, out):
    """Run SCSOA over simulated collection trips and save G (coefficients left dirty)."""
    extra = sets + ((f"walk.sessions={sessions}",) if sessions is not None else ())
    cfg = _config(config_path, extra, seed=seed)
    f = load_field(world_path)
    g = load_graph(graph_path) if graph_path else OverlapGraph()
    added = 0
    for s in range(cfg.walk.sessions):
        for obs in collection_scans(f, cfg, s):
            added += g.scsoa_update(obs, cfg.tau)
    save_graph(g, out)
    click.echo(f"wrote {out}: {len(g)} vertices, {g.n_edges} edges (+{added} new)")


@main.command()
@click.argument("graph_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Defaults to overwriting the input.")
def coeffs(graph_path, out):
    """Recompute clustering coefficients and save the graph."""
    g = load_graph(graph_path).recompute_coefficients()
    save_graph(g, out or graph_path)
    table = g.coefficient_table()
    ones = sum(1 for c in table.values() if c >= 1.0)
    click.echo(f"{len(table)} coefficients, {ones} vertices with c = 1")


@main.command()
@click.argument("experiment", type=click.Choice(EXPERIMENTS))
@config_opt
@set_opt
@click.option("--seed", type=int, required=True, help="Master seed for every trial stream.")
@click.option("--trials", type=int)
@click.option("--out-dir", type=click.Path(file_okay=False))
def exp(experiment, config_path, sets, seed, trials, out_dir):
    """Run one evaluation experiment and write CSV, summary and metadata."""
    cfg = _config(config_path, sets, seed=seed, trials=trials, output_dir=out_dir)
    report = run_experiment(experiment, cfg)
    for p in write_report(report, cfg.output_dir):
        click.echo(f"wrote {p}")
    click.echo("\n".join(report.summary))


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
def verify(seed):
    """Cross-check fast code paths against the slow reference oracles."""
    failed = 0
    for c in run_verify(seed):
        failed += not c.passed
        click.echo(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    if failed:
        sys.exit(1)


@main.command()
@config_opt
@set_opt
@click.option("--world", "world_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--radio-map", "map_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(config_path, sets, world_path, map_path, host, port):
    """Serve the simulated location provider over HTTP."""
    import uvicorn

    from .service import create_app

    cfg = _config(config_path, sets)
    if map_path:
        rmap = load_radio_map(map_path)
    else:
        f = load_field(world_path) if world_path else make_field(cfg)
        rmap = build_radio_map(f, cfg.grid_spacing, cfg.sensitivity)
    uvicorn.run(create_app(rmap, k_aps=cfg.k_aps, k_nn=cfg.k_nn, sigma=cfg.pbl_sigma), host=host, port=port)


@main.command()
@click.argument("fingerprint", type=click.Path(exists=True, dir_okay=False, allow_dash=True))
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--backend", type=click.Choice(["RADAR", "PBL"]), default="RADAR", show_default=True)
def locate(fingerprint, url, backend):
    """Send a fingerprint (JSON object ap_id -> dBm, or a bundle with "sets") to a running service."""
    import httpx

    data = json.loads(Path(fingerprint).read_text() if fingerprint != "-" else sys.stdin.read())
    if "sets" in data:
        resp = httpx.post(f"{url}/bundles", json={**data, "backend": backend})
    else:
        resp = httpx.post(f"{url}/locate", json={"observations": data, "backend": backend})
    resp.raise_for_status()
    click.echo(json.dumps(resp.json(), indent=2))


def run():
    try:
        main(standalone_mode=True)
    except FpCloakError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    run()
