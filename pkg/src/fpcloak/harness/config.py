"""Experiment configuration: one pydantic model, loadable from YAML or JSON."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import ConfigurationError


class WorldConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ap_count: int = Field(300, ge=1)
    width: float = Field(500.0, gt=0)
    height: float = Field(500.0, gt=0)
    placement: Literal["uniform", "clustered"] = "clustered"
    path_loss_exponent: float = Field(3.0, gt=0)
    tx_low: float = -35.0
    tx_high: float = -25.0
    cluster_size: float = Field(8.0, gt=0)
    cluster_spread: float = Field(12.0, ge=0)
    background_fraction: float = Field(0.0, ge=0, le=1)
    seed: int = 1


class WalkConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # collection sessions feeding SCSOA
    sessions: int = Field(8, ge=0)
    session_steps: int = Field(2000, ge=1)
    collect_step_length: float = Field(5.0, gt=0)
    # LS trajectories (homogeneity experiment)
    walks: int = Field(200, ge=1)
    walk_steps: int = Field(50, ge=2)
    walk_step_length: float = Field(50.0, gt=0)
    min_request_aps: int = Field(1, ge=1)


class AttackConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_step: float = Field(100.0, gt=0)
    penalty: float = Field(100.0, ge=0)
    linkage: Literal["nearest", "index"] = "nearest"
    # distribution attack
    population_requests: int = Field(5000, ge=1)
    hotspots: int = Field(5, ge=1)
    hotspot_spread: float = Field(40.0, gt=0)
    protected_requests: int = Field(10000, ge=1)
    window: int = Field(1000, ge=1)


class CostConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    repeats: int = Field(11, ge=1)
    warmups: int = Field(2, ge=0)
    brute_force_timeout: float = Field(60.0, gt=0)
    # brute force runs for seconds to minutes per call; fewer repeats keep the suite bounded
    brute_force_repeats: int = Field(3, ge=1)
    scale_h: int = Field(5, ge=1)
    hs: list[int] = Field(default_factory=lambda: [3, 5, 10, 20], min_length=1)
    prefixes: int = Field(8, ge=1)
    clique_size: int = Field(5, ge=1)


class ExperimentConfig(BaseModel):
    """Every knob of the five experiments. Defaults are the fast desk-scale suite."""

    model_config = ConfigDict(extra="forbid")

    world: WorldConfig = Field(default_factory=WorldConfig)
    tau: float = -75.0
    sensitivity: float = -80.0
    shadowing_db: float = Field(0.0, ge=0)
    grid_spacing: float = Field(5.0, gt=0)

    epsilons: list[float] = Field(default_factory=lambda: [0.5, 0.7, 0.9, 0.95, 1.0], min_length=1)
    hs: list[int] = Field(default_factory=lambda: [1, 5, 10, 20], min_length=1)
    fixed_epsilon: float = 0.95
    fixed_h: int = Field(1, ge=1)
    scale_prefixes: int = Field(4, ge=1)
    trials: int = Field(2000, ge=1)

    backends: list[Literal["RADAR", "PBL"]] = Field(default_factory=lambda: ["RADAR", "PBL"], min_length=1)
    k_aps: int = Field(5, ge=1)
    k_nn: int = Field(1, ge=1)
    pbl_sigma: float = Field(4.0, gt=0)
    score_factor: float = Field(2.0, gt=0)
    score_factors: list[float] = Field(default_factory=lambda: [1.5, 2.0, 3.0], min_length=1)

    trajectory_h: int = Field(4, ge=0)
    trajectory_epsilon: float = 0.5

    walk: WalkConfig = Field(default_factory=WalkConfig)
    attack: AttackConfig = Field(default_factory=AttackConfig)
    cost: CostConfig = Field(default_factory=CostConfig)

    seed: int = 0
    output_dir: Path = Path("results")

    @field_validator("epsilons", "score_factors")
    @classmethod
    def _unit_interval(cls, v, info):
        if info.field_name == "epsilons" and any(not 0.0 <= e <= 1.0 for e in v):
            raise ValueError("epsilon values must lie in [0, 1]")
        return v

    @field_validator("hs")
    @classmethod
    def _positive_h(cls, v):
        if any(h < 1 for h in v):
            raise ValueError("h values must be >= 1")
        return v


def load_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    data = _merge(data, {k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out
