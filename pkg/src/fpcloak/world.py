"""Synthetic radio world: AP fields, log-distance propagation, scans and walks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError

if TYPE_CHECKING:
    from .graph import OverlapGraph

FIELD_SCHEMA_VERSION = 1
REFERENCE_DISTANCE_M = 1.0
DEFAULT_TX_RANGE = (-35.0, -25.0)

Position = tuple[float, float]


@dataclass(frozen=True)
class AccessPoint:
    id: str
    x: float
    y: float
    tx_power: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.tx_power)):
            raise ConfigurationError(f"access point {self.id!r} has non-finite parameters")

    @property
    def position(self) -> Position:
        return (self.x, self.y)


@dataclass(frozen=True)
class ApField:
    aps: tuple[AccessPoint, ...]
    width: float
    height: float
    path_loss_exponent: float = 3.5
    seed: int | None = None

    def __post_init__(self):
        _check_bounds(self.width, self.height)
        if not (math.isfinite(self.path_loss_exponent) and self.path_loss_exponent > 0):
            raise ConfigurationError("path_loss_exponent must be positive")
        ids = [ap.id for ap in self.aps]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("access point ids must be unique within a field")
        for ap in self.aps:
            if not self.contains(ap.position):
                raise ConfigurationError(f"access point {ap.id!r} lies outside the field bounds")

    @property
    def bounds(self) -> tuple[float, float]:
        return (self.width, self.height)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(ap.id for ap in self.aps)

    @cached_property
    def index(self) -> dict[str, int]:
        return {ap_id: i for i, ap_id in enumerate(self.ids)}

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([[ap.x, ap.y] for ap in self.aps], dtype=float).reshape(-1, 2)

    @cached_property
    def tx_powers(self) -> np.ndarray:
        return np.array([ap.tx_power for ap in self.aps], dtype=float)

    def contains(self, pos: Sequence[float]) -> bool:
        return 0.0 <= pos[0] <= self.width and 0.0 <= pos[1] <= self.height

    def by_id(self, ap_id: str) -> AccessPoint:
        return self.aps[self.index[ap_id]]

    def signal_matrix(self, points: np.ndarray) -> np.ndarray:
        """Signal strength of every AP at every point, shape (len(points), len(aps))."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        diff = points[:, None, :] - self.positions[None, :, :]
        d = np.sqrt(diff[..., 0] ** 2 + diff[..., 1] ** 2)
        return path_loss_signal(self.tx_powers[None, :], d, self.path_loss_exponent)

    def coverage_radius(self, threshold: float) -> np.ndarray:
        """Distance at which each AP's signal falls to ``threshold`` (0 if it never reaches it)."""
        return coverage_radius(self.tx_powers, threshold, self.path_loss_exponent)


@dataclass(frozen=True)
class Fingerprint:
    """One device scan. ``position_truth`` never leaves the simulator."""

    observations: Mapping[str, float]
    position_truth: Position | None = dc_field(default=None, compare=False)

    @property
    def ap_ids(self) -> frozenset[str]:
        return frozenset(self.observations)

    def __len__(self) -> int:
        return len(self.observations)

    def strongest(self, k: int) -> dict[str, float]:
        ranked = sorted(self.observations.items(), key=lambda kv: (-kv[1], kv[0]))
        return dict(ranked[:k])


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[Position, ...]
    step_length: float

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def step_distances(self) -> np.ndarray:
        pts = np.asarray(self.steps, dtype=float).reshape(-1, 2)
        return np.linalg.norm(np.diff(pts, axis=0), axis=1)


def _check_bounds(width: float, height: float) -> None:
    if not (math.isfinite(width) and math.isfinite(height) and width > 0 and height > 0):
        raise ConfigurationError(f"degenerate bounds {width!r} x {height!r}")


def path_loss_signal(tx_power, distance, gamma: float):
    """Log-distance model: tx_power - 10*gamma*log10(max(d, 1 m))."""
    d = np.maximum(distance, REFERENCE_DISTANCE_M)
    return tx_power - 10.0 * gamma * np.log10(d / REFERENCE_DISTANCE_M)


def coverage_radius(tx_power, threshold: float, gamma: float):
    tx = np.asarray(tx_power, dtype=float)
    r = REFERENCE_DISTANCE_M * 10.0 ** ((tx - threshold) / (10.0 * gamma))
    return np.where(tx >= threshold, r, 0.0)


def mac_id(index: int) -> str:
    # locally administered unicast prefix 02:
    raw = (0x02 << 40) | (index & 0xFFFFFFFFFF)
    return ":".join(f"{(raw >> shift) & 0xFF:02x}" for shift in range(40, -8, -8))


def generate_field(
    count: int,
    bounds: tuple[float, float] = (500.0, 500.0),
    placement: str = "uniform",
    seed: int = 0,
    *,
    path_loss_exponent: float = 3.5,
    tx_range: tuple[float, float] = DEFAULT_TX_RANGE,
    cluster_size: float = 8.0,
    cluster_spread: float = 12.0,
    background_fraction: float = 0.0,
) -> ApField:
    """Place ``count`` APs in a ``bounds`` rectangle.

    ``clustered`` placement draws ``ceil(count / cluster_size)`` centres uniformly
    and scatters each AP around a randomly chosen centre with a Gaussian of
    ``cluster_spread`` metres, resampling points that fall outside the bounds.
    A ``background_fraction`` of the APs is placed uniformly instead.
    """
    width, height = bounds
    _check_bounds(width, height)
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    lo, hi = tx_range
    if not lo <= hi:
        raise ConfigurationError("tx_range must be (low, high)")

    rng = np.random.default_rng(seed)
    if placement == "uniform":
        xy = rng.uniform((0.0, 0.0), (width, height), size=(count, 2))
    elif placement == "clustered":
        n_clusters = max(1, math.ceil(count / cluster_size))
        centres = rng.uniform((0.0, 0.0), (width, height), size=(n_clusters, 2))
        xy = np.empty((count, 2))
        for i in range(count):
            if rng.random() < background_fraction:
                xy[i] = rng.uniform((0.0, 0.0), (width, height))
                continue
            c = centres[rng.integers(n_clusters)]
            while True:
                p = c + rng.normal(0.0, cluster_spread, size=2)
                if 0.0 <= p[0] <= width and 0.0 <= p[1] <= height:
                    break
            xy[i] = p
    else:
        raise ConfigurationError(f"unknown placement {placement!r}")
    tx = rng.uniform(lo, hi, size=count)

    aps = tuple(
        AccessPoint(mac_id(i), float(xy[i, 0]), float(xy[i, 1]), float(tx[i])) for i in range(count)
    )
    return ApField(aps, float(width), float(height), float(path_loss_exponent), seed)


def signal_at(ap: AccessPoint, pos: Sequence[float], field: ApField) -> float:
    dx, dy = float(pos[0]) - ap.x, float(pos[1]) - ap.y
    d = np.sqrt(dx**2 + dy**2)
    return float(path_loss_signal(ap.tx_power, d, field.path_loss_exponent))


def scan(
    field: ApField,
    pos: Sequence[float],
    sensitivity: float,
    *,
    shadowing_db: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Fingerprint:
    """Every AP whose (optionally shadowed) signal at ``pos`` is >= ``sensitivity``."""
    if not math.isfinite(sensitivity):
        raise ConfigurationError("sensitivity must be finite")
    ss = field.signal_matrix(np.asarray(pos, dtype=float))[0]
    if shadowing_db > 0:
        if rng is None:
            raise ConfigurationError("shadowing requires an rng")
        ss = ss + rng.normal(0.0, shadowing_db, size=ss.shape)
    hits = np.flatnonzero(ss >= sensitivity)
    obs = {field.ids[i]: float(ss[i]) for i in hits}
    return Fingerprint(obs, (float(pos[0]), float(pos[1])))


def _reflect(v: float, upper: float) -> float:
    while v < 0.0 or v > upper:
        v = -v if v < 0.0 else 2.0 * upper - v
    return v


def random_walk(
    field: ApField,
    start: Sequence[float],
    steps: int,
    step_length: float,
    seed: int,
    *,
    turn_sd: float = math.pi / 4,
    min_fraction: float = 0.0,
) -> Trajectory:
    """Correlated random walk with reflecting boundaries.

    Each step turns by a Gaussian angle (``turn_sd`` radians) and moves a
    length drawn uniformly from ``[min_fraction * step_length, step_length]``.
    """
    if not field.contains(start):
        raise ConfigurationError(f"walk start {tuple(start)} outside field bounds")
    if steps < 1:
        raise ConfigurationError("steps must be >= 1")
    if step_length <= 0:
        raise ConfigurationError("step_length must be positive")
    rng = np.random.default_rng(seed)
    x, y = float(start[0]), float(start[1])
    heading = rng.uniform(0.0, 2 * math.pi)
    out = [(x, y)]
    for _ in range(steps - 1):
        heading += rng.normal(0.0, turn_sd)
        length = step_length * rng.uniform(min_fraction, 1.0)
        rx, ry = x + length * math.cos(heading), y + length * math.sin(heading)
        nx_, ny_ = _reflect(rx, field.width), _reflect(ry, field.height)
        # mirror the heading so the walk keeps moving away from the wall
        if nx_ != rx:
            heading = math.pi - heading
        if ny_ != ry:
            heading = -heading
        x, y = nx_, ny_
        out.append((x, y))
    return Trajectory(tuple(out), float(step_length))


def coverage_walk(field: ApField, spacing: float) -> Trajectory:
    """Boustrophedon sweep through every grid-cell centre at ``spacing``."""
    xs = grid_axis(field.width, spacing)
    ys = grid_axis(field.height, spacing)
    pts = []
    for j, y in enumerate(ys):
        row = xs if j % 2 == 0 else xs[::-1]
        pts.extend((float(x), float(y)) for x in row)
    return Trajectory(tuple(pts), float(spacing))


def grid_axis(extent: float, spacing: float) -> np.ndarray:
    if spacing <= 0:
        raise ConfigurationError("grid spacing must be positive")
    cells = int(math.floor(extent / spacing + 1e-9))
    if cells < 1:
        raise ConfigurationError(f"grid spacing {spacing} larger than extent {extent}")
    return spacing / 2.0 + spacing * np.arange(cells)


def ground_truth_graph(field: ApField, threshold: float) -> "OverlapGraph":
    """APs i, j are adjacent iff their threshold-coverage discs intersect."""
    from .graph import OverlapGraph

    r = field.coverage_radius(threshold)
    pos = field.positions
    g = OverlapGraph()
    g.add_vertices(field.ids)
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    reach = (r[:, None] > 0) & (r[None, :] > 0) & (d <= r[:, None] + r[None, :])
    ii, jj = np.nonzero(np.triu(reach, k=1))
    g.add_edges((field.ids[i], field.ids[j]) for i, j in zip(ii, jj))
    return g


def field_to_dict(field: ApField) -> dict:
    return {
        "version": FIELD_SCHEMA_VERSION,
        "bounds": {"width": field.width, "height": field.height},
        "path_loss_exponent": field.path_loss_exponent,
        "seed": field.seed,
        "aps": [{"id": ap.id, "x": ap.x, "y": ap.y, "tx_power": ap.tx_power} for ap in field.aps],
    }


def field_from_dict(data: Mapping) -> ApField:
    version = data.get("version")
    if version != FIELD_SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported field schema version {version!r}")
    aps = tuple(AccessPoint(str(a["id"]), float(a["x"]), float(a["y"]), float(a["tx_power"])) for a in data["aps"])
    b = data["bounds"]
    return ApField(aps, float(b["width"]), float(b["height"]), float(data["path_loss_exponent"]), data.get("seed"))


def save_field(field: ApField, path: str | Path) -> None:
    Path(path).write_text(json.dumps(field_to_dict(field), indent=1))


def load_field(path: str | Path) -> ApField:
    return field_from_dict(json.loads(Path(path).read_text()))


def scan_many(
    field: ApField, points: Iterable[Sequence[float]], sensitivity: float, chunk: int = 2048
) -> list[Fingerprint]:
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    out = []
    for start in range(0, len(pts), chunk):
        block = pts[start : start + chunk]
        for row, p in zip(field.signal_matrix(block), block):
            hits = np.flatnonzero(row >= sensitivity)
            out.append(Fingerprint({field.ids[i]: float(row[i]) for i in hits}, (float(p[0]), float(p[1]))))
    return out
