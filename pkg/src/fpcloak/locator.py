"""Simulated location provider: grid radio map plus RADAR-style and PBL-style matching."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, Unlocatable
from .noise import RequestBundle
from .world import ApField, Fingerprint, grid_axis

RADIOMAP_SCHEMA_VERSION = 1
IMPUTE_OFFSET_DB = 10.0
RADAR = "RADAR"
PBL = "PBL"
BACKENDS = (RADAR, PBL)


@dataclass(frozen=True)
class LocationEstimate:
    position: tuple[float, float]
    backend: str
    # RADAR: mean signal-space distance of the k_nn matches (dB, lower is better).
    # PBL: Gaussian log-likelihood without its normalising constant (higher is better).
    score: float

    @property
    def misfit(self) -> float:
        return self.score if self.backend == RADAR else -self.score


class RadioMap:
    """Calibration grid: one point per cell centre, signatures of audible APs."""

    def __init__(
        self,
        points: np.ndarray,
        ap_ids: Sequence[str],
        rss: np.ndarray,
        grid_spacing: float,
        sensitivity: float,
        bounds: tuple[float, float],
    ):
        self.points = np.asarray(points, dtype=float).reshape(-1, 2)
        self.ap_ids = tuple(ap_ids)
        self.column = {a: i for i, a in enumerate(self.ap_ids)}
        self.audible = rss >= sensitivity
        self.imputed = np.float32(sensitivity - IMPUTE_OFFSET_DB)
        self.values = np.where(self.audible, rss, self.imputed).astype(np.float32)
        self.grid_spacing = float(grid_spacing)
        self.sensitivity = float(sensitivity)
        self.bounds = bounds

    def __len__(self) -> int:
        return len(self.points)

    def signature(self, i: int) -> dict[str, float]:
        cols = np.flatnonzero(self.audible[i])
        return {self.ap_ids[c]: float(self.values[i, c]) for c in cols}

    @property
    def calibration_points(self) -> list[tuple[tuple[float, float], dict[str, float]]]:
        return [((float(p[0]), float(p[1])), self.signature(i)) for i, p in enumerate(self.points)]

    @cached_property
    def _heard_anywhere(self) -> np.ndarray:
        return self.audible.any(axis=0)

    def residuals(self, observations: Mapping[str, float]) -> np.ndarray:
        """Per-point signal differences (P, len(observations)); raises when nothing matches."""
        known = [(self.column[a], ss) for a, ss in observations.items() if a in self.column]
        if not any(self._heard_anywhere[c] for c, _ in known):
            raise Unlocatable("no calibration point shares an AP with the fingerprint")
        unknown = [ss for a, ss in observations.items() if a not in self.column]
        cols = np.array([c for c, _ in known], dtype=int)
        obs = np.array([ss for _, ss in known], dtype=np.float32)
        diff = obs[None, :] - self.values[:, cols]
        if unknown:
            const = np.array(unknown, dtype=np.float32) - self.imputed
            diff = np.hstack([diff, np.broadcast_to(const, (len(self.points), len(unknown)))])
        return diff.astype(float)

    def to_dict(self) -> dict:
        return {
            "version": RADIOMAP_SCHEMA_VERSION,
            "grid_spacing": self.grid_spacing,
            "sensitivity": self.sensitivity,
            "bounds": {"width": self.bounds[0], "height": self.bounds[1]},
            "ap_ids": list(self.ap_ids),
            "calibration_points": [
                {"x": x, "y": y, "signature": sig} for (x, y), sig in self.calibration_points
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RadioMap":
        if data.get("version") != RADIOMAP_SCHEMA_VERSION:
            raise ConfigurationError(f"unsupported radio map schema version {data.get('version')!r}")
        ap_ids = list(data["ap_ids"])
        col = {a: i for i, a in enumerate(ap_ids)}
        cps = data["calibration_points"]
        pts = np.array([[c["x"], c["y"]] for c in cps], dtype=float)
        floor = float(data["sensitivity"]) - IMPUTE_OFFSET_DB
        rss = np.full((len(cps), len(ap_ids)), floor, dtype=np.float32)
        for i, c in enumerate(cps):
            for a, ss in c["signature"].items():
                rss[i, col[a]] = ss
        b = data["bounds"]
        return cls(pts, ap_ids, rss, data["grid_spacing"], data["sensitivity"], (b["width"], b["height"]))


def build_radio_map(field: ApField, grid_spacing: float, sensitivity: float) -> RadioMap:
    if grid_spacing <= 0:
        raise ConfigurationError("grid_spacing must be positive")
    xs = grid_axis(field.width, grid_spacing)
    ys = grid_axis(field.height, grid_spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    rss = np.empty((len(pts), len(field.aps)), dtype=np.float32)
    for start in range(0, len(pts), 2048):
        rss[start : start + 2048] = field.signal_matrix(pts[start : start + 2048])
    return RadioMap(pts, field.ids, rss, grid_spacing, sensitivity, field.bounds)


def _observations(fp) -> dict[str, float]:
    obs = getattr(fp, "observations", fp)
    if not obs:
        raise ConfigurationError("cannot locate an empty fingerprint")
    return dict(obs)


def locate_radar(rmap: RadioMap, fp, k_aps: int = 5, k_nn: int = 1) -> LocationEstimate:
    """Nearest neighbour(s) in signal space over the ``k_aps`` strongest APs."""
    obs = _observations(fp)
    strongest = Fingerprint(obs).strongest(k_aps)
    diff = rmap.residuals(strongest)
    dist = np.sqrt((diff**2).sum(axis=1))
    best = np.argsort(dist, kind="stable")[:k_nn]
    pos = rmap.points[best].mean(axis=0)
    return LocationEstimate((float(pos[0]), float(pos[1])), RADAR, float(dist[best].mean()))


def pbl_loglik(rmap: RadioMap, fp, sigma: float = 4.0) -> np.ndarray:
    diff = rmap.residuals(_observations(fp))
    return -(diff**2).sum(axis=1) / (2.0 * sigma**2)


def locate_pbl(rmap: RadioMap, fp, sigma: float = 4.0) -> LocationEstimate:
    """Maximum likelihood grid point using every reported AP, independent Gaussian errors."""
    if sigma <= 0:
        raise ConfigurationError("sigma must be positive")
    ll = pbl_loglik(rmap, fp, sigma)
    best = int(np.argmax(ll))
    p = rmap.points[best]
    return LocationEstimate((float(p[0]), float(p[1])), PBL, float(ll[best]))


def locate(rmap: RadioMap, fp, backend: str, *, k_aps: int = 5, k_nn: int = 1, sigma: float = 4.0):
    if backend == RADAR:
        return locate_radar(rmap, fp, k_aps=k_aps, k_nn=k_nn)
    if backend == PBL:
        return locate_pbl(rmap, fp, sigma=sigma)
    raise ConfigurationError(f"unknown backend {backend!r}")


def serve_bundle(
    rmap: RadioMap, bundle: RequestBundle | Sequence[Mapping[str, float]], backend: str, **kwargs
) -> list[tuple[int, LocationEstimate | Unlocatable]]:
    """Locate each set independently; per-set failures are returned, not raised."""
    sets = bundle.sets if isinstance(bundle, RequestBundle) else bundle
    out: list[tuple[int, LocationEstimate | Unlocatable]] = []
    for i, s in enumerate(sets):
        try:
            out.append((i, locate(rmap, s, backend, **kwargs)))
        except Unlocatable as exc:
            out.append((i, exc))
    return out


def noise_succeeds(
    real: LocationEstimate | Unlocatable, noise: LocationEstimate | Unlocatable, factor: float = 2.0
) -> bool:
    """A noise set passes when it is locatable with a misfit within ``factor`` x the real set's."""
    if not isinstance(noise, LocationEstimate):
        return False
    if not isinstance(real, LocationEstimate):
        return True
    return noise.misfit <= factor * real.misfit


def result_records(
    results: Sequence[tuple[int, LocationEstimate | Unlocatable]], session_id: str = "", step: int = 0
) -> list[dict]:
    rows = []
    for i, res in results:
        if isinstance(res, LocationEstimate):
            rows.append(
                {"session_id": session_id, "step": step, "set_index": i, "x": res.position[0],
                 "y": res.position[1], "score": res.score, "status": "ok"}
            )
        else:
            rows.append(
                {"session_id": session_id, "step": step, "set_index": i, "x": None, "y": None,
                 "score": None, "status": "unlocatable"}
            )
    return rows


def save_radio_map(rmap: RadioMap, path: str | Path) -> None:
    Path(path).write_text(json.dumps(rmap.to_dict()))


def load_radio_map(path: str | Path) -> RadioMap:
    return RadioMap.from_dict(json.loads(Path(path).read_text()))
