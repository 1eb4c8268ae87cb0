"""AP overlap graph: incremental construction from scans, clustering coefficients, cliques."""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import threading
import time
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import ConfigurationError

GRAPH_SCHEMA_VERSION = 1


class BruteForceTimeout(TimeoutError):
    def __init__(self, checked: int, elapsed: float):
        super().__init__(f"brute-force clique search gave up after {elapsed:.1f}s ({checked} subsets)")
        self.checked = checked
        self.elapsed = elapsed


class OverlapGraph:
    """Undirected graph over AP ids with a cached clustering-coefficient table.

    Single writer: mutators take an internal lock, readers do not. Callers must
    not read while another thread mutates.
    """

    def __init__(self):
        self._adj: dict[str, set[str]] = {}
        self._n_edges = 0
        self.coefficients: dict[str, float] | None = None
        self.coefficients_dirty = False
        self._lock = threading.Lock()

    # -- structure -----------------------------------------------------
    @property
    def vertices(self) -> list[str]:
        return sorted(self._adj)

    def __len__(self) -> int:
        return len(self._adj)

    def __contains__(self, v: str) -> bool:
        return v in self._adj

    @property
    def n_edges(self) -> int:
        return self._n_edges

    def edges(self) -> Iterator[tuple[str, str]]:
        for u in sorted(self._adj):
            for v in sorted(self._adj[u]):
                if u < v:
                    yield (u, v)

    def neighbors(self, v: str) -> frozenset[str]:
        return frozenset(self._adj.get(v, ()))

    def sorted_neighbors(self, v: str) -> list[str]:
        return sorted(self._adj.get(v, ()))

    def degree(self, v: str) -> int:
        return len(self._adj.get(v, ()))

    def has_edge(self, u: str, v: str) -> bool:
        return v in self._adj.get(u, ())

    def add_vertices(self, vs: Iterable[str]) -> None:
        with self._lock:
            for v in vs:
                if v not in self._adj:
                    self._adj[v] = set()
                    self.coefficients_dirty = True

    def add_edges(self, pairs: Iterable[tuple[str, str]]) -> None:
        with self._lock:
            for u, v in pairs:
                self._add_edge(u, v)

    def _add_edge(self, u: str, v: str) -> bool:
        if u == v:
            raise ConfigurationError(f"self-loop on {u!r}")
        au = self._adj.setdefault(u, set())
        av = self._adj.setdefault(v, set())
        if v in au:
            return False
        au.add(v)
        av.add(u)
        self._n_edges += 1
        self.coefficients_dirty = True
        return True

    # -- incremental construction ---------------------------------------
    def scsoa_update(self, observations: Mapping[str, float], threshold: float) -> int:
        """Merge one scan into the graph; returns the number of new edges.

        Every sensed AP becomes a vertex. A pair becomes an edge only when both
        strengths reach ``threshold``; pairs that are already adjacent are skipped.
        """
        if not math.isfinite(threshold):
            raise ConfigurationError("threshold must be finite")
        new_edges = 0
        with self._lock:
            for v in observations:
                if v not in self._adj:
                    self._adj[v] = set()
                    self.coefficients_dirty = True
            strong = sorted(v for v, ss in observations.items() if ss >= threshold)
            for u, v in itertools.combinations(strong, 2):
                if v in self._adj[u]:
                    continue
                new_edges += self._add_edge(u, v)
        return new_edges

    # -- clustering coefficients ---------------------------------------
    def local_coefficient(self, v: str) -> float:
        nbrs = self._adj[v]
        k = len(nbrs)
        if k < 2:
            return 0.0
        links = sum(len(self._adj[u] & nbrs) for u in nbrs) // 2
        return 2.0 * links / (k * (k - 1))

    def recompute_coefficients(self) -> "OverlapGraph":
        with self._lock:
            self.coefficients = {v: self.local_coefficient(v) for v in self._adj}
            self.coefficients_dirty = False
        return self

    def coefficient_table(self, strict: bool = False) -> dict[str, float]:
        """Cached coefficients; ``strict`` forces a recompute when stale."""
        if self.coefficients is None or (strict and self.coefficients_dirty):
            self.recompute_coefficients()
        return self.coefficients

    # -- cliques -------------------------------------------------------
    def is_clique(self, members: Iterable[str]) -> bool:
        s = list(members)
        if any(v not in self._adj for v in s):
            return False
        return all(v in self._adj[u] for u, v in itertools.combinations(s, 2))

    # -- snapshots / io --------------------------------------------------
    def copy(self) -> "OverlapGraph":
        g = OverlapGraph()
        g._adj = {v: set(n) for v, n in self._adj.items()}
        g._n_edges = self._n_edges
        g.coefficients = dict(self.coefficients) if self.coefficients is not None else None
        g.coefficients_dirty = self.coefficients_dirty
        return g

    def to_dict(self) -> dict:
        return {
            "version": GRAPH_SCHEMA_VERSION,
            "vertices": self.vertices,
            "edges": [list(e) for e in self.edges()],
            "coefficients": None if self.coefficients is None else {v: self.coefficients[v] for v in sorted(self.coefficients)},
            "coefficients_dirty": self.coefficients_dirty,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "OverlapGraph":
        if data.get("version") != GRAPH_SCHEMA_VERSION:
            raise ConfigurationError(f"unsupported graph schema version {data.get('version')!r}")
        g = cls()
        g.add_vertices(data["vertices"])
        g.add_edges((u, v) for u, v in data["edges"])
        coeffs = data.get("coefficients")
        g.coefficients = None if coeffs is None else {str(k): float(c) for k, c in coeffs.items()}
        g.coefficients_dirty = bool(data.get("coefficients_dirty", coeffs is None))
        return g

    def digest(self) -> str:
        h = hashlib.sha256()
        for v in self.vertices:
            h.update(v.encode())
            h.update(b";")
        h.update(b"|")
        for u, v in self.edges():
            h.update(f"{u}-{v};".encode())
        return h.hexdigest()[:16]


def scsoa_update(g: OverlapGraph, fingerprint, threshold: float) -> OverlapGraph:
    observations = getattr(fingerprint, "observations", fingerprint)
    g.scsoa_update(observations, threshold)
    return g


def recompute_coefficients(g: OverlapGraph) -> OverlapGraph:
    return g.recompute_coefficients()


def is_clique(g: OverlapGraph, members: Iterable[str]) -> bool:
    return g.is_clique(members)


def brute_force_clique(
    g: OverlapGraph, m: int, seed: int = 0, timeout: float | None = None
) -> frozenset[str] | None:
    """Scan every m-subset of the vertices (in a seeded random order) for a complete one.

    Returns the first complete subset found, or ``None`` when none exists.
    Raises ``BruteForceTimeout`` once ``timeout`` seconds have elapsed.
    """
    if m < 1:
        raise ConfigurationError("m must be >= 1")
    order = g.vertices
    if m > len(order):
        return None
    rng = np.random.default_rng(seed)
    order = [order[i] for i in rng.permutation(len(order))]
    adj = g._adj
    deadline = None if timeout is None else time.perf_counter() + timeout
    t0 = time.perf_counter()
    for checked, combo in enumerate(itertools.combinations(order, m)):
        if deadline is not None and checked & 0xFFFF == 0 and time.perf_counter() > deadline:
            raise BruteForceTimeout(checked, time.perf_counter() - t0)
        complete = True
        for i in range(1, m):
            nb = adj[combo[i]]
            for j in range(i):
                if combo[j] not in nb:
                    complete = False
                    break
            if not complete:
                break
        if complete:
            return frozenset(combo)
    return None


def save_graph(g: OverlapGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(g.to_dict()))


def load_graph(path: str | Path) -> OverlapGraph:
    return OverlapGraph.from_dict(json.loads(Path(path).read_text()))
