"""Geometric graphs, vertex relabeling, bandwidth bounds, and random
geometric graph sampling.

Vertices carry integer labels 0..n-1; the Laplacian's bandwidth is
controlled by how the labels relate to the geometry. The relabeling here
sorts the vertices lexicographically by coordinates, which keeps every
edge within a narrow label window (the sliding-strip bound phi_max).
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DisconnectedGraphError


@dataclass(frozen=True)
class Realization:
    """Ordered agent positions in R^d plus the sensing radius (meters)."""

    positions: np.ndarray  # (n, d)
    r: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None] if pos.size else pos.reshape(0, 1)
        if pos.ndim != 2:
            raise ValueError("positions must be an (n, d) array")
        if not 1 <= pos.shape[1] <= 3:
            raise ValueError("spatial dimension must be 1, 2 or 3")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if not self.r > 0:
            raise ValueError("sensing radius must be positive")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def d(self):
        return self.positions.shape[1]


@dataclass(frozen=True)
class WsnGraph:
    """Undirected graph: vertex count plus a canonical sorted edge list."""

    n_vertices: int
    edges: tuple = ()

    def __post_init__(self):
        if self.n_vertices < 0:
            raise ValueError("vertex count must be >= 0")
        canon = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n_vertices and 0 <= j < self.n_vertices):
                raise ValueError(f"edge ({i}, {j}) out of range")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def n_edges(self):
        return len(self.edges)

    def neighbors(self, i):
        return sorted(
            {b for a, b in self.edges if a == i} | {a for a, b in self.edges if b == i}
        )

    def degree(self, i):
        return sum(1 for a, b in self.edges if i in (a, b))


@dataclass(frozen=True)
class Permutation:
    """Vertex relabeling: map[i] is the new label of old vertex i."""

    map: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.map, dtype=int)
        n = m.shape[0]
        if m.ndim != 1 or not np.array_equal(np.sort(m), np.arange(n)):
            raise ValueError("map must be a bijection on 0..n-1")
        m.setflags(write=False)
        object.__setattr__(self, "map", m)

    @property
    def n(self):
        return self.map.shape[0]

    def inverse(self):
        inv = np.empty(self.n, dtype=int)
        inv[self.map] = np.arange(self.n)
        return Permutation(inv)

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n))


@dataclass(frozen=True)
class RggConfig:
    """Random geometric graph parameters: box domain, Poisson rate, radius."""

    side_lengths: tuple  # domain extents per dimension (meters)
    rate: float  # expected agents per m^d
    radius: float
    seed: int = 0

    def __post_init__(self):
        sides = tuple(float(s) for s in np.atleast_1d(self.side_lengths))
        if not 1 <= len(sides) <= 3:
            raise ValueError("domain dimension must be 1, 2 or 3")
        if any(s <= 0 for s in sides):
            raise ValueError("all domain extents must be positive")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "side_lengths", sides)

    @property
    def volume(self):
        return float(np.prod(self.side_lengths))

    @property
    def d(self):
        return len(self.side_lengths)


def build_geometric_graph(x: Realization) -> WsnGraph:
    """Connect every vertex pair within Euclidean distance r (inclusive)."""
    pos = x.positions
    n = x.n
    diff = pos[:, None, :] - pos[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    i, j = np.nonzero(np.triu(dist2 <= x.r * x.r, k=1))
    return WsnGraph(n, tuple(zip(i.tolist(), j.tolist())))


def laplacian(g: WsnGraph) -> np.ndarray:
    """Graph Laplacian: degrees on the diagonal, -1 at adjacent pairs."""
    lap = np.zeros((g.n_vertices, g.n_vertices))
    for i, j in g.edges:
        lap[i, j] = lap[j, i] = -1.0
        lap[i, i] += 1.0
        lap[j, j] += 1.0
    return lap


def graph_bandwidth(g: WsnGraph) -> int:
    """Max |i - j| over edges; equals the Laplacian's bandwidth."""
    if not g.edges:
        return 0
    return max(j - i for i, j in g.edges)


def vertex_relabel(x: Realization) -> Permutation:
    """Relabel vertices by lexicographic coordinate sort (x, then y, ...).

    Full-coordinate ties fall back to the original index (stable sort),
    so the result is deterministic even on degenerate inputs.
    """
    pos = x.positions
    # np.lexsort sorts by the last key first, so feed coordinates reversed.
    order = np.lexsort(tuple(pos[:, c] for c in reversed(range(x.d))))
    inv = np.empty(x.n, dtype=int)
    inv[order] = np.arange(x.n)
    return Permutation(inv)


def apply_permutation(g: WsnGraph, x: Realization, p: Permutation):
    """Relabel a graph and reorder positions so index matches the new label."""
    if p.n != g.n_vertices or p.n != x.n:
        raise ValueError("permutation size does not match the graph/realization")
    edges = tuple((int(p.map[i]), int(p.map[j])) for i, j in g.edges)
    order = p.inverse().map  # new label -> old vertex
    return (
        WsnGraph(g.n_vertices, edges),
        Realization(x.positions[order], x.r),
    )


def phi_of_relabeling(x: Realization) -> int:
    """Graph bandwidth achieved by the coordinate-sort relabeling."""
    g = build_geometric_graph(x)
    g2, _ = apply_permutation(g, x, vertex_relabel(x))
    return graph_bandwidth(g2)


def phi_max(x: Realization) -> int:
    """Max number of points whose x-coordinates fit in a closed window of
    width r. The maximizing window can always start at a point's coordinate,
    so a sorted sweep suffices."""
    if x.n == 0:
        return 0
    xs = np.sort(x.positions[:, 0])
    # count of points in [xs[i], xs[i] + r], closed on both ends
    hi = np.searchsorted(xs, xs + x.r, side="right")
    return int(np.max(hi - np.arange(xs.size)))


def strip_count_process(x: Realization):
    """Window counts |X ∩ [a, a+r]| for each sorted point coordinate a."""
    xs = np.sort(x.positions[:, 0])
    hi = np.searchsorted(xs, xs + x.r, side="right")
    counts = hi - np.arange(xs.size)
    return [(float(a), int(c)) for a, c in zip(xs, counts)]


def diameter_bound(g: WsnGraph) -> int:
    """|V| minus the graph diameter (BFS from every vertex)."""
    n = g.n_vertices
    adj = [[] for _ in range(n)]
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    diam = 0
    for src in range(n):
        dist = np.full(n, -1, dtype=int)
        dist[src] = 0
        frontier = [src]
        while frontier:
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        if np.any(dist < 0):
            raise DisconnectedGraphError("graph diameter is undefined")
        diam = max(diam, int(dist.max()))
    return n - diam


_BRUTEFORCE_CAP = 9


def min_bandwidth_bruteforce(g: WsnGraph) -> int:
    """Exact minimal bandwidth over all relabelings (exhaustive, n <= 9)."""
    n = g.n_vertices
    if n > _BRUTEFORCE_CAP:
        raise ValueError(f"brute-force search is capped at n = {_BRUTEFORCE_CAP}")
    if not g.edges:
        return 0
    perms = np.array(list(itertools.permutations(range(n))), dtype=int)
    best = np.zeros(perms.shape[0], dtype=int)
    for i, j in g.edges:
        np.maximum(best, np.abs(perms[:, i] - perms[:, j]), out=best)
    return int(best.min())


def sample_rgg(cfg: RggConfig, rng=None):
    """Draw a random geometric graph: Poisson point count, uniform points
    over the box, edges within the sensing radius.

    Returns (graph, realization); a zero-point draw returns an empty graph
    and realization None.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    count = int(rng.poisson(cfg.rate * cfg.volume))
    pts = rng.uniform(0.0, 1.0, size=(count, cfg.d)) * np.asarray(cfg.side_lengths)
    if count == 0:
        return WsnGraph(0, ()), None
    x = Realization(pts, cfg.radius)
    return build_geometric_graph(x), x


def save_positions(path, positions):
    """Write a position CSV with header id,x,y[,z] (meters)."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    d = positions.shape[1]
    cols = ["x", "y", "z"][:d]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id"] + cols)
        for i, row in enumerate(positions):
            w.writerow([i] + [f"{v:.17g}" for v in row])


def load_positions(path) -> np.ndarray:
    """Read a position CSV written by save_positions; rows sorted by id."""
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ValueError(f"no positions in {path}")
    d = sum(c in rows[0] for c in ("x", "y", "z"))
    out = np.zeros((len(rows), d))
    for row in rows:
        i = int(row["id"])
        out[i] = [float(row[c]) for c in ("x", "y", "z")[:d]]
    return out


def save_edges(path, g: WsnGraph):
    """Write the edge list as a CSV with header i,j."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["i", "j"])
        for i, j in g.edges:
            w.writerow([i, j])


def load_edges(path, n_vertices) -> WsnGraph:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return WsnGraph(n_vertices, tuple((int(r["i"]), int(r["j"])) for r in rows))
