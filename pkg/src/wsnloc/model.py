"""Motion and measurement models for distance-based network localization.

The stacked measurement vector holds the beacons' own-position readings
first (in beacon-label order), then one distance per edge in lexicographic
edge order. The measurement Jacobian is sparse: identity rows for beacons,
a +/- unit-direction pair per distance edge.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .banded import BandedSymMatrix
from .errors import CoincidentEndpointsError
from .graph import WsnGraph, graph_bandwidth


@dataclass(frozen=True)
class WsnModel:
    """Dimensions, topology, beacon set and noise variances of the network.

    Edge ordering is the graph's canonical lexicographic (min, max) order;
    it fixes the row order of the Jacobian and of measurement batches.
    """

    d: int
    graph: WsnGraph
    beacons: tuple
    sigma_p: float  # process noise variance (m^2)
    sigma_q: float  # beacon self-measurement noise variance (m^2)
    sigma_r: float  # pairwise measurement noise variance (m^2)
    kind: str = "distance"
    m: int = 1  # per-edge measurement dimension

    def __post_init__(self):
        if self.kind != "distance":
            raise ValueError(f"unsupported measurement kind {self.kind!r}")
        if self.m != 1:
            raise ValueError("distance measurements are scalar (m = 1)")
        if min(self.sigma_p, self.sigma_q, self.sigma_r) <= 0:
            raise ValueError("all noise variances must be positive")
        beacons = tuple(sorted(set(int(b) for b in self.beacons)))
        if not beacons:
            raise ValueError("at least one beacon is required")
        if beacons[0] < 0 or beacons[-1] >= self.graph.n_vertices:
            raise ValueError("beacon label out of range")
        if self.d == 2 and len(beacons) < 2:
            warnings.warn(
                "distance-based 2-D localization generally needs >= 2 beacons "
                "for observability",
                stacklevel=2,
            )
        object.__setattr__(self, "beacons", beacons)
        # column indices, precomputed once: beacon coordinate columns and the
        # 2d state columns touched by each edge row
        bc = np.concatenate(
            [np.arange(b * self.d, (b + 1) * self.d) for b in beacons]
        )
        edges = self.graph.edges
        if edges:
            ei = np.array([e[0] for e in edges])
            ej = np.array([e[1] for e in edges])
            cols = np.hstack(
                [
                    ei[:, None] * self.d + np.arange(self.d),
                    ej[:, None] * self.d + np.arange(self.d),
                ]
            )
        else:
            ei = ej = np.zeros(0, dtype=int)
            cols = np.zeros((0, 2 * self.d), dtype=int)
        object.__setattr__(self, "_beacon_cols", bc)
        object.__setattr__(self, "_edge_i", ei)
        object.__setattr__(self, "_edge_j", ej)
        object.__setattr__(self, "_edge_cols", cols)

    @property
    def n_agents(self):
        return self.graph.n_vertices

    @property
    def n_states(self):
        return self.d * self.n_agents

    @property
    def n_meas(self):
        return self.d * len(self.beacons) + self.m * self.graph.n_edges


@dataclass(frozen=True)
class MeasurementBatch:
    """Stacked measurement vector: d*|B| beacon entries then m*|E| edge
    entries, in the model's fixed orders."""

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1:
            raise ValueError("measurement batch must be a vector")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class SparseJacobian:
    """Measurement Jacobian in row-sparse form.

    Beacon rows hold a single unit entry; each edge row holds the unit
    direction in vertex i's columns and its negation in vertex j's.
    """

    n_rows: int
    n_cols: int
    beacon_cols: np.ndarray  # (d|B|,) one column per beacon row
    edge_cols: np.ndarray  # (|E|, 2d)
    edge_vals: np.ndarray  # (|E|, 2d)

    def row_entries(self, r):
        """(columns, values) of row r, nonzeros only."""
        nb = self.beacon_cols.shape[0]
        if r < nb:
            return (
                np.array([self.beacon_cols[r]]),
                np.array([1.0]),
            )
        return self.edge_cols[r - nb], self.edge_vals[r - nb]

    def to_dense(self):
        h = np.zeros((self.n_rows, self.n_cols))
        nb = self.beacon_cols.shape[0]
        h[np.arange(nb), self.beacon_cols] = 1.0
        rows = nb + np.arange(self.edge_cols.shape[0])
        h[rows[:, None], self.edge_cols] = self.edge_vals
        return h

    def rmatvec(self, w):
        """H^T w using only the stored nonzeros."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n_rows,):
            raise ValueError("vector length mismatch")
        nb = self.beacon_cols.shape[0]
        z = np.zeros(self.n_cols)
        np.add.at(z, self.beacon_cols, w[:nb])
        if self.edge_cols.size:
            contrib = self.edge_vals * w[nb:, None]
            np.add.at(z, self.edge_cols.ravel(), contrib.ravel())
        return z


def simulate_step(x, v, model: WsnModel, rng):
    """One step of the single-integrator motion: x + v + Gaussian noise."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != (model.n_states,) or v.shape != (model.n_states,):
        raise ValueError("state/input length mismatch")
    p = rng.normal(0.0, np.sqrt(model.sigma_p), size=model.n_states)
    return x + v + p


def _edge_diffs(xhat, model):
    pos = xhat.reshape(model.n_agents, model.d)
    diff = pos[model._edge_i] - pos[model._edge_j]
    norms = np.linalg.norm(diff, axis=1) if diff.size else np.zeros(0)
    return diff, norms


def h_eval(xhat, model: WsnModel):
    """Predicted measurement vector at the given state estimate.

    Coincident edge endpoints make the distance derivative undefined
    downstream; the distance itself is returned as 0 with a warning.
    """
    xhat = np.asarray(xhat, dtype=float)
    if xhat.shape != (model.n_states,):
        raise ValueError("state length mismatch")
    pos = xhat.reshape(model.n_agents, model.d)
    diff, norms = _edge_diffs(xhat, model)
    if norms.size and np.any(norms == 0.0):
        warnings.warn("coincident edge endpoints: distance is 0, Jacobian "
                      "will be undefined", stacklevel=2)
    return np.concatenate([pos[list(model.beacons)].ravel(), norms])


def measure(x_true, model: WsnModel, rng) -> MeasurementBatch:
    """Noisy measurement draw: h(x) plus independent Gaussian noise."""
    clean = h_eval(x_true, model)
    nb = model.d * len(model.beacons)
    noise = np.concatenate(
        [
            rng.normal(0.0, np.sqrt(model.sigma_q), size=nb),
            rng.normal(0.0, np.sqrt(model.sigma_r), size=clean.size - nb),
        ]
    )
    return MeasurementBatch(clean + noise)


def jacobian(xhat, model: WsnModel) -> SparseJacobian:
    """Measurement Jacobian at xhat (sparse rows)."""
    xhat = np.asarray(xhat, dtype=float)
    if xhat.shape != (model.n_states,):
        raise ValueError("state length mismatch")
    diff, norms = _edge_diffs(xhat, model)
    if norms.size and np.any(norms == 0.0):
        bad = int(np.argmin(norms))
        raise CoincidentEndpointsError(
            f"edge {model.graph.edges[bad]} has coincident endpoint estimates"
        )
    unit = diff / norms[:, None] if diff.size else diff.reshape(0, model.d)
    vals = np.hstack([unit, -unit])
    return SparseJacobian(
        n_rows=model.n_meas,
        n_cols=model.n_states,
        beacon_cols=model._beacon_cols,
        edge_cols=model._edge_cols,
        edge_vals=vals,
    )


def information_matrix(h: SparseJacobian, model: WsnModel) -> BandedSymMatrix:
    """S = H^T R^{-1} H, assembled sparsely and stored banded.

    The d x d block pattern of S matches the Laplacian's adjacency pattern,
    so its bandwidth is at most d*(graph bandwidth + 1) - 1.
    """
    n = model.n_states
    s = np.zeros((n, n))
    s[model._beacon_cols, model._beacon_cols] += 1.0 / model.sigma_q
    if h.edge_cols.size:
        blocks = h.edge_vals[:, :, None] * h.edge_vals[:, None, :] / model.sigma_r
        np.add.at(s, (h.edge_cols[:, :, None], h.edge_cols[:, None, :]), blocks)
    bw = min(n - 1, model.d * (graph_bandwidth(model.graph) + 1) - 1)
    return BandedSymMatrix.from_dense(s, bw, check=True)


def r_inv_diag(model: WsnModel):
    """Diagonal of R^{-1} in the stacked measurement order."""
    nb = model.d * len(model.beacons)
    return np.concatenate(
        [
            np.full(nb, 1.0 / model.sigma_q),
            np.full(model.m * model.graph.n_edges, 1.0 / model.sigma_r),
        ]
    )


def gain_apply(m_cov: BandedSymMatrix, h: SparseJacobian, model: WsnModel,
               innovation):
    """M H^T R^{-1} nu without forming any dense product."""
    innovation = np.asarray(innovation, dtype=float)
    if innovation.shape != (h.n_rows,):
        raise ValueError("innovation length mismatch")
    z = h.rmatvec(r_inv_diag(model) * innovation)
    return m_cov.matvec(z)


def observability_rank_check(xhat, model: WsnModel):
    """Numerical column rank of the Jacobian at xhat.

    With identity dynamics the stacked observability matrix is
    rank-equivalent to H itself. Advisory: never blocks the filter.
    """
    h = jacobian(xhat, model).to_dense()
    rank = int(np.linalg.matrix_rank(h))
    return rank, rank == model.n_states
