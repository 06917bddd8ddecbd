"""Experiment harness: banded-inversion error sweep, localization Monte
Carlo, and the sliding-window scan-statistic study.

All randomness flows from one master seed. Per-trial generators are derived
from (master seed, trial index), so results are identical regardless of
scheduling or worker count; trials can run in parallel.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .banded import dense_inverse, frobenius_error, l_banded_inverse
from .ekf import FilterState, covariance_block, init_filter, lb_ekf_step
from .errors import AllTrialsDivergedError, FilterDivergenceError
from .graph import (
    Realization,
    RggConfig,
    WsnGraph,
    apply_permutation,
    build_geometric_graph,
    load_positions,
    phi_max,
    sample_rgg,
    vertex_relabel,
)
from .model import (
    MeasurementBatch,
    WsnModel,
    h_eval,
    observability_rank_check,
)

ALGO_EKF = "ekf"
ALGO_LBEKF_VR = "lbekf_vr"
ALGO_LBEKF_NOVR = "lbekf_novr"
ALL_ALGORITHMS = (ALGO_EKF, ALGO_LBEKF_VR, ALGO_LBEKF_NOVR)


@dataclass
class ScenarioConfig:
    """Full description of a localization experiment."""

    side: float = 40.0  # square domain extent (m)
    d: int = 2
    n_agents: int | None = 30  # uniform-count agent source
    rate: float | None = None  # Poisson-rate agent source (overrides count)
    positions_path: str | None = None  # explicit agent source (overrides both)
    n_beacons: int = 8
    radius: float = 15.0
    sigma_p: float = 0.02
    sigma_q: float = 2.0
    sigma_r: float = 10.0
    init_var: float = 5.0
    L: int = 20
    timesteps: int = 100
    trials: int = 200
    motion: str = "stationary"  # or "constant-velocity"
    speed: float = 0.05  # per-coordinate speed cap for constant-velocity (m/step)
    seed: int = 42
    algorithms: tuple = ALL_ALGORITHMS

    def __post_init__(self):
        if self.trials < 1 or self.timesteps < 1:
            raise ValueError("trials and timesteps must be >= 1")
        if min(self.sigma_p, self.sigma_q, self.sigma_r, self.init_var) <= 0:
            raise ValueError("all variances must be positive")
        if self.motion not in ("stationary", "constant-velocity"):
            raise ValueError(f"unknown motion mode {self.motion!r}")
        unknown = set(self.algorithms) - set(ALL_ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")


@dataclass
class Scenario:
    """One concrete sampled instance: positions, graph, beacons, relabeling."""

    positions: np.ndarray  # (n, d)
    graph: WsnGraph
    beacons: tuple
    velocity: np.ndarray  # (n*d,) per-step drift

    @property
    def n_agents(self):
        return self.positions.shape[0]

    @property
    def d(self):
        return self.positions.shape[1]


@dataclass
class TrialRecord:
    """Per-trial error streams, reported in the original agent labeling."""

    mse: np.ndarray  # (timesteps+1, n_agents), squared error per agent
    total_mse: np.ndarray  # (timesteps+1,)
    final_xhat: np.ndarray | None  # (n_agents * d,)
    final_blocks: np.ndarray | None  # (n_agents, d, d)
    diverged: bool = False
    diverged_at: int | None = None


@dataclass
class Fig2Record:
    input_bw: int
    L: int
    trial: int
    error: float


@dataclass
class ScanRecord:
    rate: float
    side: float
    n_vertices: int
    phi_max: int
    seed: int


def select_beacons(positions, k, rng):
    """Greedy farthest-point beacon choice: seeded random start, then
    repeatedly add the agent farthest from the chosen set."""
    n = positions.shape[0]
    k = min(k, n)
    first = int(rng.integers(n))
    chosen = [first]
    dist = np.linalg.norm(positions - positions[first], axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(positions - positions[nxt], axis=1))
    return tuple(sorted(chosen))


def build_scenario(cfg: ScenarioConfig, rng) -> Scenario:
    """Sample (or load) one scenario instance from the given generator."""
    if cfg.positions_path is not None:
        positions = load_positions(cfg.positions_path)
    elif cfg.rate is not None:
        _, real = sample_rgg(
            RggConfig((cfg.side,) * cfg.d, cfg.rate, cfg.radius), rng
        )
        if real is None:
            raise ValueError("RGG draw produced zero agents; increase the rate")
        positions = np.asarray(real.positions)
    else:
        positions = rng.uniform(0.0, cfg.side, size=(cfg.n_agents, cfg.d))
    graph = build_geometric_graph(Realization(positions, cfg.radius))
    beacons = select_beacons(positions, cfg.n_beacons, rng)
    nd = positions.size
    if cfg.motion == "constant-velocity":
        velocity = rng.uniform(-cfg.speed, cfg.speed, size=nd)
    else:
        velocity = np.zeros(nd)
    return Scenario(positions, graph, beacons, velocity)


@dataclass
class _AlgoSetup:
    """Everything one filter variant needs: its model, band parameter, and
    the index maps into the original labeling."""

    name: str
    model: WsnModel
    L: int
    state_fwd: np.ndarray | None  # x_alg = x_orig[state_fwd]
    state_back: np.ndarray | None  # x_orig = x_alg[state_back]
    meas_idx: np.ndarray | None  # y_alg = y_orig[meas_idx]


def _state_index(vertex_index, d):
    return (np.asarray(vertex_index)[:, None] * d + np.arange(d)).ravel()


def _build_setups(cfg: ScenarioConfig, scn: Scenario):
    d = scn.d
    model0 = WsnModel(
        d=d,
        graph=scn.graph,
        beacons=scn.beacons,
        sigma_p=cfg.sigma_p,
        sigma_q=cfg.sigma_q,
        sigma_r=cfg.sigma_r,
    )
    full_band = model0.n_states - 1
    setups = []
    if ALGO_EKF in cfg.algorithms:
        setups.append(_AlgoSetup(ALGO_EKF, model0, full_band, None, None, None))
    if ALGO_LBEKF_NOVR in cfg.algorithms:
        setups.append(
            _AlgoSetup(ALGO_LBEKF_NOVR, model0, min(cfg.L, full_band),
                       None, None, None)
        )
    if ALGO_LBEKF_VR in cfg.algorithms:
        perm = vertex_relabel(Realization(scn.positions, cfg.radius))
        graph_vr, real_vr = apply_permutation(
            scn.graph, Realization(scn.positions, cfg.radius), perm
        )
        beacons_vr = tuple(sorted(int(perm.map[b]) for b in scn.beacons))
        model_vr = WsnModel(
            d=d,
            graph=graph_vr,
            beacons=beacons_vr,
            sigma_p=cfg.sigma_p,
            sigma_q=cfg.sigma_q,
            sigma_r=cfg.sigma_r,
        )
        inv = perm.inverse().map
        state_fwd = _state_index(inv, d)  # x_vr = x_orig[state_fwd]
        state_back = _state_index(perm.map, d)  # x_orig = x_vr[state_back]
        # beacon segment: vr beacon position p maps to the original beacon
        # holding the same physical agent
        orig_beacon_pos = {b: p for p, b in enumerate(model0.beacons)}
        beacon_map = np.array(
            [orig_beacon_pos[int(inv[b])] for b in model_vr.beacons], dtype=int
        )
        orig_edge_pos = {e: q for q, e in enumerate(model0.graph.edges)}
        edge_map = np.array(
            [
                orig_edge_pos[
                    (min(int(inv[a]), int(inv[b])), max(int(inv[a]), int(inv[b])))
                ]
                for a, b in model_vr.graph.edges
            ],
            dtype=int,
        )
        off = d * len(model0.beacons)
        meas_idx = np.concatenate(
            [_state_index(beacon_map, d), off + edge_map]
        )
        setups.append(
            _AlgoSetup(ALGO_LBEKF_VR, model_vr, min(cfg.L, full_band),
                       state_fwd, state_back, meas_idx)
        )
    return setups


def _agent_sq_errors(truth_flat, est_flat, n, d):
    diff = (truth_flat - est_flat).reshape(n, d)
    return np.einsum("ij,ij->i", diff, diff)


def _run_trial(cfg: ScenarioConfig, scn: Scenario, setups, trial_seed):
    """Simulate one trial and run every filter variant on the SAME truth
    and measurement noise draws (common random numbers)."""
    rng = np.random.default_rng(trial_seed)
    n, d = scn.n_agents, scn.d
    nd = n * d
    t_steps = cfg.timesteps
    model0 = next(s.model for s in setups if s.meas_idx is None) \
        if any(s.meas_idx is None for s in setups) else None
    if model0 is None:
        # all variants are relabeled; rebuild the original-order model just
        # for measurement synthesis
        model0 = WsnModel(
            d=d, graph=scn.graph, beacons=scn.beacons,
            sigma_p=cfg.sigma_p, sigma_q=cfg.sigma_q, sigma_r=cfg.sigma_r,
        )
    est0 = scn.positions.ravel() + rng.normal(
        0.0, np.sqrt(cfg.init_var), size=nd
    )
    proc = rng.normal(0.0, np.sqrt(cfg.sigma_p), size=(t_steps, nd))
    q_noise = rng.normal(
        0.0, np.sqrt(cfg.sigma_q), size=(t_steps, d * len(model0.beacons))
    )
    r_noise = rng.normal(
        0.0, np.sqrt(cfg.sigma_r), size=(t_steps, model0.graph.n_edges)
    )
    truth = np.empty((t_steps + 1, nd))
    truth[0] = scn.positions.ravel()
    for k in range(t_steps):
        truth[k + 1] = truth[k] + scn.velocity + proc[k]
    y_orig = [
        h_eval(truth[k], model0) + np.concatenate([q_noise[k], r_noise[k]])
        for k in range(t_steps)
    ]

    out = {}
    for setup in setups:
        est = est0 if setup.state_fwd is None else est0[setup.state_fwd]
        v = (
            scn.velocity
            if setup.state_fwd is None
            else scn.velocity[setup.state_fwd]
        )
        state = init_filter(est, cfg.init_var, setup.L)
        mse = np.full((t_steps + 1, n), np.nan)
        mse[0] = _agent_sq_errors(truth[0], est0, n, d)
        diverged = False
        diverged_at = None
        for k in range(t_steps):
            y = y_orig[k] if setup.meas_idx is None else y_orig[k][setup.meas_idx]
            try:
                state = lb_ekf_step(state, setup.model, v, MeasurementBatch(y))
            except FilterDivergenceError as exc:
                diverged = True
                diverged_at = exc.timestep
                break
            est_orig = (
                state.xhat
                if setup.state_back is None
                else state.xhat[setup.state_back]
            )
            mse[k + 1] = _agent_sq_errors(truth[k + 1], est_orig, n, d)
        if diverged:
            record = TrialRecord(
                mse=mse,
                total_mse=mse.sum(axis=1),
                final_xhat=None,
                final_blocks=None,
                diverged=True,
                diverged_at=diverged_at,
            )
        else:
            blocks = np.stack([covariance_block(state, i, d) for i in range(n)])
            if setup.state_back is not None:
                # block of original agent i lives at its relabeled position
                est_orig = state.xhat[setup.state_back]
                back_vertex = setup.state_back[::d] // d
                blocks = blocks[back_vertex]
            else:
                est_orig = state.xhat
            record = TrialRecord(
                mse=mse,
                total_mse=mse.sum(axis=1),
                final_xhat=est_orig.copy(),
                final_blocks=blocks,
                diverged=False,
                diverged_at=None,
            )
        out[setup.name] = record
    return out


def trial_seeds(master_seed, trials):
    """Deterministic per-trial integer seeds derived from the master seed."""
    return [int(s) for s in np.random.SeedSequence(master_seed).generate_state(
        trials, dtype=np.uint64
    )]


def run_localization(cfg: ScenarioConfig, jobs=1):
    """Run the localization Monte Carlo.

    Returns (scenario, results) where results maps each algorithm name to
    one TrialRecord per trial. The scenario itself is sampled once from the
    master seed; trial-level randomness covers the initial estimate and all
    noise draws.
    """
    scen_rng = np.random.default_rng(
        np.random.SeedSequence((int(cfg.seed), 0xA6E27))
    )
    scn = build_scenario(cfg, scen_rng)
    setups = _build_setups(cfg, scn)
    model0 = WsnModel(
        d=scn.d, graph=scn.graph, beacons=scn.beacons,
        sigma_p=cfg.sigma_p, sigma_q=cfg.sigma_q, sigma_r=cfg.sigma_r,
    )
    _, full = observability_rank_check(scn.positions.ravel(), model0)
    if not full:
        warnings.warn(
            "stacked Jacobian is rank deficient at the initial configuration; "
            "the filter may not converge",
            stacklevel=2,
        )
    seeds = trial_seeds(cfg.seed, cfg.trials)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_trial = list(
                pool.map(
                    _run_trial,
                    [cfg] * cfg.trials,
                    [scn] * cfg.trials,
                    [setups] * cfg.trials,
                    seeds,
                )
            )
    else:
        per_trial = [_run_trial(cfg, scn, setups, s) for s in seeds]
    results = {
        s.name: [per_trial[t][s.name] for t in range(cfg.trials)] for s in setups
    }
    return scn, results


@dataclass
class MseCurves:
    mean_mse: np.ndarray  # (timesteps+1, n_agents)
    mean_total: np.ndarray  # (timesteps+1,)
    n_trials: int
    n_diverged: int


def mse_curves(records) -> MseCurves:
    """Trial-averaged per-agent and total MSE curves over non-diverged
    trials; diverged trials are counted, never averaged in."""
    good = [r for r in records if not r.diverged]
    n_diverged = len(records) - len(good)
    if not good:
        raise AllTrialsDivergedError("every trial diverged")
    mean_mse = np.mean([r.mse for r in good], axis=0)
    return MseCurves(
        mean_mse=mean_mse,
        mean_total=mean_mse.sum(axis=1),
        n_trials=len(good),
        n_diverged=n_diverged,
    )


DEFAULT_ELLIPSE_LEVEL = 20.0


def export_ellipses(state: FilterState, d, level=DEFAULT_ELLIPSE_LEVEL):
    """Per-agent estimate and 2x2 covariance block for ellipse rendering."""
    if d != 2:
        raise ValueError("covariance ellipses are only defined for d = 2")
    n_agents = state.M.n // d
    rows = []
    for i in range(n_agents):
        block = covariance_block(state, i, d)
        rows.append(
            {
                "agent": i,
                "cx": float(state.xhat[2 * i]),
                "cy": float(state.xhat[2 * i + 1]),
                "m11": float(block[0, 0]),
                "m12": float(block[0, 1]),
                "m22": float(block[1, 1]),
                "level": float(level),
            }
        )
    return rows


def ellipse_rows_from_record(record: TrialRecord, level=DEFAULT_ELLIPSE_LEVEL):
    """Same table as export_ellipses, from a finished trial record."""
    if record.final_xhat is None:
        raise ValueError("trial diverged; no final covariance to export")
    rows = []
    for i, block in enumerate(record.final_blocks):
        rows.append(
            {
                "agent": i,
                "cx": float(record.final_xhat[2 * i]),
                "cy": float(record.final_xhat[2 * i + 1]),
                "m11": float(block[0, 0]),
                "m12": float(block[0, 1]),
                "m22": float(block[1, 1]),
                "level": float(level),
            }
        )
    return rows


def fig2_matrix(n, bw, rng):
    """One banded test matrix: unit diagonal after normalizing by the
    diagonal value 15, off-diagonals uniform in (-1/15, 1/15) inside the
    target bandwidth, zero outside."""
    a = np.zeros((n, n))
    rows = np.arange(n)
    for k in range(1, bw + 1):
        vals = rng.uniform(-1.0, 1.0, size=n - k)
        a[rows[k:], rows[: n - k]] = vals
        a[rows[: n - k], rows[k:]] = vals
    a[rows, rows] = 15.0
    return a / 15.0


def run_fig2(n=500, input_bandwidths=(5, 10, 25), L_values=None, trials=3,
             seed=0):
    """Banded-inversion error sweep: for each generated matrix, compare the
    L-banded approximate inverse against the exact inverse across L."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if L_values is None:
        L_values = tuple(range(0, 51))
    ss = np.random.SeedSequence(seed)
    seeds = iter(ss.generate_state(len(input_bandwidths) * trials,
                                   dtype=np.uint64))
    records = []
    for bw in input_bandwidths:
        for t in range(trials):
            rng = np.random.default_rng(int(next(seeds)))
            a = fig2_matrix(n, bw, rng)
            exact = dense_inverse(a)
            for L in L_values:
                err = frobenius_error(l_banded_inverse(a, L), exact)
                records.append(Fig2Record(int(bw), int(L), t, err))
    return records


def fig2_mean_errors(records):
    """Mean error per (input_bw, L) over trials."""
    sums = {}
    counts = {}
    for r in records:
        key = (r.input_bw, r.L)
        sums[key] = sums.get(key, 0.0) + r.error
        counts[key] = counts.get(key, 0) + 1
    return {k: sums[k] / counts[k] for k in sums}


def run_scan(lambdas, sides, r, trials, seed=0):
    """Sliding-window scan statistic on 1-D Poisson point processes.

    For each (rate, side): draw N ~ Po(rate * side^2), place N uniform
    x-coordinates in [0, side], record the max window count. The 2-D
    problem reduces to 1-D because the relabeling sorts on x alone.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    total = len(lambdas) * len(sides) * trials
    seeds = iter(
        np.random.SeedSequence(seed).generate_state(total, dtype=np.uint64)
    )
    records = []
    for lam in lambdas:
        for side in sides:
            for _ in range(trials):
                s = int(next(seeds))
                rng = np.random.default_rng(s)
                count = int(rng.poisson(lam * side * side))
                if count == 0:
                    records.append(ScanRecord(lam, side, 0, 0, s))
                    continue
                xs = rng.uniform(0.0, side, size=count)
                pm = phi_max(Realization(xs[:, None], r))
                records.append(ScanRecord(lam, side, count, pm, s))
    return records


# ---------------------------------------------------------------------------
# CSV serialization (17 significant digits throughout)

def _g17(v):
    return f"{float(v):.17g}"


def write_fig2_csv(path, records):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["input_bw", "L", "trial", "error"])
        for r in records:
            w.writerow([r.input_bw, r.L, r.trial, _g17(r.error)])


def write_mse_csv(path, results):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["algorithm", "trial", "timestep", "agent", "mse"])
        for algo in sorted(results):
            for t, rec in enumerate(results[algo]):
                steps, n_agents = rec.mse.shape
                for k in range(steps):
                    if rec.diverged and np.isnan(rec.mse[k, 0]):
                        break
                    for i in range(n_agents):
                        w.writerow([algo, t, k, i, _g17(rec.mse[k, i])])


def write_mse_total_csv(path, results):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["algorithm", "timestep", "mean_total_mse", "n_trials", "n_diverged"]
        )
        for algo in sorted(results):
            curves = mse_curves(results[algo])
            for k, v in enumerate(curves.mean_total):
                w.writerow([algo, k, _g17(v), curves.n_trials,
                            curves.n_diverged])


def write_ellipses_csv(path, rows_by_algo):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["algorithm", "agent", "cx", "cy", "m11", "m12", "m22", "level"]
        )
        for algo in sorted(rows_by_algo):
            for row in rows_by_algo[algo]:
                w.writerow(
                    [algo, row["agent"]]
                    + [_g17(row[c]) for c in ("cx", "cy", "m11", "m12", "m22",
                                              "level")]
                )


def write_scan_csv(path, records):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["lambda", "side", "n_vertices", "phi_max", "seed"])
        for r in records:
            w.writerow([_g17(r.rate), _g17(r.side), r.n_vertices, r.phi_max,
                        r.seed])
