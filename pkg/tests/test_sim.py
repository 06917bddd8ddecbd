import numpy as np
import pytest

from wsnloc.banded import bandwidth, dense_inverse, frobenius_error
from wsnloc.ekf import init_filter
from wsnloc.errors import AllTrialsDivergedError
from wsnloc.graph import Realization, phi_max
from wsnloc.sim import (
    ALGO_EKF,
    ALGO_LBEKF_NOVR,
    ALGO_LBEKF_VR,
    DEFAULT_ELLIPSE_LEVEL,
    MseCurves,
    ScenarioConfig,
    TrialRecord,
    build_scenario,
    ellipse_rows_from_record,
    export_ellipses,
    fig2_matrix,
    fig2_mean_errors,
    mse_curves,
    run_fig2,
    run_localization,
    run_scan,
    select_beacons,
    trial_seeds,
)

SMALL = dict(
    side=20.0, n_agents=12, n_beacons=4, radius=12.0, L=8,
    timesteps=15, trials=4, seed=7,
)


class TestFig2Matrix:
    def test_structure(self):
        rng = np.random.default_rng(0)
        a = fig2_matrix(50, 5, rng)
        assert bandwidth(a) <= 5
        np.testing.assert_array_equal(np.diag(a), np.ones(50))
        np.testing.assert_array_equal(a, a.T)
        off = a[np.abs(np.subtract.outer(range(50), range(50))) == 3]
        assert np.all(np.abs(off) <= 1.0 / 15.0)

    def test_generic_band_fill(self):
        rng = np.random.default_rng(1)
        a = fig2_matrix(50, 5, rng)
        for k in range(1, 6):
            assert np.abs(np.diag(a, k)).min() > 0.0


class TestRunFig2:
    def test_record_grid(self):
        records = run_fig2(n=40, input_bandwidths=(2, 4), L_values=(0, 2, 4),
                           trials=2, seed=0)
        assert len(records) == 2 * 2 * 3
        keys = {(r.input_bw, r.L, r.trial) for r in records}
        assert len(keys) == len(records)

    def test_error_vanishes_at_full_band(self):
        records = run_fig2(n=30, input_bandwidths=(3,), L_values=(29,),
                           trials=1, seed=0)
        assert records[0].error <= 1e-10

    def test_mean_matches_direct_computation(self):
        records = run_fig2(n=30, input_bandwidths=(3,), L_values=(0, 3),
                           trials=3, seed=5)
        means = fig2_mean_errors(records)
        direct = np.mean([r.error for r in records if r.L == 3])
        assert means[(3, 3)] == pytest.approx(direct)
        assert means[(3, 3)] < means[(3, 0)]

    def test_deterministic(self):
        a = run_fig2(n=30, input_bandwidths=(3,), L_values=(1,), trials=2,
                     seed=9)
        b = run_fig2(n=30, input_bandwidths=(3,), L_values=(1,), trials=2,
                     seed=9)
        assert [r.error for r in a] == [r.error for r in b]


class TestSelectBeacons:
    def test_spread_over_corners(self):
        positions = np.array(
            [[0.0, 0], [10, 0], [0, 10], [10, 10], [5, 5]], dtype=float
        )
        beacons = select_beacons(positions, 4, np.random.default_rng(0))
        assert set(beacons) <= {0, 1, 2, 3, 4}
        assert len(beacons) == 4
        # the greedy growth always covers at least three corners
        assert len(set(beacons) & {0, 1, 2, 3}) >= 3

    def test_k_exceeds_n(self):
        positions = np.array([[0.0, 0], [1, 1]])
        assert select_beacons(positions, 5, np.random.default_rng(0)) == (0, 1)


class TestBuildScenario:
    def test_uniform_count_source(self):
        cfg = ScenarioConfig(**SMALL)
        scn = build_scenario(cfg, np.random.default_rng(0))
        assert scn.positions.shape == (12, 2)
        assert len(scn.beacons) == 4
        assert np.all(scn.velocity == 0.0)

    def test_poisson_source(self):
        cfg = ScenarioConfig(**{**SMALL, "rate": 0.05, "n_agents": None})
        scn = build_scenario(cfg, np.random.default_rng(3))
        assert scn.positions.shape[1] == 2
        assert scn.n_agents > 0

    def test_constant_velocity(self):
        cfg = ScenarioConfig(**{**SMALL, "motion": "constant-velocity",
                                "speed": 0.1})
        scn = build_scenario(cfg, np.random.default_rng(0))
        assert np.any(scn.velocity != 0.0)
        assert np.abs(scn.velocity).max() <= 0.1

    def test_invalid_motion(self):
        with pytest.raises(ValueError):
            ScenarioConfig(**{**SMALL, "motion": "brownian"})

    def test_invalid_algorithm(self):
        with pytest.raises(ValueError):
            ScenarioConfig(**{**SMALL, "algorithms": ("kalman",)})


class TestTrialSeeds:
    def test_deterministic_and_distinct(self):
        a = trial_seeds(42, 16)
        assert a == trial_seeds(42, 16)
        assert len(set(a)) == 16

    def test_prefix_stability(self):
        assert trial_seeds(42, 16)[:4] == trial_seeds(42, 4)


class TestRunLocalization:
    def test_smoke_all_algorithms(self):
        cfg = ScenarioConfig(**SMALL)
        scn, results = run_localization(cfg)
        assert set(results) == {ALGO_EKF, ALGO_LBEKF_VR, ALGO_LBEKF_NOVR}
        for records in results.values():
            assert len(records) == cfg.trials
            for rec in records:
                assert rec.mse.shape == (cfg.timesteps + 1, scn.n_agents)
                assert rec.total_mse.shape == (cfg.timesteps + 1,)
                if not rec.diverged:
                    assert np.all(np.isfinite(rec.mse))
                    assert rec.final_blocks.shape == (scn.n_agents, 2, 2)

    def test_errors_shrink_from_initial(self):
        cfg = ScenarioConfig(**SMALL)
        _, results = run_localization(cfg)
        curves = mse_curves(results[ALGO_EKF])
        assert curves.mean_total[-1] < 0.5 * curves.mean_total[0]

    def test_common_random_numbers_share_initial_error(self):
        cfg = ScenarioConfig(**SMALL)
        _, results = run_localization(cfg)
        base = results[ALGO_EKF]
        for algo in (ALGO_LBEKF_VR, ALGO_LBEKF_NOVR):
            for rec, ref in zip(results[algo], base):
                np.testing.assert_allclose(rec.mse[0], ref.mse[0])

    def test_novr_equals_ekf_when_band_is_full(self):
        cfg = ScenarioConfig(**{**SMALL, "L": 10_000, "trials": 2,
                                "timesteps": 5})
        _, results = run_localization(cfg)
        for rec, ref in zip(results[ALGO_LBEKF_NOVR], results[ALGO_EKF]):
            np.testing.assert_array_equal(rec.mse, ref.mse)

    def test_seed_determinism(self):
        cfg = ScenarioConfig(**{**SMALL, "trials": 2, "timesteps": 5})
        _, a = run_localization(cfg)
        _, b = run_localization(cfg)
        for algo in a:
            for ra, rb in zip(a[algo], b[algo]):
                np.testing.assert_array_equal(ra.mse, rb.mse)

    def test_parallel_matches_sequential(self):
        cfg = ScenarioConfig(**{**SMALL, "trials": 4, "timesteps": 5})
        _, seq = run_localization(cfg, jobs=1)
        _, par = run_localization(cfg, jobs=2)
        for algo in seq:
            for ra, rb in zip(seq[algo], par[algo]):
                np.testing.assert_array_equal(ra.mse, rb.mse)

    def test_beacons_reach_lower_steady_state_mse(self):
        cfg = ScenarioConfig(**{**SMALL, "trials": 8, "timesteps": 40})
        scn, results = run_localization(cfg)
        curves = mse_curves(results[ALGO_EKF])
        steady = curves.mean_mse[-10:].mean(axis=0)
        beacon_mask = np.zeros(scn.n_agents, dtype=bool)
        beacon_mask[list(scn.beacons)] = True
        assert steady[beacon_mask].mean() < steady[~beacon_mask].mean()


class TestMseCurves:
    def _record(self, value, diverged=False):
        mse = np.full((3, 2), value)
        return TrialRecord(mse=mse, total_mse=mse.sum(axis=1),
                           final_xhat=None, final_blocks=None,
                           diverged=diverged)

    def test_single_trial_identity(self):
        rec = self._record(2.0)
        curves = mse_curves([rec])
        np.testing.assert_array_equal(curves.mean_mse, rec.mse)
        np.testing.assert_array_equal(curves.mean_total, rec.total_mse)
        assert curves.n_trials == 1 and curves.n_diverged == 0

    def test_mean_of_two(self):
        curves = mse_curves([self._record(1.0), self._record(3.0)])
        np.testing.assert_array_equal(curves.mean_mse,
                                      np.full((3, 2), 2.0))

    def test_diverged_excluded(self):
        curves = mse_curves(
            [self._record(1.0), self._record(99.0, diverged=True)]
        )
        np.testing.assert_array_equal(curves.mean_mse, np.full((3, 2), 1.0))
        assert curves.n_diverged == 1

    def test_all_diverged_raises(self):
        with pytest.raises(AllTrialsDivergedError):
            mse_curves([self._record(1.0, diverged=True)])


class TestEllipses:
    def test_isotropic_covariance(self):
        state = init_filter(np.array([1.0, 2.0, 3.0, 4.0]), 5.0, 0)
        rows = export_ellipses(state, 2, level=9.0)
        assert [r["agent"] for r in rows] == [0, 1]
        assert rows[0] == {
            "agent": 0, "cx": 1.0, "cy": 2.0,
            "m11": 5.0, "m12": 0.0, "m22": 5.0, "level": 9.0,
        }

    def test_default_level(self):
        state = init_filter(np.zeros(2), 1.0, 0)
        assert export_ellipses(state, 2)[0]["level"] == DEFAULT_ELLIPSE_LEVEL

    def test_rejects_other_dimensions(self):
        state = init_filter(np.zeros(3), 1.0, 0)
        with pytest.raises(ValueError):
            export_ellipses(state, 3)

    def test_rows_from_record(self):
        rec = TrialRecord(
            mse=np.zeros((1, 1)), total_mse=np.zeros(1),
            final_xhat=np.array([0.5, -0.5]),
            final_blocks=np.array([[[2.0, 0.3], [0.3, 1.0]]]),
        )
        row = ellipse_rows_from_record(rec, level=4.0)[0]
        assert row["m11"] == 2.0 and row["m12"] == 0.3 and row["m22"] == 1.0

    def test_diverged_record_rejected(self):
        rec = TrialRecord(
            mse=np.zeros((1, 1)), total_mse=np.zeros(1),
            final_xhat=None, final_blocks=None, diverged=True,
        )
        with pytest.raises(ValueError):
            ellipse_rows_from_record(rec)


class TestRunScan:
    def test_record_count_and_fields(self):
        records = run_scan([0.01, 0.05], [20.0], r=5.0, trials=10, seed=0)
        assert len(records) == 20
        for rec in records:
            assert rec.phi_max <= max(rec.n_vertices, 0)
            assert rec.side == 20.0

    def test_deterministic(self):
        a = run_scan([0.05], [20.0], r=5.0, trials=20, seed=3)
        b = run_scan([0.05], [20.0], r=5.0, trials=20, seed=3)
        assert [(r.n_vertices, r.phi_max, r.seed) for r in a] == [
            (r.n_vertices, r.phi_max, r.seed) for r in b
        ]

    def test_poisson_mean(self):
        records = run_scan([0.04], [20.0], r=5.0, trials=4000, seed=1)
        mean = np.mean([r.n_vertices for r in records])
        assert abs(mean - 16.0) / 16.0 < 0.05

    def test_replay_from_seed(self):
        rec = next(r for r in run_scan([0.05], [20.0], r=5.0, trials=5,
                                       seed=2) if r.n_vertices > 0)
        rng = np.random.default_rng(rec.seed)
        count = int(rng.poisson(rec.rate * rec.side**2))
        xs = rng.uniform(0.0, rec.side, size=count)
        assert count == rec.n_vertices
        assert phi_max(Realization(xs[:, None], 5.0)) == rec.phi_max

    def test_expected_window_count_identity(self):
        # a window of width r over a rate-lambda strip of height l holds
        # lambda*l*r points on average, i.e. r*sqrt(lambda E|V|) when the
        # domain is an l x l square.
        lam, side, r = 0.05, 20.0, 5.0
        expected_vertices = lam * side * side
        assert lam * side * r == pytest.approx(
            r * np.sqrt(lam * expected_vertices)
        )

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            run_scan([0.05], [20.0], r=0.0, trials=5)
        with pytest.raises(ValueError):
            run_scan([0.05], [20.0], r=5.0, trials=0)
