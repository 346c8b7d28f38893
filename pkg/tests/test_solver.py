import numpy as np
import pytest

from momreg import (
    ConfigError,
    Dataset,
    DesignSpec,
    DivergenceError,
    GridCapExceeded,
    GridSpec,
    LinearPredictor,
    NoiseSpec,
    ObjectiveConfig,
    Regularizer,
    SolverConfig,
    erm_fit,
    excess_risk,
    generate,
    lasso_fit,
    make_partition,
    med_increment,
    mom_minimax_fit,
    oracle_grid_fit,
)


class TestErmFit:
    def test_exactly_linear_data(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((50, 3))
        theta = np.array([2.0, -1.0, 0.25])
        fit = erm_fit(Dataset(X, X @ theta))
        np.testing.assert_allclose(fit.theta, theta, atol=1e-8)

    def test_hand_normal_equation(self):
        fit = erm_fit(Dataset(np.array([[1.0], [2.0]]), np.array([2.0, 4.0])))
        np.testing.assert_allclose(fit.theta, [2.0])

    def test_orthonormal_design_interpolates(self):
        X = np.eye(3)
        y = np.array([1.0, -2.0, 3.0])
        fit = erm_fit(Dataset(X, y))
        np.testing.assert_allclose(X @ fit.theta, y, atol=1e-10)

    def test_singular_design_survives_via_jitter(self):
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        fit = erm_fit(Dataset(X, np.array([1.0, 2.0, 3.0])))
        assert np.all(np.isfinite(fit.theta))


class TestLassoFit:
    def test_noiseless_sparse_recovery(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((400, 10))
        theta = np.zeros(10)
        theta[:2] = 3.0
        fit = lasso_fit(Dataset(X, X @ theta), lam=0.01)
        assert np.all(np.abs(fit.theta[2:]) < 0.05)
        np.testing.assert_allclose(fit.theta[:2], 3.0, atol=0.1)

    def test_huge_lambda_zeroes_out(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((100, 4))
        fit = lasso_fit(Dataset(X, rng.standard_normal(100)), lam=1e4)
        np.testing.assert_array_equal(fit.theta, np.zeros(4))


class TestSolverConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            SolverConfig(step_f=-1.0)
        with pytest.raises(ConfigError):
            SolverConfig(iterations=0)
        with pytest.raises(ConfigError):
            SolverConfig(restarts=0)
        with pytest.raises(ConfigError):
            SolverConfig(tolerance=0.0)


class TestMomMinimaxFit:
    def test_noiseless_recovery(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((200, 3))
        theta_star = np.array([1.0, -2.0, 0.5])
        data = Dataset(X, X @ theta_star)
        p = make_partition(200, 5)
        res = mom_minimax_fit(data, p, ObjectiveConfig(), SolverConfig(seed=0))
        np.testing.assert_allclose(res.theta_hat, theta_star, atol=1e-4)
        assert res.converged

    def test_deterministic_given_seed(self):
        design = DesignSpec.identity(3)
        data = generate(300, 3, np.ones(3), design, NoiseSpec("gaussian", 1.0), 5)
        p = make_partition(300, 15)
        a = mom_minimax_fit(data, p, ObjectiveConfig(), SolverConfig(seed=7))
        b = mom_minimax_fit(data, p, ObjectiveConfig(), SolverConfig(seed=7))
        np.testing.assert_array_equal(a.theta_hat, b.theta_hat)
        assert a.trace == b.trace
        assert a.best_surrogate == b.best_surrogate

    def test_trace_shape(self):
        design = DesignSpec.identity(2)
        data = generate(100, 2, np.ones(2), design, NoiseSpec("gaussian", 1.0), 6)
        p = make_partition(100, 5)
        cfg = SolverConfig(iterations=40, restarts=3, seed=0)
        res = mom_minimax_fit(data, p, ObjectiveConfig(), cfg)
        assert len(res.trace) == 40 * 3
        assert all(0 <= rec.median_block < p.n for rec in res.trace)

    def test_divergence_raises(self):
        design = DesignSpec.identity(2)
        data = generate(100, 2, np.ones(2), design, NoiseSpec("gaussian", 1.0), 7)
        p = make_partition(100, 5)
        cfg = SolverConfig(step_f=1e150, step_g=1e150, iterations=30, seed=0)
        with pytest.raises(DivergenceError):
            mom_minimax_fit(data, p, ObjectiveConfig(), cfg)

    def test_matches_grid_oracle_d1(self):
        hits = 0
        for seed in range(6):
            rng = np.random.default_rng(1000 + seed)
            X = rng.standard_normal((300, 1))
            ts = np.array([rng.uniform(-1.5, 1.5)])
            data = Dataset(X, X @ ts + rng.standard_normal(300))
            p = make_partition(300, 15)
            fit = mom_minimax_fit(data, p, ObjectiveConfig(), SolverConfig(seed=seed))
            grid = GridSpec(axes=((-3.0, 3.0, 0.01),))
            oracle = oracle_grid_fit(data, p, ObjectiveConfig(), grid, grid)
            if abs(fit.theta_hat[0] - oracle.theta_hat[0]) <= 0.02:
                hits += 1
        assert hits >= 5

    def test_audited_minimizer_dominates_f_star(self):
        from momreg import AdversaryBudget, phi_hat

        design = DesignSpec.identity(4)
        theta_star = np.array([1.0, -1.0, 0.5, 0.0])
        for seed in range(3):
            data = generate(800, 4, theta_star, design, NoiseSpec("gaussian", 1.0), seed)
            p = make_partition(800, 21)
            fit = mom_minimax_fit(data, p, ObjectiveConfig(), SolverConfig(seed=seed))
            budget = AdversaryBudget(4, 120)
            phi_tilde = phi_hat(fit.predictor, data, p, budget, seed=99).value
            phi_star = phi_hat(LinearPredictor(theta_star), data, p, budget, seed=99).value
            assert phi_tilde <= phi_star + 5e-3

    def test_corruption_leaves_clean_blocks_untouched(self):
        from momreg import CorruptionSpec, corrupt

        design = DesignSpec.identity(3)
        data = generate(300, 3, np.ones(3), design, NoiseSpec("gaussian", 1.0), 11)
        p = make_partition(300, 15)
        prev_bad_rows = np.zeros(0, dtype=int)
        for count in (0, 3, 7):
            spec = CorruptionSpec(count=count, indices=tuple(range(count)))
            cdata, idx = corrupt(data, spec, 0)
            clean_rows = np.setdiff1d(np.arange(300), np.asarray(idx, dtype=int))
            np.testing.assert_array_equal(
                cdata.features[clean_rows], data.features[clean_rows]
            )
            np.testing.assert_array_equal(
                cdata.responses[clean_rows], data.responses[clean_rows]
            )
            assert len(idx) == count
            assert set(prev_bad_rows) <= set(idx)
            prev_bad_rows = np.asarray(idx, dtype=int)


class TestOracleGridFit:
    def test_singleton_grid_returns_theta_star(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((60, 2))
        theta_star = np.array([0.5, -0.25])
        data = Dataset(X, X @ theta_star)
        p = make_partition(60, 3)
        grid = GridSpec(axes=((0.5, 0.5, 1.0), (-0.25, -0.25, 1.0)))
        fit = oracle_grid_fit(data, p, ObjectiveConfig(), grid, grid)
        np.testing.assert_array_equal(fit.theta_hat, theta_star)

    def test_noiseless_d1_returns_nearest_grid_point(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((90, 1))
        data = Dataset(X, X @ np.array([0.703]))
        p = make_partition(90, 9)
        grid = GridSpec(axes=((-2.0, 2.0, 0.01),))
        fit = oracle_grid_fit(data, p, ObjectiveConfig(), grid, grid)
        np.testing.assert_allclose(fit.theta_hat, [0.70], atol=1e-9)

    def test_cap_enforced(self):
        rng = np.random.default_rng(10)
        X = rng.standard_normal((30, 1))
        data = Dataset(X, rng.standard_normal(30))
        p = make_partition(30, 3)
        grid = GridSpec(axes=((-1.0, 1.0, 0.001),))
        with pytest.raises(GridCapExceeded):
            oracle_grid_fit(data, p, ObjectiveConfig(), grid, grid, cap=1000)

    def test_lexicographic_tie_break(self):
        # perfectly symmetric data: objective is even in theta, so +t and -t
        # tie and the smaller (more negative) grid point must win
        X = np.array([[1.0], [-1.0], [2.0], [-2.0], [1.5], [-1.5]])
        data = Dataset(X, np.zeros(6))
        p = make_partition(6, 3)
        grid = GridSpec(axes=((-1.0, 1.0, 1.0),))  # {-1, 0, 1}
        fit = oracle_grid_fit(data, p, ObjectiveConfig(), grid, grid)
        # 0 is the strict minimizer here; ties among symmetric non-optimal
        # points do not affect the argmin
        np.testing.assert_array_equal(fit.theta_hat, [0.0])

    def test_objective_table_and_regularized_path(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((60, 1))
        data = Dataset(X, X @ np.array([1.0]) + 0.1 * rng.standard_normal(60))
        p = make_partition(60, 5)
        grid = GridSpec(axes=((-2.0, 2.0, 0.1),))
        obj = ObjectiveConfig(0.05, Regularizer.l1())
        fit = oracle_grid_fit(data, p, obj, grid, grid)
        assert fit.objective.shape == (41,)
        best = int(np.argmin(fit.objective))
        np.testing.assert_array_equal(fit.theta_hat, fit.grid_f[best])
