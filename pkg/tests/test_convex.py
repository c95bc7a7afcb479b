import numpy as np
import pytest

from classo import (
    Infeasible,
    PolyhedronProjector,
    Problem,
    QuadraticProgram,
    Unbounded,
    classo_qp,
    kkt_residual,
    project_polyhedron,
    solve_lp,
    solve_qp,
)
from oracles import brute_force_qp


class TestSolveQp:
    def test_mean_subtraction(self):
        # min 0.5||x - (1,2,3)||^2 s.t. 1'x = 0
        sol = solve_qp(QuadraticProgram(P=np.eye(3), r=-np.array([1.0, 2.0, 3.0]),
                                        Aeq=np.ones((1, 3)), beq=np.zeros(1)))
        assert np.allclose(sol.x, [-1.0, 0.0, 1.0], atol=1e-9)
        assert sol.eq_multipliers[0] == pytest.approx(2.0, abs=1e-9)
        assert sol.status == "optimal"

    def test_separable_bound_case(self):
        # min 0.5||x||^2 - x1 s.t. x >= 0 -> x = (1, 0, 0), all bound duals 0
        sol = solve_qp(QuadraticProgram(P=np.eye(3), r=np.array([-1.0, 0.0, 0.0]),
                                        lower_bounds=np.zeros(3)))
        assert np.allclose(sol.x, [1.0, 0.0, 0.0], atol=1e-9)
        assert np.all(sol.bound_multipliers >= -1e-12)
        assert np.abs(sol.bound_multipliers).max() < 1e-8

    def test_active_bound_multiplier(self):
        # min 0.5||x||^2 + x1 s.t. x >= 0 -> x = 0, dual on x1 equals 1
        sol = solve_qp(QuadraticProgram(P=np.eye(2), r=np.array([1.0, 0.0]),
                                        lower_bounds=np.zeros(2)))
        assert np.allclose(sol.x, 0.0, atol=1e-9)
        assert sol.bound_multipliers[0] == pytest.approx(1.0, abs=1e-8)

    def test_matches_enumeration_with_equality(self, rng):
        for _ in range(20):
            k = int(rng.integers(2, 5))
            M = rng.standard_normal((k + 1, k))
            P = M.T @ M
            r = rng.standard_normal(k)
            x0 = rng.standard_normal(k)  # common feasible point
            A = rng.standard_normal((1, k))
            b = A @ x0
            G = rng.standard_normal((2, k))
            h = G @ x0 + rng.uniform(0, 1, 2)
            sol = solve_qp(QuadraticProgram(P=P, r=r, Aeq=A, beq=b,
                                            Cineq=G, dineq=h))
            ref = brute_force_qp(P, r, A, b, G, h)
            assert ref is not None
            assert sol.objective == pytest.approx(ref[0], abs=1e-8)

    def test_infeasible_raises(self):
        qp = QuadraticProgram(P=np.eye(2), r=np.zeros(2),
                              Cineq=np.array([[1.0, 0.0], [-1.0, 0.0]]),
                              dineq=np.array([-1.0, -1.0]))
        with pytest.raises(Infeasible):
            solve_qp(qp)

    def test_unbounded_raises(self):
        # flat direction with negative linear cost, no blocking constraint
        qp = QuadraticProgram(P=np.zeros((2, 2)), r=np.array([-1.0, 0.0]),
                              Cineq=np.array([[0.0, 1.0]]), dineq=np.array([1.0]))
        with pytest.raises(Unbounded):
            solve_qp(qp)

    def test_kkt_residuals_reported(self, rng):
        M = rng.standard_normal((5, 3))
        sol = solve_qp(QuadraticProgram(P=M.T @ M + 0.1 * np.eye(3),
                                        r=rng.standard_normal(3),
                                        Cineq=rng.standard_normal((2, 3)),
                                        dineq=np.ones(2)))
        assert max(sol.residuals.values()) <= 1e-8

    def test_asymmetric_p_rejected(self):
        with pytest.raises(Exception):
            solve_qp(QuadraticProgram(P=np.array([[1.0, 1.0], [0.0, 1.0]]),
                                      r=np.zeros(2)))


class TestSolveLp:
    def test_split_l1_zero_sum(self):
        # min ||beta||_1 s.t. 1'beta = 0 via the 2p split -> beta = 0
        sol = solve_lp(np.ones(4), Aeq=np.array([[1.0, 1.0, -1.0, -1.0]]),
                       beq=np.zeros(1), lower_bounds=np.zeros(4))
        assert sol.objective == pytest.approx(0.0, abs=1e-10)
        assert np.allclose(sol.x, 0.0, atol=1e-10)

    def test_pinned_coordinate(self):
        # min ||beta||_1 s.t. beta_1 = 1
        sol = solve_lp(np.ones(4), Aeq=np.array([[1.0, 0.0, -1.0, 0.0]]),
                       beq=np.ones(1), lower_bounds=np.zeros(4))
        beta = sol.x[:2] - sol.x[2:]
        assert np.allclose(beta, [1.0, 0.0], atol=1e-10)
        assert sol.objective == pytest.approx(1.0)
        assert sol.status == "optimal"

    def test_sum_to_one_degenerate(self):
        # every elementary vector is optimal: the probe must notice
        sol = solve_lp(np.ones(4), Aeq=np.array([[1.0, 1.0, -1.0, -1.0]]),
                       beq=np.ones(1), lower_bounds=np.zeros(4))
        assert sol.objective == pytest.approx(1.0)
        assert sol.status == "degenerate_optimal"

    def test_multiplier_convention(self):
        # min x1 + x2 s.t. x1 - x2 = 1, x >= 0: stationarity c + A'lam - z = 0
        sol = solve_lp(np.ones(2), Aeq=np.array([[1.0, -1.0]]), beq=np.ones(1),
                       lower_bounds=np.zeros(2))
        resid = np.ones(2) + sol.eq_multipliers[0] * np.array([1.0, -1.0]) \
            - sol.bound_multipliers
        assert np.abs(resid).max() < 1e-9

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            solve_lp(np.ones(1), Cineq=np.array([[1.0], [-1.0]]),
                     dineq=np.array([-1.0, -1.0]))

    def test_unbounded(self):
        with pytest.raises(Unbounded):
            solve_lp(np.array([-1.0]), lower_bounds=np.zeros(0) if False else None)


class TestProjection:
    def test_idempotent_on_feasible(self, rng):
        A = np.ones((1, 3))
        v = np.array([1.0, -2.0, 1.0])  # already sums to 0
        z = project_polyhedron(v, A, np.zeros(1), None, None)
        assert np.allclose(z, v, atol=1e-12)

    def test_mean_subtraction(self):
        z = project_polyhedron(np.array([1.0, 2.0, 3.0]), np.ones((1, 3)),
                               np.zeros(1), None, None)
        assert np.allclose(z, [-1.0, 0.0, 1.0], atol=1e-12)

    def test_orthant_clamp(self):
        z = project_polyhedron(np.array([-1.0, 2.0]), None, None,
                               -np.eye(2), np.zeros(2))
        assert np.allclose(z, [0.0, 2.0], atol=1e-12)

    def test_nonexpansive_and_idempotent(self, rng):
        A = rng.standard_normal((2, 6))
        b = rng.standard_normal(2)
        C = rng.standard_normal((3, 6))
        d = C @ np.linalg.lstsq(A, b, rcond=None)[0] + rng.uniform(0.1, 1, 3)
        proj = PolyhedronProjector(A, b, C, d)
        for _ in range(10):
            u = rng.standard_normal(6)
            v = rng.standard_normal(6)
            zu, *_ = proj.project(u, warm_start=False)
            zv, *_ = proj.project(v, warm_start=False)
            assert np.linalg.norm(zu - zv) <= np.linalg.norm(u - v) + 1e-10
            zz, *_ = proj.project(zu, warm_start=False)
            assert np.abs(zz - zu).max() < 1e-10

    def test_matches_qp(self, rng):
        A = rng.standard_normal((1, 5))
        b = rng.standard_normal(1)
        C = rng.standard_normal((3, 5))
        x0 = np.linalg.lstsq(A, b, rcond=None)[0]
        d = C @ x0 + rng.uniform(0.0, 0.5, 3)
        for _ in range(5):
            v = rng.standard_normal(5)
            z = project_polyhedron(v, A, b, C, d)
            sol = solve_qp(QuadraticProgram(P=np.eye(5), r=-v, Aeq=A, beq=b,
                                            Cineq=C, dineq=d), tol=1e-10)
            assert np.abs(z - sol.x).max() < 1e-7

    def test_projection_duals_reconstruct_point(self, rng):
        A = rng.standard_normal((1, 4))
        C = rng.standard_normal((2, 4))
        b = np.zeros(1)
        d = np.zeros(2)
        proj = PolyhedronProjector(A, b, C, d)
        v = rng.standard_normal(4)
        z, lam, mu = proj.project(v)
        assert np.abs(v - A.T @ lam - C.T @ mu - z).max() < 1e-10
        assert mu.min(initial=0.0) >= 0.0

    def test_infeasible_polyhedron(self):
        with pytest.raises(Infeasible):
            project_polyhedron(np.zeros(2), None, None,
                               np.array([[1.0, 0.0], [-1.0, 0.0]]),
                               np.array([-1.0, -1.0]))


class TestClassoQp:
    def test_ols_at_rho_zero(self, rng):
        X = rng.standard_normal((20, 4))
        y = rng.standard_normal(20)
        fit = classo_qp(Problem(y=y, X=X), 0.0)
        ols = np.linalg.lstsq(X, y, rcond=None)[0]
        assert np.abs(fit.beta - ols).max() < 1e-7

    def test_full_shrinkage(self, rng):
        X = rng.standard_normal((15, 4))
        y = rng.standard_normal(15)
        rho = np.abs(X.T @ y).max() * 1.01
        fit = classo_qp(Problem(y=y, X=X), rho)
        assert np.abs(fit.beta).max() == 0.0

    def test_positive_lasso_example(self):
        fit = classo_qp(Problem(y=[3.0, -2.0], X=np.eye(2),
                                C=-np.eye(2), d=np.zeros(2)), 1.0)
        assert np.allclose(fit.beta, [2.0, 0.0], atol=1e-9)
        assert fit.kkt_stationarity < 1e-8
        assert fit.multipliers_ineq.min() >= 0.0

    def test_split_complementarity(self, rng):
        X = rng.standard_normal((25, 6))
        y = rng.standard_normal(25)
        for rho in (0.0, 0.5, 3.0):
            fit = classo_qp(Problem(y=y, X=X, A=np.ones((1, 6)), b=np.zeros(1)),
                            rho)
            plus = fit.diagnostics["beta_plus"]
            minus = fit.diagnostics["beta_minus"]
            assert np.abs(plus * minus).max() < 1e-8

    def test_multiplier_recovery_closes_kkt(self, rng):
        X = rng.standard_normal((30, 8))
        beta = np.zeros(8)
        beta[:3] = [1.0, -0.5, 0.25]
        y = X @ beta + 0.2 * rng.standard_normal(30)
        A = rng.standard_normal((1, 8))
        C = rng.standard_normal((2, 8))
        prob = Problem(y=y, X=X, A=A, b=A @ beta, C=C,
                       d=C @ beta + np.array([0.0, 0.4]))
        for rho in (0.1, 1.0, 5.0):
            fit = classo_qp(prob, rho)
            res = kkt_residual(prob, fit)
            assert res.max() < 1e-7

    def test_ridge_problem_solved_on_augmented_data(self, rng):
        X = rng.standard_normal((10, 20))
        y = rng.standard_normal(10)
        prob = Problem(y=y, X=X, A=np.ones((1, 20)), b=np.zeros(1), epsilon=1e-4)
        fit = classo_qp(prob, 1.0)
        res = kkt_residual(prob, fit)
        assert res.max() < 1e-7
        assert abs(fit.beta.sum()) < 1e-9

    def test_rho_zero_on_square_design(self, rng):
        # regression: at rho = 0 the split formulation has a flat inflation
        # ray; the direct constrained-least-squares route must be used
        X = rng.standard_normal((17, 17)) + 0.2 * np.eye(17)
        y = rng.standard_normal(17)
        C = rng.standard_normal((2, 17))
        d = C @ np.linalg.solve(X, y) + np.array([0.0, 0.3])
        prob = Problem(y=y, X=X, C=C, d=d)
        fit = classo_qp(prob, 0.0, tol=1e-10)
        res = kkt_residual(prob, fit)
        assert res.max() < 1e-7

    def test_rejects_negative_rho(self):
        with pytest.raises(Exception):
            classo_qp(Problem(y=[1.0], X=[[1.0]]), -1.0)
