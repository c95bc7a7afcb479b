import numpy as np
import pytest

from classo import ConstrainedLasso, GeneralizedLasso, classo_qp, Problem


@pytest.fixture
def data(rng):
    X = rng.standard_normal((40, 10))
    beta = np.zeros(10)
    beta[:3] = [1.5, -1.0, 0.5]
    y = X @ beta + 0.2 * rng.standard_normal(40)
    return X, y


class TestConstrainedLasso:
    def test_qp_fit_matches_solver(self, data):
        X, y = data
        est = ConstrainedLasso(rho=1.0, algorithm="qp",
                               constraints="zero_sum").fit(X, y)
        ref = classo_qp(Problem(y=y, X=X, A=np.ones((1, 10)), b=np.zeros(1)), 1.0)
        assert np.abs(est.coef_ - ref.beta).max() < 1e-10
        assert abs(est.coef_.sum()) < 1e-9

    def test_rho_scale_resolution(self, data):
        X, y = data
        est = ConstrainedLasso(rho_scale=0.5, algorithm="qp").fit(X, y)
        assert est.rho_ == pytest.approx(0.5 * est.rho_max_)
        assert est.rho_max_ == pytest.approx(np.abs(X.T @ y).max(), rel=1e-10)

    def test_path_algorithm(self, data):
        X, y = data
        est = ConstrainedLasso(rho_scale=0.3, algorithm="path",
                               constraints="zero_sum").fit(X, y)
        ref = ConstrainedLasso(rho_scale=0.3, algorithm="qp",
                               constraints="zero_sum").fit(X, y)
        assert np.abs(est.coef_ - ref.coef_).max() < 1e-6

    def test_predict_shape_and_score(self, data):
        X, y = data
        est = ConstrainedLasso(rho=0.5).fit(X, y)
        pred = est.predict(X)
        assert pred.shape == (40,)
        assert est.score(X, y) > 0.5  # RegressorMixin R^2

    def test_explicit_constraint_tuple(self, data):
        X, y = data
        A = np.ones((1, 10))
        est = ConstrainedLasso(rho=1.0, constraints=(A, np.zeros(1), None, None))
        est.fit(X, y)
        assert abs(est.coef_.sum()) < 1e-9

    def test_get_set_params_round_trip(self):
        est = ConstrainedLasso(rho=2.0, algorithm="admm")
        params = est.get_params()
        est2 = ConstrainedLasso(**params)
        assert est2.rho == 2.0 and est2.algorithm == "admm"
        est2.set_params(rho=3.0)
        assert est2.rho == 3.0

    def test_auto_ridge_for_wide_design(self, rng):
        X = rng.standard_normal((15, 30))
        y = rng.standard_normal(15)
        est = ConstrainedLasso(rho=0.5, constraints="zero_sum").fit(X, y)
        assert est.epsilon_ == pytest.approx(1e-4)

    def test_sklearn_clone_compatible(self, data):
        from sklearn.base import clone
        X, y = data
        est = ConstrainedLasso(rho=1.0, constraints="nonnegative")
        cloned = clone(est)
        cloned.fit(X, np.abs(y))
        assert cloned.coef_.min() >= -1e-10


class TestGeneralizedLasso:
    def test_fused_estimator(self, rng):
        p = 20
        beta = np.zeros(p)
        beta[4:9] = 1.5
        y = beta + 0.2 * rng.standard_normal(p)
        est = GeneralizedLasso(rho=0.4, penalty="sparse_fused").fit(np.eye(p), y)
        assert est.coef_.shape == (p,)
        assert est.transform_.case == 2
        # fused fit is piecewise constant-ish: few distinct rounded levels
        assert len(np.unique(np.round(est.coef_, 6))) < p

    def test_matrix_penalty(self, rng):
        X = rng.standard_normal((20, 6))
        y = rng.standard_normal(20)
        est = GeneralizedLasso(rho=0.3, penalty=np.eye(6)).fit(X, y)
        ref = classo_qp(Problem(y=y, X=X), 0.3)
        assert np.abs(est.coef_ - ref.beta).max() < 1e-7
