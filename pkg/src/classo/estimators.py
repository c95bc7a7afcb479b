"""scikit-learn style estimators wrapping the solvers.

Both estimators follow the fit/predict/get_params protocol so they compose
with pipelines, grid search, and cross-validation.  ``ConstrainedLasso``
fits the constrained lasso at a single rho (or at a fraction of rho_max);
``GeneralizedLasso`` reduces a generalized lasso to a constrained one and
solves it.
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .admm import AdmmOptions, solve_admm
from .convex import classo_qp
from .errors import DimensionMismatch, NeedsRidge
from .genlasso import GenLassoProblem, build_penalty, solve_genlasso
from .model import Problem, build_constraints, validate
from .path import PathOptions, initialize_path, solve_path

_TEMPLATES = ("zero_sum", "nonnegative", "monotone_decreasing_differences")


def _check_Xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise DimensionMismatch("X must be a 2-d array")
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch(
            f"y has {y.shape[0]} samples but X has {X.shape[0]}")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise DimensionMismatch("X and y must be finite")
    return X, y


def _resolve_constraints(constraints, value, p):
    if constraints is None:
        return None, None, None, None
    if isinstance(constraints, str):
        if constraints == "sum_to_value":
            blk = build_constraints("sum_to_value", p, value=value)
        elif constraints in _TEMPLATES:
            blk = build_constraints(constraints, p)
        else:
            raise DimensionMismatch(f"unknown constraint template {constraints!r}")
    elif isinstance(constraints, tuple) and len(constraints) == 4:
        A, b, C, d = constraints
        return A, b, C, d
    else:
        raise DimensionMismatch(
            "constraints must be a template name or an (A, b, C, d) tuple")
    return (blk.A if blk.A.size else None, blk.b if blk.A.size else None,
            blk.C if blk.C.size else None, blk.d if blk.C.size else None)


class ConstrainedLasso(BaseEstimator, RegressorMixin):
    """Lasso regression under linear equality/inequality constraints.

    Parameters
    ----------
    rho : penalty weight.  Interpreted directly unless ``rho_scale`` is set,
        in which case the fit resolves rho = rho_scale * rho_max.
    rho_scale : optional fraction of rho_max (overrides ``rho``).
    algorithm : "qp", "admm", or "path" (path solves once, then interpolates).
    constraints : template name ("zero_sum", "nonnegative",
        "monotone_decreasing_differences", "sum_to_value") or an explicit
        (A, b, C, d) tuple; None for the plain lasso.
    constraint_value : right-hand side for the "sum_to_value" template.
    epsilon : ridge weight; None applies 1e-4 automatically when X lacks
        full column rank.
    """

    def __init__(self, rho: float = 1.0, rho_scale: Optional[float] = None,
                 algorithm: str = "qp",
                 constraints: Union[None, str, tuple] = None,
                 constraint_value: float = 0.0,
                 epsilon: Optional[float] = None,
                 tol: float = 1e-8,
                 admm_options: Optional[AdmmOptions] = None,
                 path_options: Optional[PathOptions] = None):
        self.rho = rho
        self.rho_scale = rho_scale
        self.algorithm = algorithm
        self.constraints = constraints
        self.constraint_value = constraint_value
        self.epsilon = epsilon
        self.tol = tol
        self.admm_options = admm_options
        self.path_options = path_options

    def _build_problem(self, X, y) -> Problem:
        A, b, C, d = _resolve_constraints(self.constraints,
                                          self.constraint_value, X.shape[1])
        eps = self.epsilon
        prob = Problem(y=y, X=X, A=A, b=b, C=C, d=d,
                       epsilon=0.0 if eps is None else eps)
        if eps is None:
            try:
                validate(prob)
            except NeedsRidge:
                prob = Problem(y=y, X=X, A=A, b=b, C=C, d=d, epsilon=1e-4)
        return validate(prob)

    def fit(self, X, y):
        X, y = _check_Xy(X, y)
        prob = self._build_problem(X, y)
        self.epsilon_ = prob.epsilon

        rho = float(self.rho)
        self.rho_max_ = None
        if self.rho_scale is not None or self.algorithm == "path":
            rho_max, _ = initialize_path(prob, self.path_options)
            self.rho_max_ = rho_max
            if self.rho_scale is not None:
                rho = float(self.rho_scale) * rho_max
        self.rho_ = rho

        if self.algorithm == "qp":
            fit = classo_qp(prob, rho, tol=self.tol)
        elif self.algorithm == "admm":
            fit = solve_admm(prob, rho, self.admm_options)
        elif self.algorithm == "path":
            path = solve_path(prob, self.path_options)
            beta, df, obj = path.interpolate(rho)
            self.path_ = path
            self.coef_ = beta
            self.df_ = df
            self.objective_ = obj
            self.n_iter_ = len(path.kinks)
            self.dual_eq_ = None
            self.dual_ineq_ = None
            return self
        else:
            raise DimensionMismatch(f"unknown algorithm {self.algorithm!r}")

        self.coef_ = fit.beta
        self.objective_ = fit.objective
        self.n_iter_ = fit.iterations
        self.dual_eq_ = fit.multipliers_eq
        self.dual_ineq_ = fit.multipliers_ineq
        self.df_ = int(np.sum(np.abs(fit.beta) > 1e-10)) - prob.q - \
            prob.binding_rows(fit.beta, tol=1e-10).size
        self.fit_result_ = fit
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return X @ self.coef_


class GeneralizedLasso(BaseEstimator, RegressorMixin):
    """Generalized lasso solved through the constrained-lasso reduction.

    ``penalty`` is either a matrix D or one of the builders
    ("sparse_fused", "first_difference").
    """

    def __init__(self, rho: float = 1.0,
                 penalty: Union[str, np.ndarray] = "sparse_fused",
                 rank_tol: float = 1e-10, tol: float = 1e-9):
        self.rho = rho
        self.penalty = penalty
        self.rank_tol = rank_tol
        self.tol = tol

    def fit(self, X, y):
        X, y = _check_Xy(X, y)
        if isinstance(self.penalty, str):
            D = build_penalty(self.penalty, X.shape[1])
        else:
            D = np.asarray(self.penalty, dtype=float)
        gl = GenLassoProblem(y=y, X=X, D=D)
        res = solve_genlasso(gl, mode="single", rho=float(self.rho),
                             rank_tol=self.rank_tol, qp_tol=self.tol)
        self.coef_ = res.beta
        self.objective_ = res.objective
        self.transform_ = res.transform
        self.alpha_fit_ = res.alpha_fit
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return X @ self.coef_
