"""Problem representation, validation, and model-level quantities.

The central object is :class:`Problem`, the constrained lasso instance

    minimize   0.5 * ||y - X beta||^2 + rho * ||beta||_1 + 0.5 * epsilon * ||beta||^2
    subject to A beta = b,   C beta <= d.

Everything here is a pure function of immutable inputs: validation with
cached numerical ranks, the ridge augmentation that restores full column
rank, objective and KKT evaluation, degrees of freedom, information
criteria, and builders for the common constraint templates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidSize,
    MissingVarianceEstimate,
    NeedsRidge,
    RankDeficientConstraints,
)

# Relative singular-value cutoff used everywhere a numerical rank is needed.
RANK_TOL = 1e-10

# Coefficients with magnitude below this are treated as exact zeros when
# deriving active sets from a coefficient vector.
ZERO_TOL = 1e-10


def as_vector(x, name: str) -> np.ndarray:
    """Coerce to a 1-d float64 array, rejecting higher-dimensional input."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def as_matrix(x, name: str, ncols: Optional[int] = None) -> np.ndarray:
    """Coerce to a 2-d float64 array; ``None``/empty becomes a (0, ncols) block."""
    if x is None:
        return np.zeros((0, ncols if ncols is not None else 0))
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.size == 0 and ncols is not None:
        arr = arr.reshape(0, ncols)
    return arr


def numerical_rank(mat: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    """Rank of ``mat`` counting singular values above ``rank_tol * sigma_max``."""
    if mat.size == 0:
        return 0
    svals = np.linalg.svd(mat, compute_uv=False)
    if svals[0] == 0.0:
        return 0
    return int(np.sum(svals > rank_tol * svals[0]))


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Problem:
    """A constrained lasso instance.

    Parameters
    ----------
    y : (n,) response vector.
    X : (n, p) design matrix.
    A : (q, p) equality constraint matrix; may be empty.
    b : (q,) equality right-hand side.
    C : (m, p) inequality constraint matrix; may be empty.
    d : (m,) inequality right-hand side.
    epsilon : ridge weight, >= 0.  Required to be positive whenever X lacks
        full column rank (in particular when n < p).
    """

    y: np.ndarray
    X: np.ndarray
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    d: Optional[np.ndarray] = None
    epsilon: float = 0.0
    _ranks: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        p = X.shape[1]
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "y", _readonly(as_vector(self.y, "y")))
        object.__setattr__(self, "A", _readonly(as_matrix(self.A, "A", ncols=p)))
        object.__setattr__(self, "C", _readonly(as_matrix(self.C, "C", ncols=p)))
        b = np.zeros(0) if self.b is None else as_vector(self.b, "b")
        d = np.zeros(0) if self.d is None else as_vector(self.d, "d")
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "d", _readonly(d))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    def binding_rows(self, beta: np.ndarray, tol: float = 1e-8) -> np.ndarray:
        """Indices of inequality rows holding with equality at ``beta``."""
        if self.m == 0:
            return np.zeros(0, dtype=int)
        resid = self.C @ beta - self.d
        scale = 1.0 + np.abs(self.d)
        return np.flatnonzero(np.abs(resid) <= tol * scale)


@dataclass(frozen=True)
class FitResult:
    """A single-rho solution together with its KKT certificate.

    ``beta`` is the reported coefficient vector; ``multipliers_eq`` /
    ``multipliers_ineq`` are the Lagrange multipliers of the equality and
    inequality blocks in the convention

        -X'(y - X beta) + epsilon*beta + rho*s + A'lam + C'mu = 0,  mu >= 0.
    """

    beta: np.ndarray
    rho: float
    objective: float
    kkt_stationarity: float
    eq_violation: float
    ineq_violation: float
    complementarity: float
    multipliers_eq: np.ndarray
    multipliers_ineq: np.ndarray
    iterations: int
    solver: str
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)


class KktResiduals(NamedTuple):
    """Residual summary of the constrained-lasso KKT system."""

    stationarity: float
    eq_violation: float
    ineq_violation: float
    complementarity: float
    subgradient_bound: float

    def max(self) -> float:
        return max(self)


def validate(problem: Problem, rank_tol: float = RANK_TOL) -> Problem:
    """Check all Problem invariants; returns the problem unchanged.

    Raises
    ------
    DimensionMismatch
        Any size inconsistency between y, X, A, b, C, d.
    RankDeficientConstraints
        A or C is numerically row-rank deficient at ``rank_tol``.
    NeedsRidge
        The (augmented) design lacks full column rank and epsilon == 0.
    """
    n, p = problem.X.shape
    if problem.y.shape[0] != n:
        raise DimensionMismatch(
            f"y has length {problem.y.shape[0]} but X has {n} rows"
        )
    for mat, rhs, mname, vname in (
        (problem.A, problem.b, "A", "b"),
        (problem.C, problem.d, "C", "d"),
    ):
        if mat.shape[1] != p:
            raise DimensionMismatch(
                f"{mname} has {mat.shape[1]} columns but X has {p}"
            )
        if rhs.shape[0] != mat.shape[0]:
            raise DimensionMismatch(
                f"{vname} has length {rhs.shape[0]} but {mname} has {mat.shape[0]} rows"
            )
    if not np.isfinite(problem.epsilon) or problem.epsilon < 0:
        raise DimensionMismatch("epsilon must be finite and >= 0")

    ranks = problem._ranks
    if "A" not in ranks:
        ranks["A"] = numerical_rank(problem.A, rank_tol)
        ranks["C"] = numerical_rank(problem.C, rank_tol)
        ranks["X_cols"] = numerical_rank(problem.X, rank_tol)
    if ranks["A"] < problem.q:
        raise RankDeficientConstraints(
            f"A has {problem.q} rows but numerical rank {ranks['A']}"
        )
    if ranks["C"] < problem.m:
        raise RankDeficientConstraints(
            f"C has {problem.m} rows but numerical rank {ranks['C']}"
        )
    if problem.epsilon == 0.0 and ranks["X_cols"] < p:
        raise NeedsRidge(
            f"X has column rank {ranks['X_cols']} < p={p}; supply epsilon > 0 "
            "(the augmented design then has full column rank)"
        )
    return problem


def augment_ridge(problem: Problem) -> Problem:
    """Fold the ridge term into the data: y* = (y; 0), X* = (X; sqrt(eps) I).

    The returned problem has epsilon = 0 and a full-column-rank design; its
    least-squares objective equals the ridge-penalized objective of the
    original problem for every beta.
    """
    if problem.epsilon <= 0:
        raise NeedsRidge("augment_ridge requires epsilon > 0")
    n, p = problem.X.shape
    X_aug = np.vstack([problem.X, np.sqrt(problem.epsilon) * np.eye(p)])
    y_aug = np.concatenate([problem.y, np.zeros(p)])
    return Problem(y=y_aug, X=X_aug, A=problem.A, b=problem.b,
                   C=problem.C, d=problem.d, epsilon=0.0)


def objective(problem: Problem, beta: np.ndarray, rho: float) -> float:
    """0.5*||y - X beta||^2 + rho*||beta||_1 + 0.5*epsilon*||beta||^2."""
    beta = as_vector(beta, "beta")
    if beta.shape[0] != problem.p:
        raise DimensionMismatch(f"beta has length {beta.shape[0]}, expected {problem.p}")
    resid = problem.y - problem.X @ beta
    val = 0.5 * float(resid @ resid) + rho * float(np.abs(beta).sum())
    if problem.epsilon > 0:
        val += 0.5 * problem.epsilon * float(beta @ beta)
    return val


def kkt_residual(problem: Problem, fit: FitResult,
                 zero_tol: float = ZERO_TOL) -> KktResiduals:
    """Residuals of the KKT system at ``fit``.

    The stationarity residual minimizes over admissible subgradients: on
    nonzero coordinates s_j = sign(beta_j) is forced, elsewhere s_j is the
    best value in [-1, 1], so the per-coordinate residual is
    max(|g_j| - rho, 0) with g the multiplier-adjusted gradient.
    """
    beta = fit.beta
    rho = fit.rho
    lam = as_vector(fit.multipliers_eq, "multipliers_eq") if problem.q else np.zeros(0)
    mu = as_vector(fit.multipliers_ineq, "multipliers_ineq") if problem.m else np.zeros(0)

    g = -(problem.X.T @ (problem.y - problem.X @ beta))
    if problem.epsilon > 0:
        g = g + problem.epsilon * beta
    if problem.q:
        g = g + problem.A.T @ lam
    if problem.m:
        g = g + problem.C.T @ mu

    nonzero = np.abs(beta) > zero_tol
    stat = np.empty(problem.p)
    stat[nonzero] = np.abs(g[nonzero] + rho * np.sign(beta[nonzero]))
    stat[~nonzero] = np.maximum(np.abs(g[~nonzero]) - rho, 0.0)
    stationarity = float(stat.max()) if problem.p else 0.0

    eq_viol = float(np.abs(problem.A @ beta - problem.b).max()) if problem.q else 0.0
    if problem.m:
        slack = problem.C @ beta - problem.d
        ineq_viol = float(max(slack.max(), 0.0))
        comp = float(np.abs(mu * slack).max())
        comp = max(comp, float(np.maximum(-mu, 0.0).max()))
    else:
        ineq_viol = 0.0
        comp = 0.0

    # how far the implied subgradient rho*s leaves the box [-rho, rho] on
    # inactive coordinates, measured absolutely (a ratio would blow up the
    # last kinks of a path, where rho is at roundoff scale)
    sub_viol = float(np.maximum(np.abs(g[~nonzero]) - rho, 0.0).max()) \
        if (~nonzero).any() else 0.0

    return KktResiduals(stationarity, eq_viol, ineq_viol, comp, sub_viol)


def degrees_of_freedom(active_count: int, q: int, binding_count: int) -> int:
    """Unbiased degrees-of-freedom estimate |A| - (q + |Z_I|).

    May be negative in pathological binding configurations; the raw value is
    returned and callers decide how to flag it.
    """
    if min(active_count, q, binding_count) < 0:
        raise InvalidSize("counts must be nonnegative")
    return int(active_count) - (int(q) + int(binding_count))


@dataclass(frozen=True)
class InformationCriteria:
    """Mallows' Cp, AIC, and BIC for one fit.

    Cp requires a noise variance estimate; accessing ``cp`` without one
    raises MissingVarianceEstimate.
    """

    aic: float
    bic: float
    rss: float
    df: int
    _cp: Optional[float] = None

    @property
    def cp(self) -> float:
        if self._cp is None:
            raise MissingVarianceEstimate(
                "Mallows' Cp needs a caller-supplied noise variance estimate"
            )
        return self._cp


def information_criteria(problem: Problem, beta: np.ndarray, df: int,
                         noise_variance_estimate: Optional[float] = None
                         ) -> InformationCriteria:
    """Cp = RSS/sigma^2 - n + 2 df, AIC = n log(RSS/n) + 2 df, BIC with log(n) df."""
    if df < 0:
        raise InvalidSize("df must be >= 0 for information criteria")
    resid = problem.y - problem.X @ as_vector(beta, "beta")
    rss = float(resid @ resid)
    n = problem.n
    aic = n * np.log(rss / n) + 2.0 * df
    bic = n * np.log(rss / n) + np.log(n) * df
    cp = None
    if noise_variance_estimate is not None:
        if noise_variance_estimate <= 0:
            raise MissingVarianceEstimate("noise variance estimate must be > 0")
        cp = rss / noise_variance_estimate - n + 2.0 * df
    return InformationCriteria(aic=float(aic), bic=float(bic), rss=rss,
                               df=int(df), _cp=cp)


class ConstraintBlock(NamedTuple):
    A: np.ndarray
    b: np.ndarray
    C: np.ndarray
    d: np.ndarray


def build_constraints(kind: str, p: int, value: float = 0.0) -> ConstraintBlock:
    """Constraint templates as (A, b, C, d) blocks.

    kind:
      - "monotone_decreasing_differences": beta_1 <= ... <= beta_p encoded as
        successive differences beta_j - beta_{j+1} <= 0, i.e. C rows (1, -1).
      - "nonnegative": C = -I, d = 0 (the positive lasso).
      - "zero_sum": A = 1', b = 0.
      - "sum_to_value": A = 1', b = value.
    """
    p = int(p)
    if p < 1:
        raise InvalidSize("p must be >= 1")
    empty_A = np.zeros((0, p))
    empty_v = np.zeros(0)
    if kind == "monotone_decreasing_differences":
        if p < 2:
            raise InvalidSize("monotone constraints need p >= 2")
        C = np.zeros((p - 1, p))
        idx = np.arange(p - 1)
        C[idx, idx] = 1.0
        C[idx, idx + 1] = -1.0
        return ConstraintBlock(empty_A, empty_v, C, np.zeros(p - 1))
    if kind == "nonnegative":
        return ConstraintBlock(empty_A, empty_v, -np.eye(p), np.zeros(p))
    if kind == "zero_sum":
        return ConstraintBlock(np.ones((1, p)), np.zeros(1), np.zeros((0, p)), empty_v)
    if kind == "sum_to_value":
        return ConstraintBlock(np.ones((1, p)), np.array([float(value)]),
                               np.zeros((0, p)), empty_v)
    raise InvalidSize(f"unknown constraint template {kind!r}")


def stack_constraints(p: int, *blocks: ConstraintBlock) -> ConstraintBlock:
    """Concatenate several (A, b, C, d) blocks over the same p variables."""
    As = [np.zeros((0, p))] + [as_matrix(blk.A, "A", ncols=p) for blk in blocks]
    bs = [np.zeros(0)] + [as_vector(blk.b, "b") for blk in blocks]
    Cs = [np.zeros((0, p))] + [as_matrix(blk.C, "C", ncols=p) for blk in blocks]
    ds = [np.zeros(0)] + [as_vector(blk.d, "d") for blk in blocks]
    return ConstraintBlock(np.vstack(As), np.concatenate(bs),
                           np.vstack(Cs), np.concatenate(ds))
