"""Reduction of the generalized lasso to a constrained lasso.

For an arbitrary penalty matrix D (m x p, rank r) with SVD
D = U1 S1 V1', the change of variables alpha = D beta, gamma = V2' beta
turns  0.5||y - X beta||^2 + rho||D beta||_1  into a constrained lasso in
alpha with equality constraints U2' alpha = 0 (alpha must stay in the column
space of D).  The unpenalized gamma block is profiled out analytically with
the orthogonal projection onto C(X V2), and the affine back-transform maps
any alpha-solution (a single fit or a whole path, kink by kink) to beta.

Three rank cases:
  1. r = m  (full row rank): no constraints remain -- a plain lasso.
  2. r = p  (full column rank): no gamma block; y, X D+ carry the data.
  3. r < min(m, p): both the constraint block and the projection appear.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .convex import classo_qp
from .errors import ConstraintViolated, DimensionMismatch, InvalidSize, NeedsRidge
from .model import FitResult, Problem, as_matrix, as_vector, validate
from .path import PathOptions, SolutionPath, solve_path

RANK_TOL = 1e-10


@dataclass(frozen=True)
class GenLassoProblem:
    """Generalized lasso instance: 0.5||y - X beta||^2 + rho ||D beta||_1."""

    y: np.ndarray
    X: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", as_vector(self.y, "y"))
        object.__setattr__(self, "D", as_matrix(self.D, "D", ncols=X.shape[1]))
        if self.y.size != X.shape[0]:
            raise DimensionMismatch("y length does not match X rows")
        if self.D.shape[1] != X.shape[1]:
            raise DimensionMismatch("D columns do not match X columns")
        if not np.any(self.D):
            raise InvalidSize("D must be nonzero")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def m(self) -> int:
        return self.D.shape[0]


@dataclass(frozen=True)
class GenLassoTransform:
    """SVD factors, transformed data, and the affine back-transform."""

    U1: np.ndarray
    U2: np.ndarray
    sigma1: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    rank: int
    case: int                    # 1, 2, or 3 per the rank split
    y_tilde: np.ndarray
    X_tilde: np.ndarray
    constraint_A: np.ndarray     # U2' ((m - r) x m); empty when r = m
    constraint_b: np.ndarray
    back_matrix: np.ndarray      # beta = back_matrix @ alpha + back_offset
    back_offset: np.ndarray
    gl: GenLassoProblem

    @property
    def alpha_dim(self) -> int:
        return self.gl.m

    def to_problem(self, epsilon: float = 0.0) -> Problem:
        """The transformed constrained lasso as a Problem over alpha."""
        A = self.constraint_A if self.constraint_A.size else None
        b = self.constraint_b if self.constraint_A.size else None
        return Problem(y=self.y_tilde, X=self.X_tilde, A=A, b=b,
                       epsilon=epsilon)


def transform(gl: GenLassoProblem, rank_tol: float = RANK_TOL) -> GenLassoTransform:
    """Build the constrained-lasso form of a generalized lasso.

    The numerical rank decision at ``rank_tol`` changes the problem shape
    discontinuously, so borderline singular values trigger a warning.
    """
    D = gl.D
    m, p = D.shape
    U, svals, Vt = np.linalg.svd(D, full_matrices=True)
    smax = svals[0]
    r = int(np.sum(svals > rank_tol * smax))
    borderline = svals[(svals > rank_tol * smax / 10.0) & (svals < rank_tol * smax * 10.0)]
    if borderline.size:
        warnings.warn(
            f"singular values {borderline} are within a factor 10 of the rank "
            f"cutoff {rank_tol * smax:.3e}; the case split may be unstable",
            RuntimeWarning)

    U1, U2 = U[:, :r], U[:, r:]
    sigma1 = svals[:r]
    V = Vt.T
    V1, V2 = V[:, :r], V[:, r:]
    D_pinv = V1 @ ((1.0 / sigma1)[:, None] * U1.T)

    if r == m and r == p:
        case = 1 if m <= p else 2
    elif r == m:
        case = 1
    elif r == p:
        case = 2
    else:
        case = 3

    X = gl.X
    y = gl.y
    if r < p:
        XV2 = X @ V2
        # orthonormal basis of C(X V2); XV2 at roundoff level relative to X
        # means P = 0 by convention (gamma unidentifiable, reported as zero)
        Qfull, Rfull = np.linalg.qr(XV2)
        diag = np.abs(np.diag(Rfull)) if Rfull.size else np.zeros(0)
        data_scale = max(float(np.abs(X).max(initial=0.0)), 1e-300) * np.sqrt(X.size)
        cutoff = rank_tol * max(diag.max(initial=0.0), data_scale)
        keep = diag > cutoff
        Q = Qfull[:, keep]
        XD = X @ D_pinv
        y_tilde = y - Q @ (Q.T @ y)
        X_tilde = XD - Q @ (Q.T @ XD)
        # back-transform: beta = [I - V2 G V2' X'X] D+ alpha + V2 G V2' X'y,
        # with G the pseudo-inverse of V2' X'X V2
        W = XV2.T @ XV2
        G = np.linalg.pinv(W, rcond=rank_tol)
        corr = V2 @ (G @ (XV2.T @ X))
        back_matrix = D_pinv - corr @ D_pinv
        back_offset = V2 @ (G @ (XV2.T @ y))
    else:
        y_tilde = y.copy()
        X_tilde = X @ D_pinv
        back_matrix = D_pinv
        back_offset = np.zeros(p)

    constraint_A = U2.T if r < m else np.zeros((0, m))
    constraint_b = np.zeros(m - r) if r < m else np.zeros(0)

    return GenLassoTransform(
        U1=U1, U2=U2, sigma1=sigma1, V1=V1, V2=V2, rank=r, case=case,
        y_tilde=y_tilde, X_tilde=X_tilde,
        constraint_A=constraint_A, constraint_b=constraint_b,
        back_matrix=back_matrix, back_offset=back_offset, gl=gl)


def back_transform(t: GenLassoTransform,
                   alpha: Union[np.ndarray, SolutionPath],
                   tol: float = 1e-6):
    """Map an alpha solution (vector or whole path) back to beta.

    Raises ConstraintViolated when alpha leaves the column space of D
    (||U2' alpha||_inf beyond ``tol``).  Applied to a path, the map is used
    kink-wise; kink rho values are preserved.
    """
    if isinstance(alpha, SolutionPath):
        rhos = alpha.rhos
        betas = np.array([back_transform(t, k.beta, tol=tol) for k in alpha.kinks])
        return GenLassoPath(rhos=rhos, betas=betas, alpha_path=alpha, transform=t)
    alpha = as_vector(alpha, "alpha")
    if alpha.size != t.alpha_dim:
        raise DimensionMismatch(f"alpha has length {alpha.size}, expected {t.alpha_dim}")
    if t.U2.size:
        viol = float(np.abs(t.U2.T @ alpha).max(initial=0.0))
        if viol > tol * (1.0 + float(np.abs(alpha).max(initial=0.0))):
            raise ConstraintViolated(
                f"alpha leaves the column space of D by {viol:.2e}")
    return t.back_matrix @ alpha + t.back_offset


@dataclass(frozen=True)
class GenLassoPath:
    """A back-transformed solution path in the original beta coordinates."""

    rhos: np.ndarray
    betas: np.ndarray
    alpha_path: SolutionPath
    transform: GenLassoTransform

    def beta_at(self, rho: float) -> np.ndarray:
        alpha, _, _ = self.alpha_path.interpolate(rho)
        return back_transform(self.transform, alpha)

    def objective_at(self, rho: float) -> float:
        beta = self.beta_at(rho)
        return genlasso_objective(self.transform.gl, beta, rho)


@dataclass(frozen=True)
class GenLassoFit:
    """A single-rho generalized-lasso solution with its alpha-space fit."""

    beta: np.ndarray
    rho: float
    objective: float
    alpha_fit: FitResult
    transform: GenLassoTransform


def genlasso_objective(gl: GenLassoProblem, beta: np.ndarray, rho: float) -> float:
    resid = gl.y - gl.X @ beta
    return 0.5 * float(resid @ resid) + rho * float(np.abs(gl.D @ beta).sum())


def build_penalty(kind: str, p: int) -> np.ndarray:
    """Penalty-matrix builders.

    sparse_fused: the (2p-1) x p matrix stacking the (p-1) x p first-difference
    rows (-1, +1) over the identity; full column rank for every p >= 2.
    first_difference: the difference block alone ((p-1) x p, rank p-1).
    """
    p = int(p)
    if p < 2:
        raise InvalidSize("penalty builders need p >= 2")
    diff = np.zeros((p - 1, p))
    idx = np.arange(p - 1)
    diff[idx, idx] = -1.0
    diff[idx, idx + 1] = 1.0
    if kind == "first_difference":
        return diff
    if kind == "sparse_fused":
        return np.vstack([diff, np.eye(p)])
    raise InvalidSize(f"unknown penalty kind {kind!r}")


def solve_genlasso(gl: GenLassoProblem, mode: str = "path",
                   rho: Optional[float] = None,
                   rank_tol: float = RANK_TOL,
                   epsilon: Optional[float] = None,
                   qp_tol: float = 1e-9,
                   path_options: Optional[PathOptions] = None):
    """Transform, solve in alpha space, and back-transform.

    mode="single" solves at one rho via the split QP (which tolerates a
    column-rank-deficient transformed design); mode="path" follows the whole
    path, ridge-augmenting the transformed problem when it lacks full column
    rank.  ``epsilon`` overrides the ridge weight; the default is 0 for the
    QP mode and 1e-8 for a rank-deficient path (small enough to stay inside
    the equivalence tolerances).
    """
    t = transform(gl, rank_tol=rank_tol)
    if mode == "single":
        if rho is None:
            raise DimensionMismatch("single mode needs a rho")
        prob = t.to_problem(epsilon=0.0 if epsilon is None else epsilon)
        if epsilon is None:
            try:
                validate(prob)
            except NeedsRidge:
                # harmless stabilizer: shifts the optimum objective by at
                # most eps/2 * ||alpha*||^2, far inside the equivalence tols
                prob = t.to_problem(epsilon=1e-10)
        fit = classo_qp(prob, rho, tol=qp_tol)
        beta = back_transform(t, fit.beta)
        return GenLassoFit(beta=beta, rho=float(rho),
                           objective=genlasso_objective(gl, beta, rho),
                           alpha_fit=fit, transform=t)
    if mode == "path":
        opts = path_options or PathOptions(auto_epsilon=1e-8)
        prob = t.to_problem(epsilon=epsilon if epsilon is not None else 0.0)
        alpha_path = solve_path(prob, opts)
        return back_transform(t, alpha_path)
    raise DimensionMismatch(f"unknown mode {mode!r}")
