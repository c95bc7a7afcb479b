"""Internal polyhedral convex engine.

Three primitives back the constrained-lasso solvers:

* :func:`solve_qp` -- a dense primal-dual interior-point method (Mehrotra
  predictor-corrector) for convex QPs with equality rows, inequality rows,
  and per-variable lower bounds, followed by an active-set polish that
  recovers exact binding sets and multipliers whenever the KKT geometry is
  nondegenerate.
* :func:`solve_lp` -- linear programs via HiGHS with Lagrange multipliers
  mapped to this package's sign convention and a perturbed-objective probe
  that detects non-unique optima.
* :func:`project_polyhedron` -- Euclidean projection onto
  {z : Az = b, Cz <= d}, solved through its dual (a bound-constrained QP of
  size q + m) with a Lawson-Hanson style active-set loop that supports warm
  starts across repeated projections.

:func:`classo_qp` assembles the 2p-variable split formulation of the
constrained lasso on top of :func:`solve_qp`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .errors import (
    DimensionMismatch,
    Infeasible,
    MaxIterations,
    SolverError,
    Unbounded,
)
from .model import (
    FitResult,
    Problem,
    as_matrix,
    as_vector,
    augment_ridge,
    kkt_residual,
    objective,
    validate,
)

DEFAULT_TOL = 1e-8

_STATUS_OPTIMAL = "optimal"
_STATUS_DEGENERATE = "degenerate_optimal"
_STATUS_INFEASIBLE = "infeasible"
_STATUS_UNBOUNDED = "unbounded"

# HiGHS at its default 1e-7 tolerances cannot see the 1e-7-scale degeneracy
# probes and returns loose duals; run it tight.
_HIGHS_OPTS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True)
class QuadraticProgram:
    """min 0.5 x'Px + r'x  s.t.  Aeq x = beq, Cineq x <= dineq, x >= lower_bounds.

    P must be symmetric positive semidefinite.  ``lower_bounds`` may be None
    (free variables) or contain -inf entries.
    """

    P: np.ndarray
    r: np.ndarray
    Aeq: Optional[np.ndarray] = None
    beq: Optional[np.ndarray] = None
    Cineq: Optional[np.ndarray] = None
    dineq: Optional[np.ndarray] = None
    lower_bounds: Optional[np.ndarray] = None

    def canonical(self):
        """Validated, normalized copies of all blocks."""
        r = as_vector(self.r, "r")
        k = r.size
        P = as_matrix(self.P, "P", ncols=k)
        if P.shape != (k, k):
            raise DimensionMismatch(f"P has shape {P.shape}, expected ({k}, {k})")
        if np.abs(P - P.T).max(initial=0.0) > 1e-8 * (1.0 + np.abs(P).max(initial=0.0)):
            raise DimensionMismatch("P is not symmetric within tolerance")
        P = 0.5 * (P + P.T)
        Aeq = as_matrix(self.Aeq, "Aeq", ncols=k)
        beq = np.zeros(0) if self.beq is None else as_vector(self.beq, "beq")
        Cineq = as_matrix(self.Cineq, "Cineq", ncols=k)
        dineq = np.zeros(0) if self.dineq is None else as_vector(self.dineq, "dineq")
        if Aeq.shape[0] != beq.size or Cineq.shape[0] != dineq.size:
            raise DimensionMismatch("constraint right-hand sides do not match row counts")
        if self.lower_bounds is None:
            lb = np.full(k, -np.inf)
        else:
            lb = as_vector(self.lower_bounds, "lower_bounds")
            if lb.size != k:
                raise DimensionMismatch("lower_bounds length mismatch")
        return P, r, Aeq, beq, Cineq, dineq, lb


@dataclass(frozen=True)
class ConvexSolution:
    """Primal-dual solution of a QP/LP.

    Multipliers follow the convention  Px + r + Aeq'lam + Cineq'mu - z_lb = 0
    with mu >= 0 and z_lb >= 0 complementary to (x - lb).
    """

    x: np.ndarray
    eq_multipliers: np.ndarray
    ineq_multipliers: np.ndarray
    bound_multipliers: np.ndarray
    objective: float
    status: str
    iterations: int = 0
    residuals: dict = field(default_factory=dict, repr=False, compare=False)


def _steplen(v: np.ndarray, dv: np.ndarray, frac: float) -> float:
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, frac * float(np.min(-v[neg] / dv[neg])))


def _check_feasible_lp(Aeq, beq, G, h):
    """HiGHS feasibility check for {Aeq x = beq, G x <= h}; raises Infeasible."""
    k = Aeq.shape[1] if Aeq.size else G.shape[1]
    res = linprog(np.zeros(k),
                  A_ub=G if G.size else None, b_ub=h if G.size else None,
                  A_eq=Aeq if Aeq.size else None, b_eq=beq if Aeq.size else None,
                  bounds=[(None, None)] * k, method="highs",
                  options=_HIGHS_OPTS)
    if res.status == 2:
        raise Infeasible("constraint set is empty")
    if res.status not in (0, 3):
        raise SolverError(f"feasibility check failed: {res.message}")


def _unbounded_certificate(P, r, Aeq, G) -> bool:
    """Look for a recession direction d: Pd = 0, Aeq d = 0, G d <= 0, r'd < 0."""
    k = r.size
    rows_eq = [mat for mat in (Aeq, P) if mat.size]
    A_eq = np.vstack(rows_eq) if rows_eq else None
    res = linprog(r,
                  A_ub=G if G.size else None,
                  b_ub=np.zeros(G.shape[0]) if G.size else None,
                  A_eq=A_eq, b_eq=np.zeros(A_eq.shape[0]) if A_eq is not None else None,
                  bounds=[(-1.0, 1.0)] * k, method="highs", options=_HIGHS_OPTS)
    return res.status == 0 and res.fun < -1e-9 * (1.0 + float(np.abs(r).max(initial=0.0)))


def _solve_kkt_equality(P, r, Arows, rhs):
    """Solve [[P, A'], [A, 0]] (x; nu) = (-r; rhs) by LU, falling back to a
    rank-revealing least-squares solve for singular systems.

    Returns (x, nu, residual_inf) or None when the system is inconsistent
    (or too ill-behaved for either factorization).
    """
    k = r.size
    nrow = Arows.shape[0]
    K = np.zeros((k + nrow, k + nrow))
    K[:k, :k] = P
    if nrow:
        K[:k, k:] = Arows.T
        K[k:, :k] = Arows
    full_rhs = np.concatenate([-r, rhs])
    sol = None
    try:
        sol = np.linalg.solve(K, full_rhs)
    except np.linalg.LinAlgError:
        # redundant active rows make K singular with non-unique multipliers;
        # a tiny dual regularization picks a consistent one at LU cost
        if nrow:
            K_reg = K.copy()
            reg = 1e-11 * (1.0 + float(np.abs(Arows).max(initial=0.0)))
            K_reg[k:, k:] -= reg * np.eye(nrow)
            try:
                sol = np.linalg.solve(K_reg, full_rhs)
            except np.linalg.LinAlgError:
                sol = None
        if sol is None or np.abs(K @ sol - full_rhs).max(initial=0.0) > \
                1e-7 * (1.0 + np.abs(full_rhs).max(initial=0.0)):
            if K.shape[0] > 1200:
                return None
            try:
                sol, *_ = scipy.linalg.lstsq(K, full_rhs,
                                             lapack_driver="gelsy",
                                             check_finite=False)
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgError,
                    ValueError):
                return None
    resid = float(np.abs(K @ sol - full_rhs).max(initial=0.0))
    scale = 1.0 + float(np.abs(full_rhs).max(initial=0.0))
    if resid > 1e-7 * scale:
        return None
    return sol[:k], sol[k:], resid


def solve_qp(qp: QuadraticProgram, tol: float = DEFAULT_TOL,
             max_iter: int = 200) -> ConvexSolution:
    """Solve a convex QP, returning multipliers for every constraint row.

    Raises Infeasible, Unbounded, or MaxIterations.  On success, every KKT
    residual (stationarity, primal/dual feasibility, complementarity) is at
    most ``tol`` relative to the data scale.
    """
    P, r, Aeq, beq, Cineq, dineq, lb = qp.canonical()
    k = r.size
    q = Aeq.shape[0]
    m_c = Cineq.shape[0]

    bounded = np.flatnonzero(np.isfinite(lb))
    G_rows = [Cineq] if m_c else []
    h_parts = [dineq] if m_c else []
    if bounded.size:
        Gb = np.zeros((bounded.size, k))
        Gb[np.arange(bounded.size), bounded] = -1.0
        G_rows.append(Gb)
        h_parts.append(-lb[bounded])
    G = np.vstack(G_rows) if G_rows else np.zeros((0, k))
    h = np.concatenate(h_parts) if h_parts else np.zeros(0)
    m = G.shape[0]

    if q or m:
        _check_feasible_lp(Aeq, beq, G, h)

    if m == 0:
        out = _solve_kkt_equality(P, r, Aeq, beq)
        if out is None:
            raise Unbounded("QP objective is unbounded below on the feasible set")
        x, nu, _ = out
        sol = ConvexSolution(
            x=x, eq_multipliers=nu, ineq_multipliers=np.zeros(0),
            bound_multipliers=np.zeros(k),
            objective=float(0.5 * x @ (P @ x) + r @ x),
            status=_STATUS_OPTIMAL, iterations=0,
        )
        return sol

    try:
        x, s, y, z, iters = _ipm(P, r, Aeq, beq, G, h, tol, max_iter)
    except (MaxIterations, Unbounded, SolverError) as exc:
        if _unbounded_certificate(P, r, Aeq, G):
            raise Unbounded("QP objective is unbounded below on the feasible "
                            "set (recession direction found)") from exc
        raise
    x, y, z = _polish(P, r, Aeq, beq, G, h, x, y, z, tol, n_general=m_c)

    final = _qp_residuals(P, r, Aeq, beq, G, h, x, y, z)
    obj = float(0.5 * x @ (P @ x) + r @ x)
    scale = 1.0 + float(np.abs(r).max(initial=0.0)) + \
        float(np.abs(h).max(initial=0.0)) + float(np.abs(beq).max(initial=0.0))
    feas_bad = max(final["stationarity"], final["eq"], final["ineq"],
                   final["dual_feas"]) > tol * scale
    comp_bad = final["comp"] > tol * max(scale, 1.0 + abs(obj))
    if feas_bad or comp_bad:
        if _unbounded_certificate(P, r, Aeq, G):
            raise Unbounded("QP objective is unbounded below on the feasible "
                            "set (recession direction found)")
        raise MaxIterations(
            f"QP residuals {final} exceed tol {tol:.1e} after polish")

    mu_full = z[:m_c] if m_c else np.zeros(0)
    zb = np.zeros(k)
    if bounded.size:
        zb[bounded] = z[m_c:]
    resid = _qp_residuals(P, r, Aeq, beq, G, h, x, y, z)
    return ConvexSolution(
        x=x, eq_multipliers=y, ineq_multipliers=np.maximum(mu_full, 0.0),
        bound_multipliers=np.maximum(zb, 0.0),
        objective=float(0.5 * x @ (P @ x) + r @ x),
        status=_STATUS_OPTIMAL, iterations=iters, residuals=resid,
    )


def _qp_residuals(P, r, Aeq, beq, G, h, x, y, z):
    r_d = P @ x + r + (Aeq.T @ y if Aeq.size else 0.0) + (G.T @ z if G.size else 0.0)
    slack = h - G @ x if G.size else np.zeros(0)
    return {
        "stationarity": float(np.abs(r_d).max(initial=0.0)),
        "eq": float(np.abs(Aeq @ x - beq).max(initial=0.0)) if Aeq.size else 0.0,
        "ineq": float(np.maximum(-slack, 0.0).max(initial=0.0)),
        "comp": float(np.abs(z * slack).max(initial=0.0)),
        "dual_feas": float(np.maximum(-z, 0.0).max(initial=0.0)),
    }


def _ipm(P, r, Aeq, beq, G, h, tol, max_iter):
    """Mehrotra predictor-corrector on the slack form Gx + s = h, s, z > 0."""
    k = r.size
    q = Aeq.shape[0]
    m = G.shape[0]
    delta = 1e-12 * (1.0 + np.abs(P).max(initial=0.0))

    # starting point: regularized least-squares stationarity solve
    K0 = np.zeros((k + q, k + q))
    K0[:k, :k] = P + np.eye(k)
    if q:
        K0[:k, k:] = Aeq.T
        K0[k:, :k] = Aeq
        K0[k:, k:] = -delta * np.eye(q)
    rhs0 = np.concatenate([-r, beq])
    try:
        sol0 = np.linalg.solve(K0, rhs0)
    except np.linalg.LinAlgError:
        sol0, *_ = np.linalg.lstsq(K0, rhs0, rcond=None)
    x = sol0[:k]
    y = sol0[k:]
    # shifted start: slacks must dominate the initial constraint violation,
    # and duals the initial stationarity residual, or the first Newton steps
    # blow the iterates up (the slack 1 / violation 1e3 regime)
    s_raw = h - G @ x
    shift = max(0.0, -1.5 * float(s_raw.min(initial=0.0)))
    s = s_raw + shift + 1.0
    rd0 = P @ x + r + (Aeq.T @ y if q else 0.0)
    g_scale = 1.0 + float(np.abs(G).sum(axis=1).max(initial=1.0))
    z = np.full(m, 1.0 + float(np.abs(rd0).max(initial=0.0)) / g_scale)

    scale_d = 1.0 + float(np.abs(r).max(initial=0.0))
    scale_p = 1.0 + max(float(np.abs(beq).max(initial=0.0)),
                        float(np.abs(h).max(initial=0.0)))
    obj_floor = -1e50 * (1.0 + abs(float(r @ r)))

    mu_prev = np.inf
    stagnant = 0
    for it in range(max_iter):
        r_d = P @ x + r + (Aeq.T @ y if q else 0.0) + G.T @ z
        r_p = (Aeq @ x - beq) if q else np.zeros(0)
        r_g = G @ x + s - h
        mu = float(s @ z) / m

        obj = float(0.5 * x @ (P @ x) + r @ x)
        residuals_ok = (np.abs(r_d).max(initial=0.0) <= tol * scale_d
                        and np.abs(r_p).max(initial=0.0) <= tol * scale_p
                        and np.abs(r_g).max(initial=0.0) <= tol * scale_p)
        if residuals_ok:
            # push the gap two orders past the residual tolerance so the
            # active-set polish gets a clean binding classification
            if mu <= 1e-2 * tol * (1.0 + abs(obj)):
                return x, s, y, z, it
            stagnant = stagnant + 1 if mu > 0.9 * mu_prev else 0
            if stagnant >= 8:
                return x, s, y, z, it
        elif mu <= 1e-13 * (1.0 + abs(obj)):
            # gap at numerical floor while a residual lags: driving further
            # only collapses the slacks; hand over to the polish step
            return x, s, y, z, it
        mu_prev = mu

        if obj < obj_floor or np.abs(x).max(initial=0.0) > 1e14 * scale_p:
            raise Unbounded("interior-point iterates diverge; QP appears unbounded")

        W = z / s
        base = P + (G.T * W) @ G
        step_cap = 1e10 * (1.0 + float(np.abs(x).max(initial=0.0)) + scale_p)

        # transiently flat directions (zero curvature, all slacks loose) make
        # the Newton matrix numerically singular; escalate the inertia
        # regularization until the affine step is finite and sane
        newton = None
        dx_a = None
        reg = delta
        for _ in range(6):
            K = np.zeros((k + q, k + q))
            K[:k, :k] = base
            K[np.arange(k), np.arange(k)] += reg
            if q:
                K[:k, k:] = Aeq.T
                K[k:, :k] = Aeq
                K[k:, k:] = -max(reg, delta) * np.eye(q)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                try:
                    lu, piv = scipy.linalg.lu_factor(K)
                except (scipy.linalg.LinAlgError, ValueError):
                    reg = max(reg * 1e4, 1e-10)
                    continue

            def newton(rc, lu=lu, piv=piv):
                tmp = (z * r_g - rc) / s
                rhs = np.concatenate([-(r_d + G.T @ tmp), -r_p])
                dxy = scipy.linalg.lu_solve((lu, piv), rhs)
                dx = dxy[:k]
                dy = dxy[k:]
                ds = -r_g - G @ dx
                dz = W * (G @ dx) + tmp
                return dx, dy, ds, dz

            dx_a, dy_a, ds_a, dz_a = newton(z * s)
            if (np.all(np.isfinite(dx_a))
                    and float(np.abs(dx_a).max(initial=0.0)) <= step_cap):
                break
            reg = max(reg * 1e4, 1e-10)
            newton = None
        if newton is None or dx_a is None:
            raise SolverError("KKT system could not be stabilized")
        a_p = _steplen(s, ds_a, 1.0)
        a_d = _steplen(z, dz_a, 1.0)
        mu_aff = float((s + a_p * ds_a) @ (z + a_d * dz_a)) / m
        sigma = (max(mu_aff, 0.0) / mu) ** 3 if mu > 0 else 0.1

        # corrector
        rc = z * s + ds_a * dz_a - sigma * mu
        dx, dy, ds, dz = newton(rc)
        frac = min(0.9999, max(0.99, 1.0 - mu))
        a_p = _steplen(s, ds, frac)
        a_d = _steplen(z, dz, frac)
        x = x + a_p * dx
        s = s + a_p * ds
        y = y + a_d * dy
        z = z + a_d * dz

    raise MaxIterations(f"interior-point method did not converge in {max_iter} iterations")


def _polish(P, r, Aeq, beq, G, h, x, y, z, tol, n_general=None):
    """Refine the IPM iterate by solving the KKT system of a guessed active set.

    The binding classification from an interior iterate is fuzzy on weakly
    active rows, so the dual/slack ratio guess is refined active-set style:
    rows whose polished slack goes negative enter, rows whose polished
    multiplier goes negative leave, one row per step.  A validated set gives
    machine-accurate primal and dual solutions.

    Rows up to ``n_general`` are general inequalities; the rest are simple
    bounds.  A general active row supported entirely on bound-pinned
    coordinates is redundant (the bound duals span it), and keeping it makes
    the KKT system singular, so such rows are dropped from the guess.
    """
    m = G.shape[0]
    q = Aeq.shape[0]
    if n_general is None:
        n_general = m
    s = np.maximum(h - G @ x, 0.0)
    ratio = z / (s + 1e-300)
    obj_old = float(0.5 * x @ (P @ x) + r @ x)
    old = _qp_residuals(P, r, Aeq, beq, G, h, x, y, z)
    old_max = max(old.values())

    def drop_redundant(act):
        if n_general == 0 or not act[:n_general].any():
            return act
        bound_rows = np.flatnonzero(act[n_general:]) + n_general
        if bound_rows.size == 0:
            return act
        pinned = np.zeros(G.shape[1], dtype=bool)
        pinned[np.argmax(np.abs(G[bound_rows]) > 0, axis=1)] = True
        gen = np.flatnonzero(act[:n_general])
        rows = G[gen]
        sup = np.abs(rows) > 1e-14 * (1.0 + np.abs(rows).max(initial=0.0))
        redundant = ~np.any(sup & ~pinned[None, :], axis=1)
        act[gen[redundant]] = False
        return act

    active = drop_redundant(ratio >= 1.0)
    for _ in range(40):
        rows = np.vstack([Aeq, G[active]]) if Aeq.size else G[active]
        rhs = np.concatenate([beq, h[active]])
        out = _solve_kkt_equality(P, r, rows, rhs)
        if out is None:
            return x, y, z
        x_new, nu, _ = out
        y_new = nu[:q]
        z_act = nu[q:]
        slack_new = h - G @ x_new
        scale = 1.0 + float(np.abs(h).max(initial=0.0)) + \
            float(np.abs(x_new).max(initial=0.0))
        dual_scale = 1.0 + float(np.abs(nu).max(initial=0.0))

        worst_slack = slack_new[~active].min(initial=np.inf)
        worst_dual = z_act.min(initial=0.0)
        if worst_slack < -1e-9 * scale:
            cand = np.flatnonzero(~active)
            active[cand[int(np.argmin(slack_new[~active]))]] = True
            active = drop_redundant(active)
            continue
        if worst_dual < -1e-9 * dual_scale:
            cand = np.flatnonzero(active)
            active[cand[int(np.argmin(z_act))]] = False
            continue

        obj_new = float(0.5 * x_new @ (P @ x_new) + r @ x_new)
        if obj_new > obj_old + 1e-7 * (1.0 + abs(obj_old)):
            return x, y, z
        z_new = np.zeros(m)
        z_new[active] = np.maximum(z_act, 0.0)
        new = _qp_residuals(P, r, Aeq, beq, G, h, x_new, y_new, z_new)
        if max(new.values()) <= max(old_max, tol):
            return x_new, y_new, z_new
        return x, y, z
    return x, y, z


_PROBE_SEED = 1851953


def solve_lp(c, Aeq=None, beq=None, Cineq=None, dineq=None, lower_bounds=None,
             tol: float = 1e-9, probe_degeneracy: bool = True) -> ConvexSolution:
    """Linear program via HiGHS with multipliers in this package's convention.

    With ``probe_degeneracy`` the objective is re-solved under two tiny
    componentwise perturbations (+-1e-7 patterns); if a second optimal vertex
    with equal objective shows up, status is ``degenerate_optimal``.
    """
    c = as_vector(c, "c")
    k = c.size
    Aeq_m = as_matrix(Aeq, "Aeq", ncols=k)
    Cineq_m = as_matrix(Cineq, "Cineq", ncols=k)
    beq_v = np.zeros(0) if beq is None else as_vector(beq, "beq")
    dineq_v = np.zeros(0) if dineq is None else as_vector(dineq, "dineq")
    if lower_bounds is None:
        bounds = [(None, None)] * k
    else:
        lb = as_vector(lower_bounds, "lower_bounds")
        bounds = [(None if not np.isfinite(v) else float(v), None) for v in lb]

    def run(cost):
        return linprog(cost,
                       A_ub=Cineq_m if Cineq_m.size else None,
                       b_ub=dineq_v if Cineq_m.size else None,
                       A_eq=Aeq_m if Aeq_m.size else None,
                       b_eq=beq_v if Aeq_m.size else None,
                       bounds=bounds, method="highs", options=_HIGHS_OPTS)

    res = run(c)
    if res.status == 2:
        raise Infeasible("LP constraint set is empty")
    if res.status == 3:
        raise Unbounded("LP objective is unbounded below")
    if res.status != 0:
        raise SolverError(f"LP solve failed: {res.message}")

    x = np.asarray(res.x, dtype=float)
    lam = -np.asarray(res.eqlin.marginals, dtype=float) if Aeq_m.size else np.zeros(0)
    mu = -np.asarray(res.ineqlin.marginals, dtype=float) if Cineq_m.size else np.zeros(0)
    zb = np.asarray(res.lower.marginals, dtype=float) if lower_bounds is not None \
        else np.zeros(k)

    status = _STATUS_OPTIMAL
    if probe_degeneracy:
        rng = np.random.default_rng(_PROBE_SEED)
        signs = rng.choice(np.array([-1.0, 1.0]), size=k)
        # distinct magnitudes within +-1e-7 so tied coordinates always split
        mags = 0.5 + 0.5 * rng.random(k)
        pattern0 = signs * mags
        scale = 1e-7 * max(1.0, float(np.abs(c).max(initial=0.0)))
        xs = [x]
        for pattern in (pattern0, -pattern0):
            r2 = run(c + scale * pattern)
            if r2.status == 0:
                xs.append(np.asarray(r2.x, dtype=float))
        obj0 = float(c @ x)
        x_scale = 1.0 + float(np.abs(x).max(initial=0.0))
        for alt in xs[1:]:
            same_obj = abs(float(c @ alt) - obj0) <= 1e-6 * (1.0 + abs(obj0))
            moved = float(np.abs(alt - x).max(initial=0.0)) > 1e-6 * x_scale
            if same_obj and moved:
                status = _STATUS_DEGENERATE
                break

    return ConvexSolution(
        x=x, eq_multipliers=lam, ineq_multipliers=np.maximum(mu, 0.0),
        bound_multipliers=np.maximum(zb, 0.0), objective=float(c @ x),
        status=status, iterations=int(getattr(res, "nit", 0)),
    )


class PolyhedronProjector:
    """Euclidean projection onto {z : Az = b, Cz <= d} via the dual.

    The dual is  min_{lam, mu >= 0} 0.5||A'lam + C'mu||^2 - lam'(Av-b) - mu'(Cv-d),
    strictly convex when [A; C] has full row rank.  A Lawson-Hanson active-set
    loop solves it exactly; the working set and its Cholesky factor are cached
    so repeated projections (as in ADMM) cost one triangular solve once the
    binding geometry settles.
    """

    def __init__(self, A, b, C, d, tol: float = 1e-10):
        self.A = as_matrix(A, "A")
        self.C = as_matrix(C, "C", ncols=self.A.shape[1] if self.A.size else None)
        if self.A.size and self.C.size and self.A.shape[1] != self.C.shape[1]:
            raise DimensionMismatch("A and C column counts differ")
        self.b = np.zeros(0) if b is None else as_vector(b, "b")
        self.d = np.zeros(0) if d is None else as_vector(d, "d")
        self.q = self.A.shape[0]
        self.m = self.C.shape[0]
        self.tol = tol
        rows = [mat for mat in (self.A, self.C) if mat.size]
        self._rows = np.vstack(rows) if rows else np.zeros((0, 0))
        self._gram = self._rows @ self._rows.T if self._rows.size else np.zeros((0, 0))
        self._rhs_mat = self._rows
        self._offsets = np.concatenate([self.b, self.d])
        self._cache_key = None
        self._cache_factor = None
        self._mu = np.zeros(self.m)
        self._S = np.zeros(self.m, dtype=bool)
        self._feasible_checked = False

    def _factor(self, idx):
        key = idx.tobytes()
        if self._cache_key == key:
            return self._cache_factor
        M = self._gram[np.ix_(idx, idx)]
        jitter = 0.0
        for _ in range(3):
            try:
                fac = scipy.linalg.cho_factor(
                    M + jitter * np.eye(len(idx)), lower=True)
                self._cache_key = key
                self._cache_factor = fac
                return fac
            except np.linalg.LinAlgError:
                jitter = max(jitter * 100.0, 1e-12 * (1.0 + np.trace(M)))
        raise SolverError("projection dual system could not be factorized")

    def _verify_feasible(self):
        if self._feasible_checked:
            return
        _check_feasible_lp(self.A if self.A.size else np.zeros((0, self.C.shape[1])),
                           self.b, self.C, self.d)
        self._feasible_checked = True

    def project(self, v, warm_start: bool = True):
        """Return (z, eq_multipliers, ineq_multipliers)."""
        v = as_vector(v, "v")
        if self.q == 0 and self.m == 0:
            return v.copy(), np.zeros(0), np.zeros(0)

        if not warm_start:
            self._S[:] = False
            self._mu[:] = 0.0
        S = self._S
        mu = self._mu
        resid_all = self._rows @ v - self._offsets

        scale = 1.0 + float(np.abs(v).max(initial=0.0)) + \
            float(np.abs(self.d).max(initial=0.0))
        feas_tol = self.tol * scale
        max_outer = 3 * self.m + 100

        lam = np.zeros(self.q)
        for outer in range(max_outer + 1):
            idx = np.concatenate([np.arange(self.q),
                                  self.q + np.flatnonzero(S)])
            if idx.size:
                for _ in range(self.m + 2):
                    fac = self._factor(idx)
                    sol = scipy.linalg.cho_solve(fac, resid_all[idx])
                    lam = sol[:self.q]
                    mu_S = sol[self.q:]
                    if mu_S.size == 0 or mu_S.min(initial=0.0) >= -feas_tol:
                        mu[:] = 0.0
                        mu[S] = np.maximum(mu_S, 0.0)
                        break
                    # Lawson-Hanson partial step back toward the last feasible mu
                    cur = mu[S]
                    neg = mu_S < 0
                    theta = float(np.min(cur[neg] / (cur[neg] - mu_S[neg])))
                    stepped = cur + theta * (mu_S - cur)
                    mu[S] = np.maximum(stepped, 0.0)
                    drop = np.flatnonzero(S)[stepped <= feas_tol]
                    if drop.size == 0:
                        drop = np.flatnonzero(S)[np.argmin(stepped)][None]
                    S[drop] = False
                    mu[drop] = 0.0
                    idx = np.concatenate([np.arange(self.q),
                                          self.q + np.flatnonzero(S)])
                else:
                    raise SolverError("projection inner loop failed to settle")

            z = v.copy()
            if self.q:
                z -= self.A.T @ lam
            if S.any():
                z -= self.C[S].T @ mu[S]
            if self.m:
                resid = self.C @ z - self.d
                # rows in the working set must sit on their boundary; a large
                # residual there means the dual is running off to infinity,
                # i.e. the polyhedron is empty
                if S.any() and np.abs(resid[S]).max() > 1e3 * feas_tol:
                    self._verify_feasible()
                viol = resid.copy()
                viol[S] = -np.inf
                worst = int(np.argmax(viol))
                if viol[worst] <= feas_tol:
                    return z, lam, mu.copy()
                if outer == max_outer // 2:
                    self._verify_feasible()
                S[worst] = True
            else:
                return z, lam, mu.copy()

        self._verify_feasible()
        raise MaxIterations("projection active-set loop exceeded its iteration cap")


def project_polyhedron(v, A, b, C, d, tol: float = 1e-10) -> np.ndarray:
    """argmin ||z - v|| over {Az = b, Cz <= d}; see PolyhedronProjector."""
    z, _, _ = PolyhedronProjector(A, b, C, d, tol=tol).project(v, warm_start=False)
    return z


def classo_qp(problem: Problem, rho: float, tol: float = DEFAULT_TOL) -> FitResult:
    """Constrained lasso at a single rho via the 2p-variable split QP.

    beta = beta+ - beta- with both halves nonnegative; the Gram blocks are
    +-X'X and the linear term is rho*1 -+ X'y.  Multipliers of the split QP
    map one-to-one onto the multipliers of the original problem.
    """
    if rho < 0:
        raise DimensionMismatch("rho must be >= 0")
    problem = validate(problem)
    work = augment_ridge(problem) if problem.epsilon > 0 else problem
    p = work.p
    gram = work.X.T @ work.X
    xty = work.X.T @ work.y

    if rho == 0.0:
        # no l1 term: constrained least squares directly in beta space (the
        # split would add a flat inflation ray that only hurts conditioning)
        sol = solve_qp(QuadraticProgram(
            P=gram, r=-xty, Aeq=work.A if work.q else None,
            beq=work.b if work.q else None,
            Cineq=work.C if work.m else None,
            dineq=work.d if work.m else None), tol=tol)
        beta = sol.x.copy()
        beta[np.abs(beta) < 1e-10] = 0.0
        plus = np.maximum(beta, 0.0)
        minus = np.maximum(-beta, 0.0)
    else:
        P = np.block([[gram, -gram], [-gram, gram]])
        r = rho * np.ones(2 * p) - np.concatenate([xty, -xty])
        Aeq = np.hstack([work.A, -work.A]) if work.q else None
        Cineq = np.hstack([work.C, -work.C]) if work.m else None

        sol = solve_qp(QuadraticProgram(
            P=P, r=r, Aeq=Aeq, beq=work.b if work.q else None,
            Cineq=Cineq, dineq=work.d if work.m else None,
            lower_bounds=np.zeros(2 * p)), tol=tol)

        plus = sol.x[:p].copy()
        minus = sol.x[p:].copy()
        # remove any shared inflation: (plus - t, minus - t) has the same
        # beta and never a worse objective, and restores split
        # complementarity at rho = 0
        shift = np.maximum(np.minimum(plus, minus), 0.0)
        plus -= shift
        minus -= shift
        beta = plus - minus
        beta[np.abs(beta) < 1e-10] = 0.0

    lam = sol.eq_multipliers
    mu = sol.ineq_multipliers
    fit = FitResult(
        beta=beta, rho=float(rho),
        objective=objective(problem, beta, rho),
        kkt_stationarity=0.0, eq_violation=0.0, ineq_violation=0.0,
        complementarity=0.0,
        multipliers_eq=lam, multipliers_ineq=mu,
        iterations=sol.iterations, solver="qp",
        diagnostics={"beta_plus": plus, "beta_minus": minus,
                     "qp_status": sol.status, "qp_residuals": sol.residuals},
    )
    res = kkt_residual(problem, fit)
    return FitResult(
        beta=beta, rho=float(rho), objective=fit.objective,
        kkt_stationarity=res.stationarity, eq_violation=res.eq_violation,
        ineq_violation=res.ineq_violation, complementarity=res.complementarity,
        multipliers_eq=lam, multipliers_ineq=mu,
        iterations=sol.iterations, solver="qp", diagnostics=fit.diagnostics,
    )
