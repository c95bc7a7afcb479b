"""Piecewise-linear solution path for the constrained lasso.

Path following runs in the decreasing direction from rho_max toward 0.  On a
segment where the active set, the binding set, and the signs are fixed, the
optimum moves linearly in rho; the direction comes from a bordered system
(the active Gram block bordered by the active columns of the constraint
rows).  Four monitors locate the next kink:

  (i)   an active coefficient hits 0,
  (ii)  an inactive coefficient's subgradient hits +-1,
  (iii) a strict inequality hits its boundary,
  (iv)  a binding inequality's multiplier hits 0,

plus a zero-length event that moves an inactive coefficient whose pinned
subgradient is traveling too slowly (s_j * d[rho s_j]/drho < 1) into the
active set before stepping.

Initialization solves the minimal-l1 linear program, then a second small LP
that minimizes rho over all multiplier certificates keeping that point
optimal; this pins rho_max exactly even when the first LP's duals are not
unique.  If the minimal-l1 point itself is not unique, initialization falls
back to a quadratic-program solve at the certified rho_max.

Degenerate binding stacks (many inequality rows binding at once, e.g. a
monotone cone at the all-zero start) make the bordered system singular no
matter how rows are dropped.  After the documented recovery ladder fails,
the solve restarts once with a deterministic, row-distinct perturbation of d
on the order of 1e-10, which splits the ties; the effect on the path is far
below the verification tolerances and is recorded in the path metadata.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .convex import classo_qp, solve_lp
from .errors import (
    Infeasible,
    InitializationFailed,
    MaxIterations,
    SingularSystem,
    SolverError,
    NeedsRidge,
)
from .model import (
    FitResult,
    KktResiduals,
    Problem,
    ZERO_TOL,
    augment_ridge,
    degrees_of_freedom,
    kkt_residual,
    objective,
    validate,
)

_EVENT_PRIORITY = {"escape": 0, "deactivate": 1, "bind": 2, "activate": 3}


@dataclass(frozen=True)
class PathOptions:
    """Tunables of the path follower; defaults match the verification suite."""

    kkt_tol: float = 1e-6          # per-kink certification threshold
    zero_tol: float = ZERO_TOL     # active-set membership snap
    pin_tol: float = 1e-9          # |s_j| >= 1 - pin_tol counts as pinned
    slow_subgrad_tol: float = 1e-9  # strictness of s_j * d[rho s_j] < 1
    tie_tol: float = 1e-12         # events within this delta are processed together
    stall_tol: float = 1e-12       # relative step size that counts as a stall
    auto_epsilon: float = 1e-4     # ridge applied when n < p and epsilon == 0
    max_kinks: int = 100_000
    lp_tol: float = 1e-9
    qp_tol: float = 1e-10          # initialization fallback QP tolerance
    allow_perturbation: bool = True


@dataclass
class PathState:
    """Moving state of the follower at the current rho.

    ``active`` and ``binding`` are boolean masks (the bookkeeping sets, which
    may include coordinates currently sitting at zero); ``sign`` is the
    subgradient vector, +-1 on active coordinates and inside [-1, 1] off
    them; ``ineq_residual`` holds C beta - d with binding rows snapped to 0.
    """

    rho: float
    beta: np.ndarray
    active: np.ndarray
    binding: np.ndarray
    sign: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    ineq_residual: np.ndarray

    @property
    def active_indices(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    @property
    def binding_indices(self) -> np.ndarray:
        return np.flatnonzero(self.binding)

    def copy(self) -> "PathState":
        return PathState(self.rho, self.beta.copy(), self.active.copy(),
                         self.binding.copy(), self.sign.copy(),
                         self.lam.copy(), self.mu.copy(),
                         self.ineq_residual.copy())


@dataclass(frozen=True)
class PathDirection:
    """d/drho of the path quantities on the current segment."""

    dbeta_active: np.ndarray
    dlam: np.ndarray
    dmu_binding: np.ndarray
    dsubgrad_inactive: np.ndarray
    dresidual: np.ndarray
    active_idx: np.ndarray
    binding_idx: np.ndarray
    inactive_idx: np.ndarray
    nonbinding_idx: np.ndarray


@dataclass(frozen=True)
class Kink:
    """One recorded event of the path, with a full KKT certificate."""

    rho: float
    beta: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    sign: np.ndarray
    active: np.ndarray          # position-derived: indices with |beta_j| > zero_tol
    binding: np.ndarray         # position-derived binding inequality rows
    df: int                     # from the position-derived sets
    segment_df: int             # bookkeeping df of the segment below this kink
    objective: float
    event: str
    kkt: KktResiduals


@dataclass
class SolutionPath:
    """Ordered kinks (rho decreasing) plus solve metadata."""

    kinks: List[Kink]
    rho_max: float
    termination: str            # rho_zero | df_equals_n | stalled
    problem: Problem            # the problem whose objective the kinks report
    epsilon: float
    metadata: dict = field(default_factory=dict)

    @property
    def rhos(self) -> np.ndarray:
        return np.array([k.rho for k in self.kinks])

    @property
    def betas(self) -> np.ndarray:
        return np.array([k.beta for k in self.kinks])

    def interpolate(self, rho: float):
        return interpolate(self, rho)


class _NeedsPerturbation(SolverError):
    """Internal: degenerate geometry, restart with perturbed d."""


def _perturbed_rhs(v: np.ndarray, offset: int = 0) -> np.ndarray:
    """Deterministic row-distinct shift of a constraint right-hand side.

    The magnitude (3..6)e-10 sits above every binding/active classification
    tolerance (1e-11 .. 1e-10) and far below the 1e-6 verification budget.
    """
    if v.size == 0:
        return v
    scale = 1.0 + float(np.abs(v).max())
    frac = np.modf(0.6180339887498949 * (np.arange(v.size) + 1.0 + offset))[0]
    return v + (3.0 + 3.0 * frac) * 1e-10 * scale


def _direction_core(gram, A, C, state: PathState) -> PathDirection:
    """Solve the bordered system for the segment direction."""
    active_idx = state.active_indices
    binding_idx = state.binding_indices
    inactive_idx = np.flatnonzero(~state.active)
    nonbinding_idx = np.flatnonzero(~state.binding)
    na, q, nz = active_idx.size, A.shape[0], binding_idx.size
    dim = na + q + nz

    if q + nz > na:
        raise SingularSystem(
            f"{q + nz} constraint rows cannot be independent on {na} active columns")

    if dim == 0:
        dirvec = np.zeros(0)
        dbeta = np.zeros(0)
        dlam = np.zeros(0)
        dmu = np.zeros(0)
    else:
        M = np.zeros((dim, dim))
        M[:na, :na] = gram[np.ix_(active_idx, active_idx)]
        if q + nz:
            rows = np.vstack([A[:, active_idx],
                              C[np.ix_(binding_idx, active_idx)]])
            M[:na, na:] = rows.T
            M[na:, :na] = rows
        rhs = np.concatenate([state.sign[active_idx], np.zeros(q + nz)])
        try:
            sol = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
        resid = float(np.abs(M @ sol - rhs).max(initial=0.0))
        if resid > 1e-8 * (1.0 + float(np.abs(rhs).max(initial=0.0))):
            raise SingularSystem(f"bordered system residual {resid:.2e}")
        dirvec = -sol
        dbeta = dirvec[:na]
        dlam = dirvec[na:na + q]
        dmu = dirvec[na + q:]

    if inactive_idx.size and dim:
        T = np.vstack([gram[np.ix_(active_idx, inactive_idx)],
                       A[:, inactive_idx],
                       C[np.ix_(binding_idx, inactive_idx)]])
        dsub = -(T.T @ dirvec)
    else:
        dsub = np.zeros(inactive_idx.size)

    if nonbinding_idx.size and na:
        dresid = C[np.ix_(nonbinding_idx, active_idx)] @ dbeta
    else:
        dresid = np.zeros(nonbinding_idx.size)

    return PathDirection(dbeta, dlam, dmu, dsub, dresid,
                         active_idx, binding_idx, inactive_idx, nonbinding_idx)


def path_direction(problem: Problem, state: PathState) -> PathDirection:
    """Direction of the path at ``state`` for a validated problem.

    Raises SingularSystem when the bordered matrix is singular (dependent
    binding rows or more binding rows than active coordinates).
    """
    problem = validate(problem)
    work = augment_ridge(problem) if problem.epsilon > 0 else problem
    gram = work.X.T @ work.X
    return _direction_core(gram, work.A, work.C, state)


def next_event(state: PathState, direction: PathDirection,
               options: Optional[PathOptions] = None
               ) -> Tuple[float, List[tuple]]:
    """Smallest positive Delta-rho over the four monitors, with its events.

    Returns (delta_rho, events); events is a list of (kind, index, sign)
    tuples, ordered escapes < deactivations < boundary hits < activations.
    A returned delta_rho of 0.0 marks an immediate set change (a coefficient
    sitting at a boundary and moving the wrong way, or the slow-subgradient
    rule firing); delta_rho == state.rho marks the terminal step to rho = 0.
    """
    opts = options or PathOptions()
    rho = state.rho
    cands: List[tuple] = []
    move_tol = 1e-12 * (1.0 + _direction_scale(direction))

    # (iv) binding inequality escapes: mu_l - delta * dmu_l = 0
    for kth, l in enumerate(direction.binding_idx):
        dmu = direction.dmu_binding[kth]
        mu = state.mu[l]
        if mu <= move_tol:
            if dmu > move_tol:
                cands.append((0.0, "escape", int(l), None))
        elif dmu > 0:
            cands.append((mu / dmu, "escape", int(l), None))

    # (i) active coefficient hits zero: beta_j - delta * dbeta_j = 0
    for kth, j in enumerate(direction.active_idx):
        db = direction.dbeta_active[kth]
        bj = state.beta[j]
        if abs(bj) <= opts.zero_tol:
            if state.sign[j] * db > move_tol:
                cands.append((0.0, "deactivate", int(j), None))
        elif db != 0.0 and bj / db > 0:
            cands.append((bj / db, "deactivate", int(j), None))

    # (iii) strict inequality hits the boundary: r_l - delta * dr_l = 0
    for kth, l in enumerate(direction.nonbinding_idx):
        dr = direction.dresidual[kth]
        r = state.ineq_residual[l]
        if r >= -opts.zero_tol * (1.0 + abs(r)):
            if dr < -move_tol:
                cands.append((0.0, "bind", int(l), None))
        elif dr < 0:
            cands.append((r / dr, "bind", int(l), None))

    # (ii) inactive coefficient activates, including the slow-subgradient rule
    for kth, j in enumerate(direction.inactive_idx):
        ds = direction.dsubgrad_inactive[kth]
        sj = state.sign[j]
        if abs(sj) >= 1.0 - opts.pin_tol:
            if sj * ds < 1.0 - opts.slow_subgrad_tol:
                cands.append((0.0, "activate", int(j),
                              1.0 if sj > 0 else -1.0))
                continue
            # pinned and moving inward: only the opposite boundary can be hit
        den_up = ds - 1.0
        den_dn = ds + 1.0
        if den_up < 0:
            delta = rho * (sj - 1.0) / den_up
            if delta > opts.tie_tol:
                cands.append((delta, "activate", int(j), 1.0))
        if den_dn > 0:
            delta = rho * (sj + 1.0) / den_dn
            if delta > opts.tie_tol:
                cands.append((delta, "activate", int(j), -1.0))

    if not cands:
        return rho, [("terminal", -1, None)]

    best = min(c[0] for c in cands)
    if best >= rho - max(opts.tie_tol, 1e-14 * rho):
        return rho, [("terminal", -1, None)]

    tie = max(opts.tie_tol, 1e-12 * max(1.0, rho))
    group = [c for c in cands if c[0] <= best + tie]
    group.sort(key=lambda c: (_EVENT_PRIORITY[c[1]], c[0], c[2]))
    events = [(kind, idx, sgn) for _, kind, idx, sgn in group]
    # deduplicate (the same coordinate can fire both activation roots at a tie)
    seen = set()
    uniq = []
    for ev in events:
        key = (ev[0], ev[1])
        if key not in seen:
            seen.add(key)
            uniq.append(ev)
    return max(best, 0.0), uniq


def _direction_scale(direction: PathDirection) -> float:
    parts = [direction.dbeta_active, direction.dlam, direction.dmu_binding,
             direction.dsubgrad_inactive, direction.dresidual]
    return max((float(np.abs(pp).max()) for pp in parts if pp.size), default=0.0)


def _describe(events) -> str:
    out = []
    for kind, idx, _ in events:
        out.append(kind if idx < 0 else f"{kind}:{idx}")
    return ";".join(out)


class _Follower:
    """One path solve over a fixed (possibly augmented / perturbed) problem."""

    def __init__(self, problem: Problem, options: PathOptions,
                 perturb: bool = False):
        self.original = validate(problem)
        self.opts = options
        self.epsilon = problem.epsilon
        work = augment_ridge(problem) if problem.epsilon > 0 else problem
        if perturb:
            work = Problem(y=work.y, X=work.X, A=work.A,
                           b=_perturbed_rhs(np.asarray(work.b), offset=7),
                           C=work.C, d=_perturbed_rhs(np.asarray(work.d)),
                           epsilon=0.0)
        self.perturbed = perturb
        self.work = work
        self.gram = work.X.T @ work.X
        self.xty = work.X.T @ work.y
        self.p = work.p
        self.q = work.q
        self.m = work.m
        self.n_rows = work.n
        self.state: Optional[PathState] = None
        self.rho_max = np.nan
        self.meta: dict = {"init_fallback": False, "perturbed_d": perturb,
                           "warnings": []}
        self._bind_order: List[int] = []

    # ----------------------------------------------------------- initialization

    def _grad_without_penalty(self, beta, lam, mu) -> np.ndarray:
        """x_j'(y - X beta) - A_j'lam - C_j'mu for all j (work problem)."""
        g = self.xty - self.gram @ beta
        if self.q:
            g = g - self.work.A.T @ lam
        if self.m:
            g = g - self.work.C.T @ mu
        return g

    def _tighten(self, beta):
        """Minimize rho over multiplier certificates keeping ``beta`` optimal.

        Returns (rho_max, lam, mu_full, binding_mask).  The certificate
        requires t_j - A_j'lam - C_j'mu = rho * sign(beta_j) on the support
        and |t_j - A_j'lam - C_j'mu| <= rho elsewhere, with mu >= 0 supported
        on rows binding at beta.
        """
        work = self.work
        t = self.xty - self.gram @ beta
        act = np.abs(beta) > self.opts.zero_tol
        if self.m:
            # kink positions are exact to ~1e-13, and the classification must
            # stay below the d-perturbation scale (3e-10) to be able to see it
            resid = work.C @ beta - work.d
            bind = np.abs(resid) <= 1e-11 * (1.0 + np.abs(work.d))
        else:
            bind = np.zeros(0, dtype=bool)
        bind_idx = np.flatnonzero(bind)
        nz = bind_idx.size
        nvar = self.q + nz + 1

        cols_eq = []
        rhs_eq = []
        rows_ub = []
        rhs_ub = []
        for j in range(self.p):
            coef = np.zeros(nvar)
            if self.q:
                coef[:self.q] = work.A[:, j]
            if nz:
                coef[self.q:self.q + nz] = work.C[bind_idx, j]
            if act[j]:
                coef[-1] = np.sign(beta[j])
                cols_eq.append(coef)
                rhs_eq.append(t[j])
            else:
                up = coef.copy()
                up[-1] = -1.0
                rows_ub.append(up)
                rhs_ub.append(t[j])
                dn = -coef
                dn[-1] = -1.0
                rows_ub.append(dn)
                rhs_ub.append(-t[j])

        c = np.zeros(nvar)
        c[-1] = 1.0
        lb = np.concatenate([np.full(self.q, -np.inf), np.zeros(nz), [0.0]])
        A_eq = np.array(cols_eq) if cols_eq else None
        b_eq = np.array(rhs_eq) if cols_eq else None
        C_ub = np.array(rows_ub) if rows_ub else None
        d_ub = np.array(rhs_ub) if rows_ub else None
        try:
            sol = solve_lp(c, Aeq=A_eq, beq=b_eq, Cineq=C_ub, dineq=d_ub,
                           lower_bounds=lb, probe_degeneracy=False)
        except Infeasible:
            # dependent active columns can make the support equations
            # inconsistent at roundoff level; allow a tiny slack on them
            if A_eq is None:
                raise InitializationFailed(
                    "no finite rho admits a stationarity certificate at the "
                    "minimal-l1 point") from None
            eta = 1e-8 * (1.0 + float(np.abs(t).max(initial=0.0)))
            C_rel = [C_ub] if C_ub is not None else []
            d_rel = [d_ub] if d_ub is not None else []
            C_rel += [A_eq, -A_eq]
            d_rel += [b_eq + eta, -(b_eq - eta)]
            try:
                sol = solve_lp(c, Cineq=np.vstack(C_rel),
                               dineq=np.concatenate(d_rel),
                               lower_bounds=lb, probe_degeneracy=False)
                self.meta["warnings"].append(
                    f"rho_max certificate solved with {eta:.1e} stationarity slack")
            except Infeasible as exc:
                raise InitializationFailed(
                    "no finite rho admits a stationarity certificate at the "
                    "minimal-l1 point") from exc
        w = sol.x
        lam = w[:self.q]
        mu = np.zeros(self.m)
        if nz:
            mu[bind_idx] = np.maximum(w[self.q:self.q + nz], 0.0)
        return float(w[-1]), lam, mu, bind

    def initialize(self) -> Tuple[float, PathState]:
        work = self.work
        p = self.p
        ones = np.ones(2 * p)
        Aeq = np.hstack([work.A, -work.A]) if self.q else None
        Cineq = np.hstack([work.C, -work.C]) if self.m else None
        lp = solve_lp(ones, Aeq=Aeq, beq=work.b if self.q else None,
                      Cineq=Cineq, dineq=work.d if self.m else None,
                      lower_bounds=np.zeros(2 * p), tol=self.opts.lp_tol)
        plus, minus = lp.x[:p], lp.x[p:]
        shift = np.maximum(np.minimum(plus, minus), 0.0)
        beta0 = (plus - shift) - (minus - shift)
        beta0[np.abs(beta0) < self.opts.zero_tol] = 0.0
        self.meta["l1_min"] = float(lp.objective)

        if lp.status == "degenerate_optimal":
            self.meta["init_fallback"] = True
            lam_lp = lp.eq_multipliers
            mu_lp = lp.ineq_multipliers
            g = self._grad_without_penalty(beta0, lam_lp, mu_lp)
            rho_guess = float(np.abs(g).max(initial=0.0))
            beta = beta0
            for _ in range(4):
                fit = classo_qp(Problem(y=work.y, X=work.X, A=work.A, b=work.b,
                                        C=work.C, d=work.d, epsilon=0.0),
                                rho_guess, tol=self.opts.qp_tol)
                beta = fit.beta.copy()
                beta[np.abs(beta) < self.opts.zero_tol] = 0.0
                rho_t, lam, mu, bind = self._tighten(beta)
                if rho_t <= rho_guess * (1.0 + 1e-9):
                    rho_guess = rho_t
                    break
                rho_guess = rho_t
            else:
                raise InitializationFailed(
                    "quadratic-program fallback did not stabilize rho_max")
            rho_max, beta0 = rho_guess, beta
        else:
            rho_max, lam, mu, bind = self._tighten(beta0)

        self.rho_max = rho_max
        active = np.abs(beta0) > self.opts.zero_tol
        sign = np.zeros(p)
        sign[active] = np.sign(beta0[active])
        state = PathState(rho=rho_max, beta=beta0, active=active,
                          binding=bind.copy(), sign=sign, lam=lam, mu=mu,
                          ineq_residual=np.zeros(self.m))
        self.state = state
        self._bind_order = list(np.flatnonzero(bind))
        self._refresh()
        return rho_max, state

    # ----------------------------------------------------------------- dynamics

    def _refresh(self, terminal: bool = False):
        """Recompute derived state (subgradients, residuals) from positions."""
        st = self.state
        g = self._grad_without_penalty(st.beta, st.lam, st.mu)
        inact = ~st.active
        if st.rho > 1e-14 * max(1.0, self.rho_max):
            s = g[inact] / st.rho
            over = float(np.abs(s).max(initial=0.0))
            if over > 1.0 + 1e-8 and not terminal:
                self.meta["warnings"].append(
                    f"subgradient left the unit box by {over - 1.0:.2e} at rho={st.rho:.3e}")
            st.sign[inact] = np.clip(s, -1.0, 1.0)
        if self.m:
            r = self.work.C @ st.beta - self.work.d
            r[st.binding] = 0.0
            st.ineq_residual = r
        st.mu[st.mu < 0] = 0.0
        st.mu[~st.binding] = 0.0

    def _direction_with_recovery(self) -> PathDirection:
        st = self.state
        for _ in range(4):
            try:
                return _direction_core(self.gram, self.work.A, self.work.C, st)
            except SingularSystem:
                pinned = (~st.active) & (np.abs(st.sign) >= 1.0 - self.opts.pin_tol)
                if pinned.any():
                    idx = np.flatnonzero(pinned)
                    st.active[idx] = True
                    st.sign[idx] = np.sign(st.sign[idx])
                    continue
                if self._drop_slack_binding_row():
                    continue
                break
        if not self.perturbed and self.opts.allow_perturbation:
            raise _NeedsPerturbation("bordered system is structurally singular")
        raise SingularSystem(
            "bordered system singular and no recovery step applies")

    def _drop_slack_binding_row(self) -> bool:
        """Unbind the most recently bound row whose multiplier is ~0."""
        st = self.state
        scale = 1.0 + float(np.abs(st.mu).max(initial=0.0))
        for l in reversed(self._bind_order):
            if st.binding[l] and st.mu[l] <= 1e-11 * scale:
                st.binding[l] = False
                st.mu[l] = 0.0
                self._bind_order.remove(l)
                return True
        return False

    def _apply(self, events) -> None:
        st = self.state
        for kind, idx, sgn in events:
            if kind == "escape":
                st.binding[idx] = False
                st.mu[idx] = 0.0
                if idx in self._bind_order:
                    self._bind_order.remove(idx)
            elif kind == "deactivate":
                st.active[idx] = False
                st.beta[idx] = 0.0
            elif kind == "bind":
                st.binding[idx] = True
                st.mu[idx] = 0.0
                st.ineq_residual[idx] = 0.0
                self._bind_order.append(idx)
            elif kind == "activate":
                st.active[idx] = True
                st.sign[idx] = sgn if sgn is not None else np.sign(st.sign[idx])
                st.beta[idx] = 0.0

    def _step(self, delta: float, direction: PathDirection) -> None:
        st = self.state
        if direction.active_idx.size:
            st.beta[direction.active_idx] -= delta * direction.dbeta_active
        if self.q:
            st.lam = st.lam - delta * direction.dlam
        if direction.binding_idx.size:
            st.mu[direction.binding_idx] -= delta * direction.dmu_binding
        st.rho = max(st.rho - delta, 0.0)

    def _stabilize(self):
        """Direction plus zero-length set changes until a positive step remains."""
        descs = []
        cap = 20 + 2 * (self.p + self.m)
        zero_len = max(self.opts.tie_tol, 1e-13 * max(1.0, self.rho_max))
        for _ in range(cap):
            direction = self._direction_with_recovery()
            delta, events = next_event(self.state, direction, self.opts)
            if events[0][0] == "terminal" or delta > zero_len:
                return direction, delta, events, descs
            self._apply(events)
            descs.append(_describe(events))
        if not self.perturbed and self.opts.allow_perturbation:
            raise _NeedsPerturbation("zero-length event loop did not settle")
        raise MaxIterations("zero-length event loop did not settle")

    # ---------------------------------------------------------------- recording

    def _record(self, kinks: List[Kink], event_desc: str) -> Kink:
        st = self.state
        orig = self.original
        active_pos = np.flatnonzero(np.abs(st.beta) > self.opts.zero_tol)
        binding_pos = orig.binding_rows(st.beta, tol=1e-10)
        df_pos = degrees_of_freedom(active_pos.size, orig.q, binding_pos.size)
        seg_df = degrees_of_freedom(int(st.active.sum()), self.q,
                                    int(st.binding.sum()))
        fit = FitResult(
            beta=st.beta.copy(), rho=st.rho, objective=0.0,
            kkt_stationarity=0.0, eq_violation=0.0, ineq_violation=0.0,
            complementarity=0.0, multipliers_eq=st.lam.copy(),
            multipliers_ineq=st.mu.copy(), iterations=0, solver="path")
        res = kkt_residual(orig, fit)
        kink = Kink(rho=st.rho, beta=st.beta.copy(), lam=st.lam.copy(),
                    mu=st.mu.copy(), sign=st.sign.copy(),
                    active=active_pos, binding=binding_pos, df=df_pos,
                    segment_df=seg_df, objective=objective(orig, st.beta, st.rho),
                    event=event_desc, kkt=res)
        if res.max() > self.opts.kkt_tol:
            self.meta["warnings"].append(
                f"kink at rho={st.rho:.6e} has KKT residual {res.max():.2e}")
        kinks.append(kink)
        return kink

    # --------------------------------------------------------------------- run

    def run(self) -> SolutionPath:
        self.initialize()
        kinks: List[Kink] = []
        rho_floor = 1e-14 * max(1.0, self.rho_max)

        if self.rho_max <= rho_floor:
            self.state.rho = 0.0
            self._refresh(terminal=True)
            self._record(kinks, "init;terminal")
            return self._finish(kinks, "rho_zero")

        direction, delta, events, descs = self._stabilize()
        self._record(kinks, ";".join(["init"] + descs))

        stall_count = 0
        termination = None
        while True:
            if len(kinks) >= self.opts.max_kinks:
                self.meta["warnings"].append("kink cap reached")
                termination = "stalled"
                break
            if events[0][0] == "terminal":
                self._step(self.state.rho, direction)
                self.state.rho = 0.0
                self._refresh(terminal=True)
                self._record(kinks, "terminal")
                termination = "rho_zero"
                break

            if delta < self.opts.stall_tol * self.rho_max:
                stall_count += 1
                if stall_count >= 2:
                    if not self.perturbed and self.opts.allow_perturbation:
                        raise _NeedsPerturbation("path stalled")
                    termination = "stalled"
                    self.meta["warnings"].append(
                        f"stalled at rho={self.state.rho:.6e}")
                    break
            else:
                stall_count = 0

            self._step(delta, direction)
            self._apply(events)
            self._refresh()
            applied = _describe(events)
            direction, delta, events, descs = self._stabilize()
            self._record(kinks, ";".join([applied] + descs))

            seg_df = kinks[-1].segment_df
            if seg_df >= self.n_rows:
                termination = "df_equals_n"
                break

        return self._finish(kinks, termination)

    def _finish(self, kinks, termination) -> SolutionPath:
        for msg in self.meta["warnings"]:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        self.meta["kink_count"] = len(kinks)
        self.meta["max_kkt"] = max((k.kkt.max() for k in kinks), default=0.0)
        return SolutionPath(kinks=kinks, rho_max=self.rho_max,
                            termination=termination, problem=self.original,
                            epsilon=self.epsilon, metadata=self.meta)


def _prepare_problem(problem: Problem, opts: PathOptions) -> Problem:
    try:
        return validate(problem)
    except NeedsRidge:
        ridged = Problem(y=problem.y, X=problem.X, A=problem.A, b=problem.b,
                         C=problem.C, d=problem.d, epsilon=opts.auto_epsilon)
        return validate(ridged)


def initialize_path(problem: Problem,
                    options: Optional[PathOptions] = None
                    ) -> Tuple[float, PathState]:
    """Solve the minimal-l1 LP and certify rho_max; returns the start state.

    Falls back to a quadratic-program initialization when the LP optimum is
    not unique (flagged in the state via solve_path metadata).
    """
    opts = options or PathOptions()
    prob = _prepare_problem(problem, opts)
    follower = _Follower(prob, opts)
    rho_max, state = follower.initialize()
    return rho_max, state


def solve_path(problem: Problem,
               options: Optional[PathOptions] = None) -> SolutionPath:
    """Follow the full solution path from rho_max down to rho = 0.

    When the design lacks full column rank (n < p) the solve transparently
    runs on the ridge-augmented problem; the epsilon used is reported in the
    path metadata.  Kinks report objectives and KKT residuals against the
    ridge-penalized objective of the original problem.
    """
    opts = options or PathOptions()
    prob = _prepare_problem(problem, opts)
    try:
        return _Follower(prob, opts).run()
    except _NeedsPerturbation:
        follower = _Follower(prob, opts, perturb=True)
        try:
            return follower.run()
        except _NeedsPerturbation as exc:
            raise SingularSystem(
                "path degenerate even after tie-breaking perturbation") from exc


def interpolate(path: SolutionPath, rho: float):
    """(beta, df, objective) at an arbitrary rho.

    Between kinks beta is linear, so linear interpolation is exact.  At or
    above rho_max the start point is returned; below the last kink the last
    kink's coefficients are returned (with a warning when the path did not
    run down to rho = 0).
    """
    if not path.kinks:
        raise InitializationFailed("empty path")
    rho = float(rho)
    kinks = path.kinks
    if rho >= kinks[0].rho:
        k = kinks[0]
        return k.beta.copy(), k.df, objective(path.problem, k.beta, rho)
    if rho <= kinks[-1].rho:
        k = kinks[-1]
        if path.termination != "rho_zero" and rho < k.rho:
            warnings.warn(
                f"rho={rho:.3e} is below the last computed kink "
                f"(termination: {path.termination})", RuntimeWarning)
        return k.beta.copy(), k.df, objective(path.problem, k.beta, rho)

    rhos = path.rhos
    hi = int(np.searchsorted(-rhos, -rho, side="right")) - 1
    hi = max(0, min(hi, len(kinks) - 2))
    upper, lower = kinks[hi], kinks[hi + 1]
    if abs(rho - upper.rho) <= 1e-15 * max(1.0, upper.rho):
        return upper.beta.copy(), upper.df, objective(path.problem, upper.beta, rho)
    theta = (upper.rho - rho) / (upper.rho - lower.rho)
    beta = upper.beta + theta * (lower.beta - upper.beta)
    return beta, upper.segment_df, objective(path.problem, beta, rho)
