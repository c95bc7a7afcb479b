"""Synthetic scenarios and a benchmark runner.

Scenarios mirror the two simulation designs used throughout the solver
comparisons (sum-to-zero and nonnegative coefficients, iid standard normal
covariates, unit-variance noise) plus an isotonic trend series and a
piecewise-constant fused signal for the generalized-lasso checks.

Randomness comes from numpy's PCG64 generator seeded per scenario, with
normal variates drawn by ``standard_normal`` (ziggurat); objective columns
of a benchmark report are therefore bitwise reproducible for fixed seeds on
a fixed numpy version.
"""

from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .admm import AdmmOptions, solve_admm
from .convex import classo_qp
from .errors import InvalidScenario
from .model import Problem, build_constraints, stack_constraints
from .path import PathOptions, initialize_path, solve_path

SCENARIO_KINDS = ("sum_to_zero", "nonnegative", "isotonic_signal", "fused_signal")


@dataclass(frozen=True)
class Scenario:
    """One synthetic-data configuration."""

    kind: str
    n: int
    p: int
    seed: int = 0
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise InvalidScenario(f"unknown scenario kind {self.kind!r}")
        if self.n < 1 or self.p < 1:
            raise InvalidScenario("n and p must be >= 1")
        if self.kind == "sum_to_zero" and self.p % 4 != 0:
            raise InvalidScenario("sum_to_zero needs p divisible by 4 "
                                  "(the 25/25/50 split)")
        if self.kind == "nonnegative" and self.p < 10:
            raise InvalidScenario("nonnegative scenario needs p >= 10")
        if self.kind in ("isotonic_signal", "fused_signal") and self.n != self.p:
            raise InvalidScenario(f"{self.kind} uses X = I and needs n == p")


def true_beta(scenario: Scenario) -> np.ndarray:
    p = scenario.p
    if scenario.kind == "sum_to_zero":
        quarter = p // 4
        beta = np.zeros(p)
        beta[:quarter] = 1.0
        beta[quarter:2 * quarter] = -1.0
        return beta
    if scenario.kind == "nonnegative":
        beta = np.zeros(p)
        beta[:10] = np.arange(1, 11, dtype=float)
        return beta
    if scenario.kind == "isotonic_signal":
        # monotone step trend spanning [-1, 2]
        levels = np.array([-1.0, -0.5, 0.0, 0.75, 1.5, 2.0])
        reps = np.full(levels.size, p // levels.size)
        reps[: p % levels.size] += 1
        return np.repeat(levels, reps)
    if scenario.kind == "fused_signal":
        # sparse piecewise-constant blocks
        beta = np.zeros(p)
        beta[p // 6: p // 3] = 2.0
        beta[p // 2: p // 2 + max(p // 10, 1)] = -1.5
        beta[-max(p // 8, 1):] = 1.0
        return beta
    raise InvalidScenario(scenario.kind)


def generate(scenario: Scenario) -> Tuple[Problem, np.ndarray]:
    """Draw (Problem, true_beta) for a scenario, deterministically in the seed."""
    rng = np.random.default_rng(scenario.seed)
    beta = true_beta(scenario)
    n, p = scenario.n, scenario.p
    if scenario.kind in ("isotonic_signal", "fused_signal"):
        X = np.eye(p)
    else:
        X = rng.standard_normal((n, p))
    noise = scenario.noise_sd * rng.standard_normal(n)
    y = X @ beta + noise

    if scenario.kind == "sum_to_zero":
        blk = build_constraints("zero_sum", p)
    elif scenario.kind == "nonnegative":
        blk = build_constraints("nonnegative", p)
    elif scenario.kind == "isotonic_signal":
        blk = build_constraints("monotone_decreasing_differences", p)
    else:
        blk = stack_constraints(p)  # fused_signal: penalty handled via D
    problem = Problem(y=y, X=X,
                      A=blk.A if blk.A.size else None,
                      b=blk.b if blk.A.size else None,
                      C=blk.C if blk.C.size else None,
                      d=blk.d if blk.C.size else None)
    return problem, beta


@dataclass
class BenchmarkRow:
    scenario: str
    algorithm: str
    n: int
    p: int
    rho_scale: float
    replicates: int
    runtime_mean: float
    runtime_sd: float
    runtime_se: float
    objective_mean: float
    error_vs_qp_pct_mean: Optional[float]
    error_vs_qp_pct_se: Optional[float]
    kink_count_mean: Optional[float]
    time_per_kink_mean: Optional[float]
    failures: int = 0


@dataclass
class BenchmarkReport:
    rows: List[BenchmarkRow]
    config: dict = field(default_factory=dict)

    COLUMNS = ("scenario", "algorithm", "n", "p", "rho_scale", "replicates",
               "runtime_mean", "runtime_sd", "runtime_se", "objective_mean",
               "error_vs_qp_pct_mean", "error_vs_qp_pct_se",
               "kink_count_mean", "time_per_kink_mean", "failures")

    def as_records(self) -> List[dict]:
        return [{c: getattr(row, c) for c in self.COLUMNS} for row in self.rows]


def _mean_sd_se(values: Sequence[Optional[float]]):
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan"), float("nan")
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, sd, sd / np.sqrt(arr.size)


def _run_replicate(scen: Scenario, rep: int, algorithms, rho_scales,
                   epsilon, qp_tol, admm_opts, path_opts):
    """All solves for one replicate; returns a list of (cell_key, record)."""
    out = []
    rep_scen = Scenario(kind=scen.kind, n=scen.n, p=scen.p,
                        seed=scen.seed + rep, noise_sd=scen.noise_sd)
    problem, _ = generate(rep_scen)
    if problem.n < problem.p or scen.kind == "fused_signal":
        problem = Problem(y=problem.y, X=problem.X, A=problem.A, b=problem.b,
                          C=problem.C, d=problem.d, epsilon=epsilon)
    try:
        rho_max, _ = initialize_path(problem, path_opts)
    except Exception as exc:
        for alg in algorithms:
            for scale in rho_scales:
                out.append(((scen.kind, alg, scale), {"failed": f"rho_max: {exc}"}))
        return out

    qp_obj = {}
    if "qp" in algorithms:
        for scale in rho_scales:
            t0 = time.perf_counter()
            try:
                fit = classo_qp(problem, scale * rho_max, tol=qp_tol)
                dt = time.perf_counter() - t0
                qp_obj[scale] = fit.objective
                out.append(((scen.kind, "qp", scale),
                            {"runtime": dt, "objective": fit.objective,
                             "error": 0.0}))
            except Exception as exc:
                out.append(((scen.kind, "qp", scale), {"failed": str(exc)}))

    if "admm" in algorithms:
        for scale in rho_scales:
            t0 = time.perf_counter()
            try:
                fit = solve_admm(problem, scale * rho_max, admm_opts)
                dt = time.perf_counter() - t0
                err = None
                if scale in qp_obj:
                    err = 100.0 * (fit.objective - qp_obj[scale]) / abs(qp_obj[scale])
                out.append(((scen.kind, "admm", scale),
                            {"runtime": dt, "objective": fit.objective,
                             "error": err}))
            except Exception as exc:
                out.append(((scen.kind, "admm", scale), {"failed": str(exc)}))

    if "path" in algorithms:
        t0 = time.perf_counter()
        try:
            path = solve_path(problem, path_opts)
            dt = time.perf_counter() - t0
            kinks = len(path.kinks)
            for scale in rho_scales:
                _, _, obj = path.interpolate(scale * rho_max)
                err = None
                if scale in qp_obj:
                    err = 100.0 * (obj - qp_obj[scale]) / abs(qp_obj[scale])
                out.append(((scen.kind, "path", scale),
                            {"runtime": dt, "objective": obj, "error": err,
                             "kinks": kinks, "per_kink": dt / max(kinks, 1)}))
        except Exception as exc:
            for scale in rho_scales:
                out.append(((scen.kind, "path", scale), {"failed": str(exc)}))
    return out


def run_benchmark(scenarios: Sequence[Scenario],
                  algorithms: Sequence[str] = ("qp", "admm", "path"),
                  rho_scales: Sequence[float] = (0.2, 0.4, 0.6, 0.8),
                  replicates: int = 20,
                  epsilon: float = 1e-4,
                  qp_tol: float = 1e-8,
                  admm_options: Optional[AdmmOptions] = None,
                  path_options: Optional[PathOptions] = None) -> BenchmarkReport:
    """Time every (scenario, algorithm, rho_scale) cell over replicates.

    rho is resolved per replicate as rho_scale * rho_max.  Relative errors
    are reported against the QP objective, 100 * (obj - obj_qp) / |obj_qp|;
    without "qp" among the algorithms the error columns are omitted and a
    warning is emitted.  Path runtime is recorded once per replicate and
    additionally amortized over the kink count.  Individual solve failures
    are counted per cell instead of aborting the run.

    Replicates run concurrently when CLASSO_THREADS > 1 (each solve owns its
    state and is timed on its own thread with a monotonic clock).
    """
    algorithms = list(algorithms)
    if "qp" not in algorithms:
        warnings.warn("benchmark without the qp baseline: error columns omitted",
                      RuntimeWarning)
    admm_opts = admm_options or AdmmOptions()
    path_opts = path_options or PathOptions()
    threads = max(1, int(os.environ.get("CLASSO_THREADS", "1")))

    jobs = [(scen, rep) for scen in scenarios for rep in range(replicates)]
    results = []
    if threads == 1:
        for scen, rep in jobs:
            results.append(_run_replicate(scen, rep, algorithms, rho_scales,
                                          epsilon, qp_tol, admm_opts, path_opts))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(_run_replicate, scen, rep, algorithms,
                                rho_scales, epsilon, qp_tol, admm_opts,
                                path_opts) for scen, rep in jobs]
            results = [f.result() for f in futs]

    cells: dict = {}
    for chunk in results:
        for key, rec in chunk:
            cells.setdefault(key, []).append(rec)

    rows = []
    for scen in scenarios:
        for alg in algorithms:
            for scale in rho_scales:
                entries = cells.get((scen.kind, alg, scale), [])
                good = [e for e in entries if "failed" not in e]
                failures = len(entries) - len(good)
                rt_mean, rt_sd, rt_se = _mean_sd_se([e["runtime"] for e in good])
                obj_mean, _, _ = _mean_sd_se([e["objective"] for e in good])
                errs = [e.get("error") for e in good]
                if "qp" in algorithms and any(e is not None for e in errs):
                    err_mean, _, err_se = _mean_sd_se(errs)
                else:
                    err_mean, err_se = None, None
                kink_mean = None
                per_kink = None
                if alg == "path" and good:
                    kink_mean, _, _ = _mean_sd_se([e.get("kinks") for e in good])
                    per_kink, _, _ = _mean_sd_se([e.get("per_kink") for e in good])
                rows.append(BenchmarkRow(
                    scenario=scen.kind, algorithm=alg, n=scen.n, p=scen.p,
                    rho_scale=float(scale), replicates=len(entries),
                    runtime_mean=rt_mean, runtime_sd=rt_sd, runtime_se=rt_se,
                    objective_mean=obj_mean,
                    error_vs_qp_pct_mean=err_mean, error_vs_qp_pct_se=err_se,
                    kink_count_mean=kink_mean, time_per_kink_mean=per_kink,
                    failures=failures))
    config = {
        "scenarios": [{"kind": s.kind, "n": s.n, "p": s.p, "seed": s.seed,
                       "noise_sd": s.noise_sd} for s in scenarios],
        "algorithms": algorithms,
        "rho_scales": [float(s) for s in rho_scales],
        "replicates": replicates,
        "epsilon": epsilon,
        "qp_tol": qp_tol,
        "threads": threads,
    }
    return BenchmarkReport(rows=rows, config=config)
