"""Command-line interface.

Subcommands:
  solve      one-rho fit via qp / admm / path-interpolate
  path       full solution path export (path.csv + path.json)
  transform  generalized-lasso -> constrained-lasso reduction
  bench      benchmark grid (report.csv/json + figure data files)

Problems are described by a JSON manifest pointing at headerless CSV files
(comma separated, one vector entry per line, 17 significant digits on
output so values round-trip exactly).  Exit codes: 2 parse/IO errors,
3 validation errors, 4 solver failures; failures also emit a machine
readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .admm import AdmmOptions, solve_admm
from .convex import classo_qp
from .errors import ClassoError, SolverError, ValidationError
from .genlasso import GenLassoProblem, build_penalty, transform
from .harness import BenchmarkReport, Scenario, run_benchmark
from .model import (
    Problem,
    build_constraints,
    degrees_of_freedom,
    stack_constraints,
    validate,
)
from .path import PathOptions, initialize_path, solve_path

EXIT_OK = 0
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4


# ------------------------------------------------------------------- CSV I/O

def write_matrix(path, mat) -> None:
    """Headerless CSV, row-major, LF endings, 17 significant digits."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    with open(path, "w", newline="\n") as fh:
        for row in mat:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def write_vector(path, vec) -> None:
    vec = np.asarray(vec, dtype=float).ravel()
    with open(path, "w", newline="\n") as fh:
        for v in vec:
            fh.write(f"{v:.17g}\n")


def read_matrix(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        return np.zeros((0, 0))
    return np.array(rows, dtype=float)


def read_vector(path) -> np.ndarray:
    mat = read_matrix(path)
    if mat.size == 0:
        return np.zeros(0)
    return mat.ravel()


# ------------------------------------------------------------------ manifest

def load_manifest(path) -> dict:
    with open(path) as fh:
        manifest = json.load(fh)
    manifest["_dir"] = Path(path).resolve().parent
    return manifest


def _resolve(manifest, key) -> Optional[Path]:
    if key not in manifest or manifest[key] is None:
        return None
    p = Path(manifest[key])
    if not p.is_absolute():
        p = manifest["_dir"] / p
    if not p.exists():
        raise FileNotFoundError(f"manifest entry {key!r}: {p} does not exist")
    return p


def build_problem(manifest, epsilon_flag: Optional[float]) -> Problem:
    y = read_vector(_resolve(manifest, "y"))
    X = read_matrix(_resolve(manifest, "X"))
    p = X.shape[1]

    blocks = []
    A_path = _resolve(manifest, "A")
    if A_path is not None:
        A = read_matrix(A_path)
        if A.size:
            A = A.reshape(-1, p)
        b_path = _resolve(manifest, "b")
        b = read_vector(b_path) if b_path is not None else np.zeros(A.shape[0])
        blocks.append((A, b, np.zeros((0, p)), np.zeros(0)))
    C_path = _resolve(manifest, "C")
    if C_path is not None:
        C = read_matrix(C_path)
        if C.size:
            C = C.reshape(-1, p)
        d_path = _resolve(manifest, "d")
        d = read_vector(d_path) if d_path is not None else np.zeros(C.shape[0])
        blocks.append((np.zeros((0, p)), np.zeros(0), C, d))
    for entry in manifest.get("templates", []):
        kind = entry["kind"] if isinstance(entry, dict) else entry
        value = entry.get("value", 0.0) if isinstance(entry, dict) else 0.0
        blk = build_constraints(kind, p, value=value)
        blocks.append(tuple(blk))

    from .model import ConstraintBlock
    merged = stack_constraints(p, *[ConstraintBlock(*blk) for blk in blocks])

    epsilon = epsilon_flag
    if epsilon is None:
        epsilon = float(manifest.get("epsilon", 0.0))
    prob = Problem(y=y, X=X,
                   A=merged.A if merged.A.size else None,
                   b=merged.b if merged.A.size else None,
                   C=merged.C if merged.C.size else None,
                   d=merged.d if merged.C.size else None,
                   epsilon=epsilon)
    return prob


def _output_dir(manifest, args) -> Path:
    out = getattr(args, "output", None) or manifest.get("output_dir") or "."
    out = Path(out)
    if not out.is_absolute():
        out = manifest["_dir"] / out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _path_options(args) -> PathOptions:
    kw = {}
    if getattr(args, "kkt_tol", None) is not None:
        kw["kkt_tol"] = args.kkt_tol
    if getattr(args, "epsilon", None) is not None:
        kw["auto_epsilon"] = args.epsilon
    return PathOptions(**kw)


def _auto_ridge(prob: Problem, args) -> Problem:
    """Apply the 1e-4 default ridge when the design needs one and no
    epsilon was given (manifest or flag)."""
    from .errors import NeedsRidge
    try:
        validate(prob)
        return prob
    except NeedsRidge:
        if prob.epsilon > 0:
            raise
        eps = 1e-4 if getattr(args, "epsilon", None) is None else args.epsilon
        return Problem(y=prob.y, X=prob.X,
                       A=prob.A if prob.q else None,
                       b=prob.b if prob.q else None,
                       C=prob.C if prob.m else None,
                       d=prob.d if prob.m else None, epsilon=eps)


def _echo_config(args, extra=None) -> dict:
    cfg = {k: v for k, v in vars(args).items()
           if not k.startswith("_") and k != "func" and not callable(v)}
    cfg["version"] = __version__
    if extra:
        cfg.update(extra)
    return cfg


# ------------------------------------------------------------------ commands

def cmd_solve(args) -> int:
    manifest = load_manifest(args.manifest)
    prob = _auto_ridge(build_problem(manifest, args.epsilon), args)
    validate(prob, rank_tol=args.rank_tol if args.rank_tol else 1e-10)
    out = _output_dir(manifest, args)

    rho = args.rho
    rho_max = None
    t_init = 0.0
    if args.rho_scale is not None:
        t0 = time.perf_counter()
        rho_max, _ = initialize_path(prob, _path_options(args))
        t_init = time.perf_counter() - t0
        rho = args.rho_scale * rho_max
    if rho is None:
        raise ValidationError("one of --rho or --rho-scale is required")

    t0 = time.perf_counter()
    if args.algorithm == "qp":
        fit = classo_qp(prob, rho, tol=args.tol)
        support_tol = 1e-10
    elif args.algorithm == "admm":
        fit = solve_admm(prob, rho, AdmmOptions(
            tau=args.tau, abs_tol=args.abs_tol, rel_tol=args.rel_tol,
            max_iter=args.max_iter))
        support_tol = fit.diagnostics["support_tol"]
    elif args.algorithm == "path-interpolate":
        path = solve_path(prob, _path_options(args))
        rho_max = path.rho_max
        beta, df, obj = path.interpolate(rho)
        from .model import FitResult, kkt_residual
        nearest = min(path.kinks, key=lambda k: abs(k.rho - rho))
        fit = FitResult(beta=beta, rho=rho, objective=obj,
                        kkt_stationarity=0.0, eq_violation=0.0,
                        ineq_violation=0.0, complementarity=0.0,
                        multipliers_eq=nearest.lam, multipliers_ineq=nearest.mu,
                        iterations=len(path.kinks), solver="path-interpolate")
        support_tol = 1e-10
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown algorithm {args.algorithm}")
    t_solve = time.perf_counter() - t0

    from .model import kkt_residual
    res = kkt_residual(prob, fit, zero_tol=support_tol)
    active = int(np.sum(np.abs(fit.beta) > support_tol))
    binding = prob.binding_rows(fit.beta, tol=max(1e-10, fit.ineq_violation)).size
    df = degrees_of_freedom(active, prob.q, binding)

    write_vector(out / "beta.csv", fit.beta)
    payload = {
        "solver": fit.solver,
        "rho": rho,
        "rho_max": rho_max,
        "objective": fit.objective,
        "df": df,
        "kkt": {
            "stationarity": res.stationarity,
            "eq_violation": res.eq_violation,
            "ineq_violation": res.ineq_violation,
            "complementarity": res.complementarity,
            "subgradient_bound": res.subgradient_bound,
        },
        "iterations": fit.iterations,
        "epsilon": prob.epsilon,
        "timings": {"initialize_s": t_init, "solve_s": t_solve},
        "config": _echo_config(args),
    }
    with open(out / "fit.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"wrote {out / 'fit.json'} and {out / 'beta.csv'}")
    return EXIT_OK


def cmd_path(args) -> int:
    manifest = load_manifest(args.manifest)
    prob = _auto_ridge(build_problem(manifest, args.epsilon), args)
    validate(prob, rank_tol=args.rank_tol if args.rank_tol else 1e-10)
    out = _output_dir(manifest, args)

    t0 = time.perf_counter()
    path = solve_path(prob, _path_options(args))
    t_solve = time.perf_counter() - t0

    csv_path = out / "path.csv"
    with open(csv_path, "w", newline="\n") as fh:
        for k in path.kinks:
            cells = [f"{k.rho:.17g}", str(k.df), f"{k.objective:.17g}", k.event]
            cells += [f"{v:.17g}" for v in k.beta]
            fh.write(",".join(cells) + "\n")

    payload = {
        "rho_max": path.rho_max,
        "kink_count": len(path.kinks),
        "termination": path.termination,
        "epsilon": path.epsilon,
        "kkt_per_kink": [k.kkt.max() for k in path.kinks],
        "max_kkt": path.metadata.get("max_kkt"),
        "init_fallback": path.metadata.get("init_fallback"),
        "perturbed_rhs": path.metadata.get("perturbed_d"),
        "warnings": path.metadata.get("warnings", []),
        "timings": {"solve_s": t_solve},
        "config": _echo_config(args),
    }
    with open(out / "path.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"wrote {csv_path} and {out / 'path.json'} "
          f"({len(path.kinks)} kinks, termination: {path.termination})")
    return EXIT_OK


def cmd_transform(args) -> int:
    manifest = load_manifest(args.manifest)
    y = read_vector(_resolve(manifest, "y"))
    X = read_matrix(_resolve(manifest, "X"))
    if "D" in manifest and manifest["D"] is not None:
        D = read_matrix(_resolve(manifest, "D"))
    elif "penalty" in manifest:
        D = build_penalty(manifest["penalty"], X.shape[1])
    else:
        raise ValidationError("transform manifest needs a D file or a penalty kind")
    out = _output_dir(manifest, args)

    t = transform(GenLassoProblem(y=y, X=X, D=D),
                  rank_tol=args.rank_tol if args.rank_tol else 1e-10)

    write_vector(out / "y_tilde.csv", t.y_tilde)
    write_matrix(out / "X_tilde.csv", t.X_tilde)
    write_matrix(out / "A.csv", t.constraint_A)
    write_vector(out / "b.csv", t.constraint_b)
    payload = {
        "rank": t.rank,
        "case": t.case,
        "alpha_dim": t.alpha_dim,
        "constraint_rows": int(t.constraint_A.shape[0]),
        "back_matrix": t.back_matrix.tolist(),
        "back_offset": t.back_offset.tolist(),
        "U2": t.U2.tolist(),
        "config": _echo_config(args),
    }
    with open(out / "transform.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"wrote transform outputs to {out} (rank {t.rank}, case {t.case})")
    return EXIT_OK


def cmd_bench(args) -> int:
    with open(args.config) as fh:
        config = json.load(fh)
    out = Path(config.get("output_dir", "."))
    if not out.is_absolute():
        out = Path(args.config).resolve().parent / out
    out.mkdir(parents=True, exist_ok=True)

    scenarios = []
    sizes = config.get("sizes", [[50, 100], [100, 500]])
    for kind in config.get("scenarios", ["sum_to_zero", "nonnegative"]):
        for n, p in sizes:
            scenarios.append(Scenario(kind=kind, n=int(n), p=int(p),
                                      seed=int(config.get("seed", 0)),
                                      noise_sd=float(config.get("noise_sd", 1.0))))
    report = run_benchmark(
        scenarios,
        algorithms=config.get("algorithms", ["qp", "admm", "path"]),
        rho_scales=config.get("rho_scales", [0.2, 0.4, 0.6, 0.8]),
        replicates=int(config.get("replicates", 20)),
        epsilon=float(config.get("epsilon", 1e-4)))

    _write_report(report, out)
    print(f"wrote benchmark report to {out}")
    return EXIT_OK


def _write_report(report: BenchmarkReport, out: Path) -> None:
    records = report.as_records()
    cols = BenchmarkReport.COLUMNS
    with open(out / "report.csv", "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for rec in records:
            fh.write(",".join(_cell(rec[c]) for c in cols) + "\n")
    with open(out / "report.json", "w") as fh:
        json.dump({"config": report.config, "rows": records}, fh, indent=2)
    # figure analogs: runtime-vs-size (figure2) and error-vs-rho (figure5)
    with open(out / "figure2.csv", "w", newline="\n") as fh:
        fh.write("scenario,algorithm,n,p,rho_scale,runtime_mean,runtime_se,"
                 "time_per_kink_mean\n")
        for rec in records:
            fh.write(",".join(_cell(rec[c]) for c in
                              ("scenario", "algorithm", "n", "p", "rho_scale",
                               "runtime_mean", "runtime_se",
                               "time_per_kink_mean")) + "\n")
    with open(out / "figure5.csv", "w", newline="\n") as fh:
        fh.write("scenario,algorithm,n,p,rho_scale,error_vs_qp_pct_mean,"
                 "error_vs_qp_pct_se\n")
        for rec in records:
            if rec["algorithm"] == "qp":
                continue
            fh.write(",".join(_cell(rec[c]) for c in
                              ("scenario", "algorithm", "n", "p", "rho_scale",
                               "error_vs_qp_pct_mean", "error_vs_qp_pct_se"))
                     + "\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


# --------------------------------------------------------------------- main

def _add_common_solver_flags(sp) -> None:
    sp.add_argument("--epsilon", type=float, default=None,
                    help="ridge weight (default: 1e-4 when n < p, else 0)")
    sp.add_argument("--rank-tol", type=float, default=None,
                    help="relative singular-value cutoff for rank decisions")
    sp.add_argument("--kkt-tol", type=float, default=None,
                    help="per-kink KKT verification threshold (path)")
    sp.add_argument("--output", default=None,
                    help="output directory (overrides the manifest)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="classo",
        description="Constrained lasso solvers: QP, ADMM, and an exact "
                    "solution path, plus the generalized-lasso reduction.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve at one rho")
    sp.add_argument("manifest")
    sp.add_argument("--algorithm", choices=("qp", "admm", "path-interpolate"),
                    default="qp")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--rho", type=float, default=None)
    group.add_argument("--rho-scale", type=float, default=None,
                       help="solve at rho = rho_scale * rho_max")
    sp.add_argument("--tol", type=float, default=1e-8, help="QP KKT tolerance")
    sp.add_argument("--tau", type=float, default=None, help="ADMM step (default 1/n)")
    sp.add_argument("--abs-tol", type=float, default=1e-4)
    sp.add_argument("--rel-tol", type=float, default=1e-4)
    sp.add_argument("--max-iter", type=int, default=100_000)
    _add_common_solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("path", help="follow the full solution path")
    sp.add_argument("manifest")
    _add_common_solver_flags(sp)
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("transform",
                        help="generalized lasso -> constrained lasso files")
    sp.add_argument("manifest")
    sp.add_argument("--rank-tol", type=float, default=None)
    sp.add_argument("--output", default=None)
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("bench", help="run the benchmark grid")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        _emit_error(exc, EXIT_IO)
        return EXIT_IO
    except ValidationError as exc:
        _emit_error(exc, EXIT_VALIDATION)
        return EXIT_VALIDATION
    except SolverError as exc:
        _emit_error(exc, EXIT_SOLVER)
        return EXIT_SOLVER
    except ClassoError as exc:
        _emit_error(exc, EXIT_SOLVER)
        return EXIT_SOLVER


def _emit_error(exc, code) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc),
               "exit_code": code}
    print(json.dumps(payload), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
