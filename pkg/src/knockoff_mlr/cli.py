"""Command line interface.

Subcommands cover the full pipeline: knockoff construction, feature
statistics, the selection filter, an end-to-end pipeline, the simulation
driver, and trace diagnostics.  Data errors print a JSON object on stderr
and exit 1; usage errors exit 2 (argparse); success exits 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .dataio import (
    read_matrix_csv,
    save_trace_npz,
    load_trace_npz,
    write_matrix_csv,
    write_results_jsonl,
)
from .diagnostics import decay_check, sign_cov
from .errors import DataError, KnockoffMlrError
from .filters import threshold
from .gibbs_mlr import GibbsConfig, mlr_fixed_x, mlr_model_x
from .knockoff_gen import SMatrixSpec, build_knockoffs
from .lasso_stats import lcd_statistic, lsm_statistic
from .model_core import BasisSpec, Dataset, KnockoffModel, PriorConfig, mask
from .sim_harness import (
    DesignSpec,
    ExperimentConfig,
    SignalSpec,
    run_experiment,
)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _threads_default() -> int:
    env = os.environ.get("KNOCKOFF_MLR_THREADS", "")
    if env.isdigit() and int(env) > 0:
        return int(env)
    return os.cpu_count() or 1


def _read_vector(path: str, header: bool | None = None) -> np.ndarray:
    arr = read_matrix_csv(path, header=header)
    if arr.shape[1] != 1:
        raise DataError(f"{path}: expected a single-column vector, got {arr.shape[1]} columns")
    return arr[:, 0]


def _header_flag(args) -> bool | None:
    return True if getattr(args, "header", False) else None


def _scale_columns(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=0)
    if (norms <= 0).any():
        raise DataError("design has a zero-norm column", col=int(np.argmax(norms <= 0)))
    return x / norms


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_knockoffs(args) -> int:
    hdr = _header_flag(args)
    x = read_matrix_csv(args.x, header=hdr)
    if args.kind == "fixed_x":
        x = _scale_columns(x)
    sigma = read_matrix_csv(args.sigma, header=hdr) if args.sigma else None
    model = build_knockoffs(
        x, args.kind, SMatrixSpec(method=args.s_method), sigma=sigma, seed=args.seed
    )
    write_matrix_csv(args.out, model.x_tilde)
    if args.out_s:
        write_matrix_csv(args.out_s, model.s_diag())
    if args.out_x:
        write_matrix_csv(args.out_x, x)
    _emit(
        {
            "command": "knockoffs",
            "kind": args.kind,
            "s_method": args.s_method,
            "n": int(x.shape[0]),
            "p": int(x.shape[1]),
            "s": [float(v) for v in model.s_diag()],
            "out": args.out,
        }
    )
    return 0


def _recovered_model(x: np.ndarray, x_tilde: np.ndarray, kind: str) -> KnockoffModel:
    """Reconstruct the knockoff metadata from the matrices themselves.

    Fixed-X recovery is exact (the Gram identities pin sigma and S); the
    model-X masked view never consults sigma or S, so empirical stand-ins
    are stored there.
    """
    if kind == "fixed_x":
        sigma = x.T @ x
        s = np.clip(np.diag(sigma - x.T @ x_tilde), 1e-12, None)
    else:
        sigma = x.T @ x / max(x.shape[0], 1)
        s = np.ones(x.shape[1])
    return KnockoffModel(x_tilde=x_tilde, sigma=sigma, s=s, kind=kind)


def _compute_stat(args, x, x_tilde, y):
    if args.method in ("lcd", "lsm"):
        rule = "fixed_x" if args.kind == "fixed_x" else "cv"
        if args.method == "lcd":
            return (
                lcd_statistic(
                    x, x_tilde, y, rule=rule, seed=args.seed, response_kind=args.response
                ),
                None,
            )
        return (
            lsm_statistic(x, x_tilde, y, seed=args.seed, response_kind=args.response),
            None,
        )
    model = _recovered_model(x, x_tilde, args.kind)
    dataset = Dataset(x=x, y=y, response_kind=args.response, standardize=False)
    masked = mask(dataset, model, seed=args.seed)
    prior = PriorConfig(basis=BasisSpec(kind=args.basis, knots=args.knots))
    config = GibbsConfig(
        n_sample=args.n_sample, burn_in=args.burn_in, chains=args.chains, seed=args.seed
    )
    if args.kind == "fixed_x":
        return mlr_fixed_x(masked, prior, config)
    return mlr_model_x(masked, prior, config)


def _cmd_stats(args) -> int:
    hdr = _header_flag(args)
    x = read_matrix_csv(args.x, header=hdr)
    x_tilde = read_matrix_csv(args.xtilde, header=hdr)
    y = _read_vector(args.y, header=hdr)
    if x.shape != x_tilde.shape:
        raise DataError("x and xtilde shapes differ")
    if y.shape[0] != x.shape[0]:
        raise DataError("y length does not match x rows")
    stat, trace = _compute_stat(args, x, x_tilde, y)
    write_matrix_csv(args.out, stat.w)
    if args.save_trace:
        if trace is None:
            raise DataError("--save-trace only applies to the mlr statistic")
        save_trace_npz(args.save_trace, trace)
    _emit(
        {
            "command": "stats",
            "method": args.method,
            "p": int(stat.w.shape[0]),
            "out": args.out,
        }
    )
    return 0


def _cmd_filter(args) -> int:
    w = _read_vector(args.w, header=_header_flag(args))
    result = threshold(w, args.q)
    selected = [int(j) + 1 for j in result.rejected]  # 1-based for file output
    if args.out:
        write_matrix_csv(args.out, np.asarray(selected, dtype=np.float64))
    _emit(
        {
            "command": "filter",
            "q": args.q,
            "threshold": result.threshold if np.isfinite(result.threshold) else "inf",
            "n_rej": result.n_rejected,
            "selected": selected,
        }
    )
    return 0


def _cmd_pipeline(args) -> int:
    hdr = _header_flag(args)
    x = read_matrix_csv(args.x, header=hdr)
    y = _read_vector(args.y, header=hdr)
    if args.kind == "fixed_x":
        x = _scale_columns(x)
    sigma = read_matrix_csv(args.sigma, header=hdr) if args.sigma else None
    model = build_knockoffs(
        x, args.kind, SMatrixSpec(method=args.s_method), sigma=sigma, seed=args.seed
    )
    stat, _ = _compute_stat(args, x, model.x_tilde, y)
    result = threshold(stat.w, args.q)
    selected = [int(j) + 1 for j in result.rejected]
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        write_matrix_csv(os.path.join(args.out_dir, "x_tilde.csv"), model.x_tilde)
        write_matrix_csv(os.path.join(args.out_dir, "w.csv"), stat.w)
        write_matrix_csv(
            os.path.join(args.out_dir, "selected.csv"), np.asarray(selected, dtype=np.float64)
        )
    _emit(
        {
            "command": "pipeline",
            "kind": args.kind,
            "method": args.method,
            "q": args.q,
            "threshold": result.threshold if np.isfinite(result.threshold) else "inf",
            "n_rej": result.n_rejected,
            "selected": selected,
        }
    )
    return 0


def _experiment_from_dict(spec: dict) -> ExperimentConfig:
    spec = dict(spec)
    design = DesignSpec(**spec.pop("design", {}))
    signal = SignalSpec(**spec.pop("signal", {}))
    gibbs = GibbsConfig(**spec.pop("gibbs", {}))
    prior_spec = spec.pop("prior", {})
    basis = BasisSpec(**prior_spec.get("basis", {}))
    prior = PriorConfig(basis=basis)
    stats = tuple(spec.pop("statistics", ("mlr", "lcd")))
    try:
        return ExperimentConfig(
            design=design, signal=signal, gibbs=gibbs, prior=prior, statistics=stats, **spec
        )
    except TypeError as exc:
        raise DataError(f"bad experiment config: {exc}") from None


def _cmd_simulate(args) -> int:
    with open(args.config) as fh:
        spec = json.load(fh)
    cfg = _experiment_from_dict(spec)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.q is not None:
        overrides["q"] = args.q
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    result = run_experiment(cfg, n_jobs=args.threads, with_timings=args.timings)
    write_results_jsonl(args.out, result.records)
    summary = {
        "command": "simulate",
        "n_reps": cfg.n_reps,
        "n_records": len(result.records),
        "n_failures": len(result.failures),
        "out": args.out,
    }
    if result.failures:
        summary["failures"] = [{"rep": r, "error": m} for r, m in result.failures[:10]]
    _emit(summary)
    return 0 if not result.failures else 1


def _cmd_diagnose(args) -> int:
    trace = load_trace_npz(args.trace)
    cov = sign_cov(trace)
    report = decay_check(cov, c=args.c, rho=args.rho)
    off = np.abs(cov - np.diag(np.diag(cov)))
    _emit(
        {
            "command": "diagnose",
            "n_draws": int(trace.n_kept),
            "n_units": int(cov.shape[0]),
            "max_offdiag": float(off.max()) if cov.shape[0] > 1 else 0.0,
            "decay_passed": bool(report.passed),
            "max_ratio": report.max_ratio,
            "worst_pair": list(report.worst_pair),
        }
    )
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knockoff-mlr",
        description="Controlled feature selection with knockoffs and masked likelihood ratios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, q_default=None, seed_default=0):
        # every subcommand accepts the trio; unused values are ignored
        p.add_argument("--seed", type=int, default=seed_default, help="deterministic seed")
        p.add_argument("--threads", type=int, default=_threads_default(),
                       help="worker count (default: KNOCKOFF_MLR_THREADS or cpu count)")
        p.add_argument("--q", type=float, default=q_default, help="target FDR level")

    def add_header(p):
        p.add_argument("--header", action="store_true",
                       help="treat the first CSV row as a header (default: sniff)")

    pk = sub.add_parser("knockoffs", help="construct a knockoff matrix")
    pk.add_argument("--x", required=True, help="design CSV (fixed-X designs are column-scaled)")
    pk.add_argument("--kind", choices=("fixed_x", "model_x"), required=True)
    pk.add_argument("--s-method", choices=("mvr", "equicorrelated"), default="mvr")
    pk.add_argument("--sigma", help="feature covariance CSV (model-X only)")
    pk.add_argument("--out", required=True, help="output CSV for the knockoff matrix")
    pk.add_argument("--out-s", help="output CSV for the S diagonal")
    pk.add_argument("--out-x", help="optionally write the (possibly scaled) design")
    add_header(pk)
    add_common(pk)
    pk.set_defaults(func=_cmd_knockoffs)

    def add_stat_args(p, q_default=None):
        p.add_argument("--kind", choices=("fixed_x", "model_x"), required=True)
        p.add_argument("--method", choices=("mlr", "lcd", "lsm"), default="mlr")
        p.add_argument("--response", choices=("continuous", "binary"), default="continuous")
        p.add_argument("--basis", choices=("identity", "cubic_spline"), default="identity")
        p.add_argument("--knots", type=int, default=1)
        p.add_argument("--n-sample", type=int, default=2000)
        p.add_argument("--burn-in", type=int, default=500)
        p.add_argument("--chains", type=int, default=2)
        add_header(p)
        add_common(p, q_default=q_default)

    ps = sub.add_parser("stats", help="compute a feature statistic vector")
    ps.add_argument("--x", required=True)
    ps.add_argument("--xtilde", required=True)
    ps.add_argument("--y", required=True)
    ps.add_argument("--out", required=True, help="output CSV for W")
    ps.add_argument("--save-trace", help="save the Gibbs trace (mlr only) as npz")
    add_stat_args(ps)
    ps.set_defaults(func=_cmd_stats)

    pf = sub.add_parser("filter", help="apply the sequential selection filter")
    pf.add_argument("--w", required=True, help="statistic CSV (one column)")
    pf.add_argument("--out", help="write selected indices (1-based) as CSV")
    add_header(pf)
    add_common(pf, q_default=0.1)
    pf.set_defaults(func=_cmd_filter)

    pp = sub.add_parser("pipeline", help="knockoffs + statistic + filter in one go")
    pp.add_argument("--x", required=True)
    pp.add_argument("--y", required=True)
    pp.add_argument("--sigma", help="feature covariance CSV (model-X only)")
    pp.add_argument("--s-method", choices=("mvr", "equicorrelated"), default="mvr")
    pp.add_argument("--out-dir", help="directory for x_tilde.csv, w.csv, selected.csv")
    add_stat_args(pp, q_default=0.1)
    pp.set_defaults(func=_cmd_pipeline)

    pm = sub.add_parser("simulate", help="run a simulation study from a JSON config")
    pm.add_argument("--config", required=True, help="experiment config JSON")
    pm.add_argument("--out", required=True, help="output JSONL path")
    pm.add_argument(
        "--timings",
        action="store_true",
        help="record per-statistic runtimes (off keeps output byte-reproducible)",
    )
    pm.add_argument("--seed", type=int, default=None, help="override the config seed")
    pm.add_argument("--threads", type=int, default=_threads_default())
    pm.add_argument("--q", type=float, default=None, help="override the config FDR level")
    pm.set_defaults(func=_cmd_simulate)

    pd = sub.add_parser("diagnose", help="local dependence diagnostics for a saved trace")
    pd.add_argument("--trace", required=True, help="npz trace from stats --save-trace")
    pd.add_argument("--c", type=float, default=1.0)
    pd.add_argument("--rho", type=float, default=0.5)
    add_common(pd)
    pd.set_defaults(func=_cmd_diagnose)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (KnockoffMlrError, OSError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
