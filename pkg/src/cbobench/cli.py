"""Command-line front end: run, report, validate, list.

Exit codes: 0 success, 1 partial failure (some trials failed), 2 usage
or configuration error.  The default output directory is taken from
$CBO_BENCH_OUT when --out is not given.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .engine import METHOD_IDS, method_registry
from .errors import InferenceError
from .harness import (
    DEFAULT_OUT,
    DEFAULT_OUT_ENV,
    ExperimentConfig,
    ResultStore,
    parse_config_file,
    resolve_config,
    run_experiment,
)
from .problems import ERRATA_NOTES, PROBLEM_IDS, catalog
from .stats import (
    critical_difference_ranking,
    feasibility_ratio,
    fixed_iteration_report,
    fixed_runtime_report,
    pareto_rank,
    result_matrix_from_traces,
)
from .surrogates import Dataset, TARGETS_ALL, external_ppd_surrogate

REPORT_KINDS = ("feasibility", "fixed_iteration", "fixed_runtime", "ranking", "pareto", "all")


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--problems", help="comma-separated problem ids, or 'all'")
    p.add_argument("--methods", help="comma-separated method ids, or 'all'")
    p.add_argument("--trials", type=int, dest="n_trials", help="trials per problem")
    p.add_argument("--iters", type=int, dest="n_iter", help="optimizer iterations per trial")
    p.add_argument("--init", type=int, dest="n_init", help="initial design size (default 20)")
    p.add_argument("--pool", type=int, dest="pool_size", help="candidate pool size (default 1000)")
    p.add_argument("--seed", type=int, dest="base_seed", help="base seed")
    p.add_argument("--errata", dest="errata_mode", choices=("verbatim", "corrected"),
                   help="problem formulation mode")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--out", dest="out_dir", metavar="DIR", help="output directory")
    p.add_argument("--predictor-cmd", dest="predictor_cmd", metavar="CMD",
                   help="external PPD predictor command line")
    p.add_argument("--gp-restarts", type=int, dest="gp_restarts",
                   help="GP hyperparameter optimizer restarts (default 8)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbo-bench",
        description="Constrained Bayesian optimization benchmark harness.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the configured trial grid")
    _add_config_flags(p_run)

    p_rep = sub.add_parser("report", help="derive summary files from a finished store")
    p_rep.add_argument("kind", choices=REPORT_KINDS)
    p_rep.add_argument("--out", dest="out_dir", metavar="DIR", help="store directory")
    p_rep.add_argument("--problems", help="restrict to these problem ids")
    p_rep.add_argument("--methods", help="restrict to these method ids")
    p_rep.add_argument("--budget", metavar="SPEC",
                       help="'iteration:K' or 'runtime:fastest' (or runtime:<ms>)")
    p_rep.add_argument("--metric", choices=("performance", "time"), default="performance",
                       help="ranking metric (default performance)")
    p_rep.add_argument("--alpha", type=float, default=0.05, help="significance level")

    p_val = sub.add_parser("validate", help="check a config and any external predictor")
    _add_config_flags(p_val)

    p_list = sub.add_parser("list", help="show available problems and methods")
    p_list.add_argument("what", nargs="?", choices=("problems", "methods", "all"), default="all")
    p_list.add_argument("--errata", dest="errata_mode", choices=("verbatim", "corrected"),
                        default="corrected")
    return parser


def _resolve_from_args(args) -> ExperimentConfig:
    file_fields = parse_config_file(args.config) if args.config else {}
    override_keys = (
        "problems", "methods", "n_trials", "n_iter", "n_init", "pool_size",
        "base_seed", "errata_mode", "workers", "out_dir", "predictor_cmd",
        "gp_restarts",
    )
    overrides = {k: getattr(args, k, None) for k in override_keys}
    return resolve_config(file_fields, overrides)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    try:
        config = _resolve_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        store, n_failed = run_experiment(config)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    statuses = store.statuses()
    n_done = sum(1 for r in statuses.values() if r["status"] == "done")
    print(f"store: {store.root}  done={n_done} failed={n_failed}")
    return 1 if n_failed else 0


def _open_store(out_dir: str | None) -> ResultStore:
    root = Path(out_dir or os.environ.get(DEFAULT_OUT_ENV, DEFAULT_OUT))
    cfg_path = root / "config.json"
    if not cfg_path.exists():
        raise FileNotFoundError(f"no store at {root} (missing config.json)")
    stored = json.loads(cfg_path.read_text())
    stored.pop("config_hash", None)
    stored["problems"] = tuple(stored["problems"])
    stored["methods"] = tuple(stored["methods"])
    config = ExperimentConfig(**stored)
    return ResultStore(str(root), config)


def _parse_budget(text: str | None):
    """'iteration:K' | 'runtime:fastest' | 'runtime:<ms>' -> (kind, value)."""
    if text is None:
        return None, None
    kind, _, value = text.partition(":")
    if kind == "iteration":
        return "iteration", int(value)
    if kind == "runtime":
        if value in ("", "fastest"):
            return "runtime", None
        if value in ("inf", "infinite"):
            return "runtime", math.inf
        return "runtime", float(value)
    raise ValueError(f"budget must be iteration:K or runtime:fastest, got {text!r}")


def _write_report(store: ResultStore, stem: str, csv_text: str, payload) -> list:
    csv_path = store.report_dir / f"{stem}.csv"
    json_path = store.report_dir / f"{stem}.json"
    csv_path.write_text(csv_text)

    def enc(v):
        if isinstance(v, float) and math.isinf(v):
            return "inf"
        raise TypeError(f"not JSON serializable: {v!r}")

    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=enc))
    return [csv_path, json_path]


def cmd_report(args) -> int:
    try:
        store = _open_store(args.out_dir)
        budget_kind, budget_value = _parse_budget(args.budget)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    cfg = store.config
    problems = tuple(args.problems.split(",")) if args.problems else cfg.problems
    methods = tuple(args.methods.split(",")) if args.methods else cfg.methods
    bad = [p for p in problems if p not in cfg.problems] + [m for m in methods if m not in cfg.methods]
    if bad:
        print(f"error: not in this store: {', '.join(bad)}", file=sys.stderr)
        return 2

    # the requested slice must be complete before any report is cut
    done = store.done_keys()
    absent = [
        f"{p}/{m}/trial{t}"
        for p in problems
        for t in range(cfg.n_trials)
        for m in methods
        if (p, m, t) not in done
    ]
    if absent:
        print(f"error: {len(absent)} trial(s) missing from store:", file=sys.stderr)
        for line in absent[:20]:
            print(f"  {line}", file=sys.stderr)
        if len(absent) > 20:
            print(f"  ... and {len(absent) - 20} more", file=sys.stderr)
        return 2

    traces = store.load_traces(problems=problems, methods=methods)
    by_problem = {}
    for t in traces:
        by_problem.setdefault(t.problem_id, []).append(t)
    written = []

    kinds = REPORT_KINDS[:-1] if args.kind == "all" else (args.kind,)
    for kind in kinds:
        if kind == "feasibility":
            rows, payload = [], {}
            for p in problems:
                payload[p] = {}
                for m in methods:
                    cell = [t for t in by_problem[p] if t.method_id == m]
                    ratio = feasibility_ratio(cell)
                    rows.append(f"{p},{m},{ratio:.6g},{len(cell)}")
                    payload[p][m] = {"ratio_percent": ratio, "n_trials": len(cell)}
            csv_text = "problem,method,ratio_percent,n_trials\n" + "\n".join(rows) + "\n"
            written += _write_report(store, "feasibility", csv_text, payload)
        elif kind == "fixed_iteration":
            k = budget_value if budget_kind == "iteration" else None
            for p in problems:
                kk = min(t.n_iter for t in by_problem[p]) if k is None else k
                try:
                    rep = fixed_iteration_report(by_problem[p], kk)
                except ValueError as exc:
                    print(f"error: {exc}", file=sys.stderr)
                    return 2
                written += _write_report(
                    store, f"fixed_iteration__{p}", rep.to_csv(), rep.to_dict()
                )
        elif kind == "fixed_runtime":
            ms = budget_value if budget_kind == "runtime" else None
            for p in problems:
                rep = fixed_runtime_report(by_problem[p], budget_ms=ms)
                written += _write_report(
                    store, f"fixed_runtime__{p}", rep.to_csv(), rep.to_dict()
                )
        elif kind == "ranking":
            if len(methods) < 2 or len(problems) < 2:
                if args.kind == "all":
                    print("ranking skipped: needs >= 2 methods and >= 2 problems")
                    continue
                print("error: ranking needs >= 2 methods and >= 2 problems", file=sys.stderr)
                return 2
            matrix = result_matrix_from_traces(traces)
            rep = critical_difference_ranking(matrix, metric=args.metric, alpha=args.alpha)
            written += _write_report(store, f"ranking_{args.metric}", rep.to_csv(), rep.to_dict())
        elif kind == "pareto":
            rows = ["problem,method,median_time_ms,median_value,pareto_rank"]
            payload = {}
            matrix = result_matrix_from_traces(traces)
            for p in problems:
                pts = []
                for m in methods:
                    cell = matrix.cells[(p, m)]
                    med_t = float(np.median([o.time_ms for o in cell]))
                    vals = [o.value if o.value is not None else math.inf for o in cell]
                    med_v = float(np.median(vals))
                    pts.append((med_t, None if math.isinf(med_v) else med_v))
                ranks = pareto_rank(pts)
                payload[p] = {}
                for m, (tms, val), r in zip(methods, pts, ranks):
                    vtxt = "" if val is None else f"{val:.10g}"
                    rows.append(f"{p},{m},{tms:.6g},{vtxt},{int(r)}")
                    payload[p][m] = {
                        "median_time_ms": tms,
                        "median_value": val,
                        "pareto_rank": int(r),
                    }
            written += _write_report(store, "pareto", "\n".join(rows) + "\n", payload)

    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_validate(args) -> int:
    try:
        config = _resolve_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print("resolved configuration:")
    for key, value in sorted(config.to_dict().items()):
        if key == "config_hash":
            continue
        if isinstance(value, list):
            value = ",".join(value) if value else "(none)"
        print(f"  {key} = {value}")
    print(f"  config_hash = {config.config_hash()}")
    n_cells = len(config.problems) * len(config.methods) * config.n_trials
    print(f"  scheduled trials = {n_cells}")

    if config.predictor_cmd:
        print(f"probing external predictor: {config.predictor_cmd}")
        t0 = time.monotonic()
        try:
            surr = external_ppd_surrogate(config.predictor_cmd, timeout=30.0)
            try:
                X = np.array([[0.1], [0.5], [0.9]])
                D = Dataset(X=X, raw_X=X, y=np.array([1.0, 0.0, 1.0]),
                            g_mat=np.array([[-1.0], [0.5], [-0.2]]))
                surr.predict(D, TARGETS_ALL, np.array([[0.4]]))
            finally:
                surr.close()
        except InferenceError as exc:
            print(f"handshake FAILED: {exc}", file=sys.stderr)
            if exc.payload:
                print(f"  diagnostics: {json.dumps(exc.payload)[:800]}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"handshake FAILED: {exc}", file=sys.stderr)
            return 2
        ms = 1000.0 * (time.monotonic() - t0)
        print(f"handshake OK ({ms:.0f} ms round trip)")
    print("config OK")
    return 0


def cmd_list(args) -> int:
    if args.what in ("problems", "all"):
        print(f"problems ({len(PROBLEM_IDS)}), errata mode {args.errata_mode}:")
        print(f"  {'id':<26} {'dim':>3} {'constraints':>11} {'discrete':>8}  notes")
        for p in catalog(args.errata_mode):
            n_disc = len(p.discrete_vars)
            note = "formulation differs by errata mode" if p.id in ERRATA_NOTES else ""
            print(f"  {p.id:<26} {p.dimension:>3} {p.n_constraints:>11} {n_disc:>8}  {note}")
    if args.what == "all":
        print()
    if args.what in ("methods", "all"):
        print(f"methods ({len(METHOD_IDS)}):")
        for mid, m in method_registry().items():
            print(f"  {mid:<12} surrogate={m.surrogate_path:<4} constraints={m.constraint_mode}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "report": cmd_report,
        "validate": cmd_validate,
        "list": cmd_list,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
