"""Experiment orchestration: config, seeding, persistence, scheduling.

A run is a grid of problems x methods x trials.  Every trial of a
problem draws ONE shared initial design that all methods start from;
method-specific randomness comes from per-method sub-seeds.  Results
live in an append-only store (trace CSVs plus a JSONL manifest) that
supports resume: trials already marked done are never re-run.

The store writer is single-owner: workers only compute and hand back
(metadata, csv) pairs; the parent process writes all files.
"""

from __future__ import annotations

import atexit
import dataclasses
import hashlib
import json
import os
import shlex
import tempfile
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .engine import MethodConfig, METHOD_IDS, TrialTrace, method_registry, run_trial, trace_from_csv
from .problems import PROBLEM_IDS, ERRATA_MODES, spec
from .sampling import derive_seed, latin_hypercube, scale_to_bounds
from .surrogates import external_ppd_surrogate

DEFAULT_OUT_ENV = "CBO_BENCH_OUT"
DEFAULT_OUT = "cbo_results"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings of one benchmark run."""

    problems: tuple = PROBLEM_IDS
    methods: tuple = METHOD_IDS
    n_trials: int = 50
    n_init: int = 20
    n_iter: int = 200
    pool_size: int = 1000
    base_seed: int = 0
    errata_mode: str = "corrected"
    workers: int = 1
    out_dir: str = DEFAULT_OUT
    predictor_cmd: str | None = None
    gp_restarts: int = 8

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.n_init < 1 or self.n_iter < 0 or self.pool_size < 1:
            raise ValueError("n_init >= 1, n_iter >= 0, pool_size >= 1 required")
        if self.errata_mode not in ERRATA_MODES:
            raise ValueError(f"unknown errata mode {self.errata_mode!r}")
        unknown = [p for p in self.problems if p not in PROBLEM_IDS]
        if unknown:
            raise ValueError(f"unknown problem id(s): {', '.join(unknown)}")
        unknown = [m for m in self.methods if m not in METHOD_IDS]
        if unknown:
            raise ValueError(f"unknown method id(s): {', '.join(unknown)}")
        if not self.problems or not self.methods:
            raise ValueError("need at least one problem and one method")
        if len(set(self.problems)) != len(self.problems):
            raise ValueError("duplicate problem ids")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate method ids")
        seeds = {
            self.trial_seed(p, t)
            for p in self.problems
            for t in range(self.n_trials)
        }
        if len(seeds) != len(self.problems) * self.n_trials:
            raise ValueError("per-trial seed collision; change base_seed")

    # -- seeding ------------------------------------------------------------

    def trial_seed(self, problem_id: str, trial: int) -> int:
        return derive_seed(self.base_seed, problem_id, trial)

    def init_seed(self, problem_id: str, trial: int) -> int:
        return derive_seed(self.trial_seed(problem_id, trial), "init")

    def method_seed(self, problem_id: str, trial: int, method_id: str) -> int:
        return derive_seed(self.trial_seed(problem_id, trial), method_id)

    # -- identity -----------------------------------------------------------

    def semantic_fields(self) -> dict:
        """Fields that define the experiment (not where/how it executes)."""
        return {
            "problems": sorted(self.problems),
            "methods": sorted(self.methods),
            "n_trials": self.n_trials,
            "n_init": self.n_init,
            "n_iter": self.n_iter,
            "pool_size": self.pool_size,
            "base_seed": self.base_seed,
            "errata_mode": self.errata_mode,
            "predictor_cmd": self.predictor_cmd,
            "gp_restarts": self.gp_restarts,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_fields(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["problems"] = list(self.problems)
        d["methods"] = list(self.methods)
        d["config_hash"] = self.config_hash()
        return d


_LIST_KEYS = {"problems", "methods"}
_INT_KEYS = {
    "trials": "n_trials",
    "n_trials": "n_trials",
    "iters": "n_iter",
    "n_iter": "n_iter",
    "init": "n_init",
    "n_init": "n_init",
    "pool": "pool_size",
    "pool_size": "pool_size",
    "seed": "base_seed",
    "base_seed": "base_seed",
    "workers": "workers",
    "gp_restarts": "gp_restarts",
}
_STR_KEYS = {
    "errata": "errata_mode",
    "errata_mode": "errata_mode",
    "out": "out_dir",
    "out_dir": "out_dir",
    "predictor_cmd": "predictor_cmd",
    "predictor-cmd": "predictor_cmd",
}


def parse_config_file(path: str) -> dict:
    """Flat key = value file; '#'/';' comments; lists comma-separated."""
    fields = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("#", ";", "[")):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip().lower().replace("-", "_"), value.strip()
        value = value.strip("\"'")
        if key in _LIST_KEYS:
            fields[key] = value
        elif key in _INT_KEYS:
            fields[_INT_KEYS[key]] = int(value)
        elif key in _STR_KEYS:
            fields[_STR_KEYS[key]] = value
        else:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return fields


def _id_list(value, universe, what: str) -> tuple:
    """'all', comma-string, or iterable of ids -> validated tuple."""
    if value is None or value == "all":
        return tuple(universe)
    if isinstance(value, str):
        ids = tuple(s.strip() for s in value.split(",") if s.strip())
    else:
        ids = tuple(value)
    bad = [i for i in ids if i not in universe]
    if bad:
        raise ValueError(f"unknown {what} id(s): {', '.join(bad)}")
    return ids


def resolve_config(file_fields: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge config-file fields with flag overrides (flags win)."""
    fields = dict(file_fields or {})
    for k, v in (overrides or {}).items():
        if v is not None:
            fields[k] = v
    fields["problems"] = _id_list(fields.get("problems"), PROBLEM_IDS, "problem")
    fields["methods"] = _id_list(fields.get("methods"), METHOD_IDS, "method")
    if "out_dir" not in fields:
        fields["out_dir"] = os.environ.get(DEFAULT_OUT_ENV, DEFAULT_OUT)
    return ExperimentConfig(**fields)


# ---------------------------------------------------------------------------
# result store
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp_", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ResultStore:
    """Append-only run artifacts: trace CSVs plus a JSONL manifest.

    The manifest has one row per finished scheduling attempt; the LAST
    row for a (problem, method, trial) key is authoritative, so failed
    trials can be retried by appending a newer row.
    """

    def __init__(self, out_dir: str, config: ExperimentConfig):
        self.root = Path(out_dir)
        self.trace_dir = self.root / "traces"
        self.report_dir = self.root / "reports"
        self.manifest_path = self.root / "manifest.jsonl"
        self.config = config
        self.trace_dir.mkdir(parents=True, exist_ok=True)
        self.report_dir.mkdir(parents=True, exist_ok=True)
        cfg_path = self.root / "config.json"
        if cfg_path.exists():
            stored = json.loads(cfg_path.read_text())
            if stored.get("config_hash") != config.config_hash():
                raise ValueError(
                    f"store {out_dir} was created with a different config "
                    f"(hash {stored.get('config_hash')} != {config.config_hash()}); "
                    "use a fresh output directory"
                )
        else:
            _atomic_write(cfg_path, json.dumps(config.to_dict(), indent=2, sort_keys=True))

    # -- manifest -----------------------------------------------------------

    def manifest_rows(self) -> list:
        rows = []
        if not self.manifest_path.exists():
            return rows
        with open(self.manifest_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError:
                    continue  # torn final line after a crash
        return rows

    def statuses(self) -> dict:
        """(problem, method, trial) -> latest manifest row."""
        latest = {}
        for row in self.manifest_rows():
            latest[(row["problem_id"], row["method_id"], row["trial"])] = row
        return latest

    def done_keys(self) -> set:
        return {k for k, r in self.statuses().items() if r["status"] == "done"}

    def _append_manifest(self, row: dict):
        line = json.dumps(row, sort_keys=True)
        with open(self.manifest_path, "a") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- traces -------------------------------------------------------------

    def trace_name(self, problem_id: str, method_id: str, trial: int) -> str:
        return f"{problem_id}__{method_id}__t{trial:04d}.csv"

    def write_trial(self, meta: dict, csv_text: str):
        """Persist one finished trial: trace first, then its manifest row."""
        name = self.trace_name(meta["problem_id"], meta["method_id"], meta["trial"])
        _atomic_write(self.trace_dir / name, csv_text)
        row = dict(meta)
        row["status"] = "done"
        row["trace"] = f"traces/{name}"
        row["config_hash"] = self.config.config_hash()
        row["code_version"] = __version__
        self._append_manifest(row)

    def mark_failed(self, problem_id: str, method_id: str, trial: int, error: str):
        self._append_manifest(
            {
                "problem_id": problem_id,
                "method_id": method_id,
                "trial": trial,
                "status": "failed",
                "error": error[-2000:],
                "config_hash": self.config.config_hash(),
                "code_version": __version__,
            }
        )

    def mark_skipped(self, problem_id: str, method_id: str, trial: int, reason: str):
        self._append_manifest(
            {
                "problem_id": problem_id,
                "method_id": method_id,
                "trial": trial,
                "status": "skipped",
                "error": reason,
                "config_hash": self.config.config_hash(),
                "code_version": __version__,
            }
        )

    def load_trace(self, row: dict) -> TrialTrace:
        text = (self.root / row["trace"]).read_text()
        return trace_from_csv(text, row)

    def load_traces(self, problems=None, methods=None) -> list:
        """All done traces, optionally filtered; raises on missing files."""
        out = []
        for (p, m, t), row in sorted(self.statuses().items()):
            if row["status"] != "done":
                continue
            if problems is not None and p not in problems:
                continue
            if methods is not None and m not in methods:
                continue
            path = self.root / row["trace"]
            if not path.exists():
                raise FileNotFoundError(f"manifest references missing trace {row['trace']}")
            out.append(self.load_trace(row))
        return out

    def missing_keys(self) -> list:
        """Scheduled grid cells not yet done, in deterministic order."""
        done = self.done_keys()
        cfg = self.config
        return [
            (p, m, t)
            for p in cfg.problems
            for t in range(cfg.n_trials)
            for m in cfg.methods
            if (p, m, t) not in done
        ]


# ---------------------------------------------------------------------------
# trial execution (worker side)
# ---------------------------------------------------------------------------

_EXTERNAL_CACHE: dict = {}


def _cached_external(cmd: str):
    surr = _EXTERNAL_CACHE.get(cmd)
    if surr is None:
        surr = external_ppd_surrogate(cmd)
        _EXTERNAL_CACHE[cmd] = surr
        atexit.register(surr.close)
    return surr


def build_method(config: ExperimentConfig, problem_id: str, method_id: str, trial: int) -> MethodConfig:
    base = method_registry()[method_id]
    return dataclasses.replace(
        base,
        pool_size=config.pool_size,
        n_init=config.n_init,
        n_iter=config.n_iter,
        restarts=config.gp_restarts,
        seed=config.method_seed(problem_id, trial, method_id),
    )


def shared_init_design(config: ExperimentConfig, problem_id: str, trial: int):
    """The one initial design every method of this trial starts from."""
    problem = spec(problem_id, config.errata_mode)
    design = latin_hypercube(
        config.n_init, problem.dimension, seed=config.init_seed(problem_id, trial)
    )
    return scale_to_bounds(design, problem)


def run_one_trial(config_dict: dict, problem_id: str, method_id: str, trial: int) -> tuple:
    """Worker entry point: returns (meta, csv_text); must stay picklable."""
    cfg_fields = {k: v for k, v in config_dict.items() if k != "config_hash"}
    for key in ("problems", "methods"):
        cfg_fields[key] = tuple(cfg_fields[key])
    config = ExperimentConfig(**cfg_fields)
    problem = spec(problem_id, config.errata_mode)
    method = build_method(config, problem_id, method_id, trial)
    init_raw = shared_init_design(config, problem_id, trial)
    surrogate = None
    if method.surrogate_path == "ppd" and config.predictor_cmd:
        surrogate = _cached_external(config.predictor_cmd)
    trace = run_trial(problem, method, init_raw, surrogate=surrogate, trial=trial)
    meta = {
        "problem_id": trace.problem_id,
        "method_id": trace.method_id,
        "trial": trial,
        "seed": trace.seed,
        "errata_mode": trace.errata_mode,
        "started_at": trace.started_at,
        "n_init": trace.n_init,
        "n_iter": trace.n_iter,
        "wall_ms_total": float(trace.wall_ms[-1]),
        "fit_calls": trace.fit_calls,
        "inference_calls": trace.inference_calls,
        "degraded_iterations": list(trace.degraded_iterations),
    }
    return meta, trace.to_csv()


# ---------------------------------------------------------------------------
# scheduler (parent side)
# ---------------------------------------------------------------------------


def run_experiment(config: ExperimentConfig, log=print) -> tuple:
    """Execute all missing trials; returns (store, n_failed).

    Trials are independent work units; with workers > 1 they run in a
    process pool and results flow back to this (sole) writer process.
    """
    store = ResultStore(config.out_dir, config)
    todo = store.missing_keys()
    total = len(config.problems) * len(config.methods) * config.n_trials
    log(
        f"grid {len(config.problems)} problems x {len(config.methods)} methods "
        f"x {config.n_trials} trials = {total} trials; "
        f"{total - len(todo)} already done, {len(todo)} to run"
    )
    if not todo:
        return store, 0

    cfg_dict = config.to_dict()
    n_failed = 0
    done_count = 0

    def _write(key, meta, csv_text, error):
        nonlocal n_failed, done_count
        p, m, t = key
        if error is None:
            store.write_trial(meta, csv_text)
        else:
            store.mark_failed(p, m, t, error)
            n_failed += 1
            log(f"FAILED {p}/{m}/trial{t}: {error.splitlines()[-1] if error else ''}")
        done_count += 1
        if done_count % 25 == 0 or done_count == len(todo):
            log(f"  {done_count}/{len(todo)} trials finished")

    if config.workers <= 1:
        for key in todo:
            try:
                meta, csv_text = run_one_trial(cfg_dict, *key)
                _write(key, meta, csv_text, None)
            except Exception as exc:  # noqa: BLE001 - trial isolation
                _write(key, None, None, f"{type(exc).__name__}: {exc}")
        return store, n_failed

    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        pending = {}
        queue = list(todo)
        # keep a bounded number in flight so early failures surface fast
        while queue or pending:
            while queue and len(pending) < config.workers * 2:
                key = queue.pop(0)
                pending[pool.submit(run_one_trial, cfg_dict, *key)] = key
            finished, _ = wait(pending, return_when=FIRST_COMPLETED)
            for fut in finished:
                key = pending.pop(fut)
                exc = fut.exception()
                if exc is not None:
                    _write(key, None, None, f"{type(exc).__name__}: {exc}")
                else:
                    meta, csv_text = fut.result()
                    _write(key, meta, csv_text, None)
    return store, n_failed
