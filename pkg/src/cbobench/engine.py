"""The optimization loop and its six method configurations.

Two execution paths share one loop skeleton. The GP path refits its
surrogates every iteration (one model in penalty mode, G+1 in the CEI
modes) and maximizes the acquisition by pool argmax plus local pattern
search refinement. The PPD path never fits: each iteration issues exactly
one batched inference over the candidate pool for all targets at once and
takes the pool argmax directly.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass

import numpy as np

from . import acquisition as acq
from .errors import GPNumericalError, InferenceError
from .problems import ProblemSpec, evaluate, snap_discrete
from .sampling import CandidatePool, candidate_pool, stream
from .surrogates import (
    Dataset,
    GPConfig,
    TARGETS_ALL,
    TARGETS_OBJECTIVE,
    gp_fit,
    gp_predict,
    model_theta,
    ppd_predict,
    reference_ppd_surrogate,
    standardize,
)

SURROGATE_PATHS = ("gp", "ppd")
CONSTRAINT_MODES = ("penalty", "cei", "cei_plus")
DUPLICATE_TOL = 1e-9


@dataclass(frozen=True)
class MethodConfig:
    """One of the six surrogate-path x constraint-mode combinations."""

    method_id: str
    surrogate_path: str
    constraint_mode: str
    pool_size: int = 1000
    n_init: int = 20
    n_iter: int = 200
    restarts: int = 8
    seed: int = 0
    refine_starts: int = 5
    refine_steps: int = 50
    refine_step_min: float = 1e-4
    bucket_count: int = 1000
    bandwidth_rule: object = "scott"

    def __post_init__(self):
        assert self.surrogate_path in SURROGATE_PATHS
        assert self.constraint_mode in CONSTRAINT_MODES
        assert self.pool_size >= 1 and self.n_init >= 1 and self.n_iter >= 0

    def gp_config(self) -> GPConfig:
        return GPConfig(restarts=self.restarts, seed=self.seed)


def method_registry() -> dict[str, MethodConfig]:
    """The canonical six methods, keyed by id."""
    out = {}
    for path in ("gp", "ppd"):
        for mode, tag in (("penalty", "pen"), ("cei", "cei"), ("cei_plus", "cei_plus")):
            mid = f"{path}_{tag}"
            out[mid] = MethodConfig(
                method_id=mid, surrogate_path=path, constraint_mode=mode
            )
    return out


METHOD_IDS = tuple(method_registry())


@dataclass(frozen=True)
class TrialTrace:
    """Everything one trial observed, row-aligned across fields."""

    problem_id: str
    method_id: str
    seed: int
    errata_mode: str
    started_at: str
    n_init: int
    n_iter: int
    iteration: np.ndarray
    X: np.ndarray
    f: np.ndarray
    g: np.ndarray
    feasible: np.ndarray
    incumbent_f: np.ndarray
    rho: np.ndarray
    wall_ms: np.ndarray
    trial: int = 0
    degraded_iterations: tuple = ()
    fit_calls: int = 0
    inference_calls: int = 0

    def __post_init__(self):
        n = self.iteration.shape[0]
        assert n == self.n_init + self.n_iter
        assert self.X.shape[0] == n and self.f.shape == (n,)
        assert self.g.shape[0] == n
        assert self.wall_ms.shape == (n,)

    @property
    def n_rows(self) -> int:
        return self.iteration.shape[0]

    def final_incumbent(self) -> tuple[float, bool]:
        """(best feasible f, True) or (nan, False) if never feasible."""
        v = self.incumbent_f[-1]
        return float(v), bool(np.isfinite(v))

    def to_csv(self) -> str:
        d, G = self.X.shape[1], self.g.shape[1]
        buf = io.StringIO()
        cols = (
            ["iteration"]
            + [f"x_{j + 1}" for j in range(d)]
            + ["f"]
            + [f"g_{j + 1}" for j in range(G)]
            + ["feasible", "incumbent_f", "rho", "wall_ms"]
        )
        buf.write(",".join(cols) + "\n")
        for i in range(self.n_rows):
            parts = [str(int(self.iteration[i]))]
            parts += [f"{v:.17g}" for v in self.X[i]]
            parts.append(f"{self.f[i]:.17g}")
            parts += [f"{v:.17g}" for v in self.g[i]]
            parts.append(str(int(self.feasible[i])))
            parts.append(f"{self.incumbent_f[i]:.17g}")
            parts.append(f"{self.rho[i]:.17g}")
            parts.append(f"{self.wall_ms[i]:.17g}")
            buf.write(",".join(parts) + "\n")
        return buf.getvalue()


def trace_from_csv(text: str, meta: dict) -> TrialTrace:
    """Rebuild a trace from its CSV table plus manifest metadata."""
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    d = sum(1 for c in header if c.startswith("x_"))
    G = sum(1 for c in header if c.startswith("g_"))
    rows = [ln.split(",") for ln in lines[1:]]
    arr = np.array(rows, dtype=float)
    n = arr.shape[0]
    return TrialTrace(
        problem_id=meta["problem_id"],
        method_id=meta["method_id"],
        seed=int(meta["seed"]),
        errata_mode=meta["errata_mode"],
        started_at=meta.get("started_at", ""),
        n_init=int(meta["n_init"]),
        n_iter=n - int(meta["n_init"]),
        iteration=arr[:, 0].astype(int),
        X=arr[:, 1 : 1 + d],
        f=arr[:, 1 + d],
        g=arr[:, 2 + d : 2 + d + G],
        feasible=arr[:, 2 + d + G].astype(bool),
        incumbent_f=arr[:, 3 + d + G],
        rho=arr[:, 4 + d + G],
        wall_ms=arr[:, 5 + d + G],
        trial=int(meta.get("trial", 0)),
        degraded_iterations=tuple(meta.get("degraded_iterations", ())),
        fit_calls=int(meta.get("fit_calls", 0)),
        inference_calls=int(meta.get("inference_calls", 0)),
    )


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _to_unit(problem: ProblemSpec, X_raw: np.ndarray) -> np.ndarray:
    return (X_raw - problem.lower) / (problem.upper - problem.lower)


def _to_raw(problem: ProblemSpec, U: np.ndarray) -> np.ndarray:
    return problem.lower + U * (problem.upper - problem.lower)


def _f_star(D: Dataset) -> float:
    """EI's plug-in incumbent: best feasible f, or best f before any."""
    feas = D.feasible_mask
    if np.any(feas):
        return float(D.y[feas].min())
    return float(D.y.min())


def _is_duplicate(U: np.ndarray, u: np.ndarray) -> bool:
    return bool(np.any(np.max(np.abs(U - u), axis=1) <= DUPLICATE_TOL))


def _best_non_duplicate(D: Dataset, pool_unit, pool_raw, scores):
    """Highest-scoring pool candidate not already in the dataset."""
    for i in np.argsort(-scores):
        if not _is_duplicate(D.X, pool_unit[i]):
            return pool_raw[i], pool_unit[i]
    # a fully duplicated pool cannot happen with continuous coordinates;
    # fall back to the argmax regardless
    i = int(np.argmax(scores))
    return pool_raw[i], pool_unit[i]


class _GPScorer:
    """Acquisition evaluation backed by freshly fitted GP models."""

    def __init__(self, problem, D, mode, config, penalty_state, warm):
        self.problem = problem
        self.D = D
        self.mode = mode
        self.fits_used = 0
        warm = warm or {}
        new_warm = {}
        gp_cfg = config.gp_config()

        if mode == "penalty":
            z = acq.penalty_transform(D.y, D.g_mat, penalty_state.rho)
            z_s, loc, scale = standardize(z)
            self.model_f = gp_fit(
                D.X, z_s, gp_cfg, warm_start=warm.get(0),
                output_loc=loc, output_scale=scale,
            )
            self.fits_used += 1
            self.f_star = float(z.min())
            self.models_g = []
            self.constant_targets = bool(np.ptp(z) == 0.0)
        else:
            y_s, loc, scale = standardize(D.y)
            self.model_f = gp_fit(
                D.X, y_s, gp_cfg, warm_start=warm.get(0),
                output_loc=loc, output_scale=scale,
            )
            self.fits_used += 1
            self.models_g = []
            for j in range(D.n_constraints):
                gj_s, gloc, gscale = standardize(D.g_mat[:, j])
                mj = gp_fit(
                    D.X, gj_s, gp_cfg, warm_start=warm.get(j + 1),
                    output_loc=gloc, output_scale=gscale,
                )
                self.fits_used += 1
                self.models_g.append(mj)
            self.f_star = _f_star(D)
            self.constant_targets = bool(np.ptp(D.y) == 0.0) and all(
                np.ptp(D.g_mat[:, j]) == 0.0 for j in range(D.n_constraints)
            )

        new_warm[0] = model_theta(self.model_f)
        for j, mj in enumerate(self.models_g):
            new_warm[j + 1] = model_theta(mj)
        self.warm = new_warm

    def score_unit(self, U: np.ndarray) -> np.ndarray:
        """Acquisition at unit-cube points (snapped before prediction)."""
        raw = snap_discrete(self.problem, _to_raw(self.problem, np.clip(U, 0.0, 1.0)))
        Uq = _to_unit(self.problem, raw)
        pf = gp_predict(self.model_f, Uq)
        ei = acq.expected_improvement_gaussian(self.f_star, pf.mean, pf.std)
        if self.mode == "penalty":
            return np.atleast_1d(ei)
        pfeas = np.empty((Uq.shape[0], len(self.models_g)))
        for j, mj in enumerate(self.models_g):
            pg = gp_predict(mj, Uq)
            pfeas[:, j] = acq.prob_feasible_gaussian(pg.mean, pg.std)
        if self.mode == "cei":
            return np.atleast_1d(acq.cei(ei, pfeas))
        return np.atleast_1d(acq.cei_plus(ei, pfeas))


def _pattern_search(scorer, starts_unit, scores, steps, step_min):
    """Batched coordinate pattern search from several starts at once.

    All starts move in lockstep; each proposes 2d axis neighbors per step,
    takes its best improving neighbor, and halves its own step otherwise.
    """
    U = np.array(starts_unit, dtype=float)
    best = np.array(scores, dtype=float)
    k, d = U.shape
    step = np.full(k, 0.25)
    eye = np.eye(d)
    for _ in range(steps):
        if np.all(step < step_min):
            break
        cand = (U[:, None, None, :] + step[:, None, None, None] * np.stack([eye, -eye], axis=0)[None]
                ).reshape(k * 2 * d, d)
        np.clip(cand, 0.0, 1.0, out=cand)
        vals = scorer.score_unit(cand).reshape(k, 2 * d)
        idx = np.argmax(vals, axis=1)
        gain = vals[np.arange(k), idx]
        improved = gain > best
        moved = cand.reshape(k, 2 * d, d)[np.arange(k), idx]
        U[improved] = moved[improved]
        best[improved] = gain[improved]
        step[~improved] *= 0.5
    return U, best


def next_eval_gp(
    problem: ProblemSpec,
    D: Dataset,
    mode: str,
    pool: CandidatePool,
    config: MethodConfig,
    penalty_state: acq.PenaltyState | None = None,
    warm: dict | None = None,
):
    """GP branch: fit, score the pool, refine locally, return the argmax.

    Returns (x_raw, info) where info carries fit counts, the refreshed
    warm-start hyperparameters, and a degraded flag when a numerical
    failure forced a random fallback point.
    """
    pool_raw = pool.points
    pool_unit = _to_unit(problem, pool_raw)
    try:
        scorer = _GPScorer(problem, D, mode, config, penalty_state, warm)
        scores = scorer.score_unit(pool_unit)
    except GPNumericalError:
        rng = stream("degraded", problem.id, config.seed, pool.iteration)
        u = rng.random(problem.dimension)
        x = snap_discrete(problem, _to_raw(problem, u))
        return x, {"fits_used": 0, "warm": warm or {}, "degraded": True}

    info = {"fits_used": scorer.fits_used, "warm": scorer.warm, "degraded": False}
    order = np.argsort(-scores)
    best_raw, best_unit = pool_raw[order[0]], pool_unit[order[0]]
    best_score = scores[order[0]]

    if not scorer.constant_targets and config.refine_starts > 0:
        k = min(config.refine_starts, pool_raw.shape[0])
        refined_u, refined_s = _pattern_search(
            scorer,
            pool_unit[order[:k]],
            scores[order[:k]],
            config.refine_steps,
            config.refine_step_min,
        )
        i = int(np.argmax(refined_s))
        if refined_s[i] > best_score:
            cand_raw = snap_discrete(problem, _to_raw(problem, refined_u[i]))
            cand_unit = _to_unit(problem, cand_raw)
            if not _is_duplicate(D.X, cand_unit):
                return cand_raw, info

    if _is_duplicate(D.X, best_unit):
        best_raw, _ = _best_non_duplicate(D, pool_unit, pool_raw, scores)
    return best_raw, info


def next_eval_ppd(
    problem: ProblemSpec,
    D: Dataset,
    mode: str,
    surrogate,
    pool: CandidatePool,
    penalty_state: acq.PenaltyState | None = None,
):
    """PPD branch: one batched inference, acquisition on buckets, argmax.

    No local refinement and no fitting; inference failures propagate so a
    degraded surrogate can never silently skew a method comparison.
    """
    pool_raw = pool.points
    pool_unit = _to_unit(problem, pool_raw)

    if mode == "penalty":
        z = acq.penalty_transform(D.y, D.g_mat, penalty_state.rho)
        D_pf = Dataset(X=D.X, raw_X=D.raw_X, y=z, g_mat=D.g_mat)
        batch = ppd_predict(surrogate, D_pf, TARGETS_OBJECTIVE, pool_unit)
        scores = acq.expected_improvement_bucketed(
            float(z.min()), batch.edges[0], batch.probs[:, 0, :]
        )
    else:
        batch = ppd_predict(surrogate, D, TARGETS_ALL, pool_unit)
        ei = acq.expected_improvement_bucketed(
            _f_star(D), batch.edges[0], batch.probs[:, 0, :]
        )
        G = D.n_constraints
        pfeas = np.empty((pool_raw.shape[0], G))
        for j in range(G):
            pfeas[:, j] = acq.prob_feasible_bucketed(
                batch.edges[j + 1], batch.probs[:, j + 1, :], 0.0
            )
        scores = acq.cei(ei, pfeas) if mode == "cei" else acq.cei_plus(ei, pfeas)

    i = int(np.argmax(scores))
    if _is_duplicate(D.X, pool_unit[i]):
        x_raw, _ = _best_non_duplicate(D, pool_unit, pool_raw, scores)
        return x_raw, {"degraded": False}
    return pool_raw[i], {"degraded": False}


def run_trial(
    problem: ProblemSpec,
    method: MethodConfig,
    init_design_raw: np.ndarray,
    surrogate=None,
    trial: int = 0,
) -> TrialTrace:
    """Alg.-1-style loop: evaluate the init design, then iterate NextEval.

    ``init_design_raw`` must be the shared per-trial design (problem units,
    already snapped); all six methods of a trial receive the same one.
    ``surrogate`` overrides the PPD predictor (external adapter); the
    reference predictor is built when omitted.
    """
    init_design_raw = np.asarray(init_design_raw, dtype=float)
    if init_design_raw.shape != (method.n_init, problem.dimension):
        raise ValueError(
            f"init design shape {init_design_raw.shape} != "
            f"({method.n_init}, {problem.dimension})"
        )
    started_at = time.strftime("%Y-%m-%dT%H:%M:%S")
    t0 = time.monotonic()
    is_penalty = method.constraint_mode == "penalty"
    n_rows = method.n_init + method.n_iter

    if method.surrogate_path == "ppd" and surrogate is None:
        surrogate = reference_ppd_surrogate(
            bucket_count=method.bucket_count, bandwidth_rule=method.bandwidth_rule
        )
    inference_base = getattr(surrogate, "inference_call_count", 0)

    d, G = problem.dimension, problem.n_constraints
    X = np.empty((n_rows, d))
    f = np.empty(n_rows)
    g = np.empty((n_rows, G))
    feasible = np.zeros(n_rows, dtype=bool)
    incumbent_f = np.full(n_rows, np.nan)
    rho_col = np.full(n_rows, np.nan)
    wall_ms = np.empty(n_rows)

    inc = acq.Incumbent()
    pstate = acq.PenaltyState() if is_penalty else None
    D = None
    fit_calls = 0
    degraded = []

    def record(i, x_raw, res):
        nonlocal D, inc
        X[i] = x_raw
        f[i] = res.f
        g[i] = res.g
        feasible[i] = res.feasible
        inc = acq.incumbent_update(inc, res, x_raw)
        incumbent_f[i] = inc.f_star if inc.feasible_found else np.nan
        if is_penalty:
            rho_col[i] = pstate.rho
        wall_ms[i] = (time.monotonic() - t0) * 1000.0
        u = _to_unit(problem, x_raw)
        if D is None:
            D = Dataset(X=u[None, :], raw_X=x_raw[None, :], y=np.array([res.f]),
                        g_mat=res.g[None, :])
        else:
            D = D.append(u, x_raw, res.f, res.g)

    for i in range(method.n_init):
        record(i, init_design_raw[i], evaluate(problem, init_design_raw[i]))

    warm: dict = {}
    for t in range(method.n_iter):
        i = method.n_init + t
        pool = candidate_pool(problem, method.pool_size, method.seed, i)
        before = (inc.f_star, inc.feasible_found)
        if method.surrogate_path == "gp":
            x_next, info = next_eval_gp(
                problem, D, method.constraint_mode, pool, method,
                penalty_state=pstate, warm=warm,
            )
            fit_calls += info["fits_used"]
            warm = info["warm"]
        else:
            x_next, info = next_eval_ppd(
                problem, D, method.constraint_mode, surrogate, pool,
                penalty_state=pstate,
            )
        if info["degraded"]:
            degraded.append(i)
        record(i, x_next, evaluate(problem, x_next))
        if is_penalty:
            improved = (inc.f_star, inc.feasible_found) != before
            pstate = acq.update_rho(pstate, improved)

    return TrialTrace(
        problem_id=problem.id,
        method_id=method.method_id,
        seed=method.seed,
        errata_mode=problem.errata_mode,
        started_at=started_at,
        n_init=method.n_init,
        n_iter=method.n_iter,
        iteration=np.arange(n_rows),
        X=X,
        f=f,
        g=g,
        feasible=feasible,
        incumbent_f=incumbent_f,
        rho=rho_col,
        wall_ms=wall_ms,
        trial=trial,
        degraded_iterations=tuple(degraded),
        fit_calls=fit_calls,
        inference_calls=getattr(surrogate, "inference_call_count", 0) - inference_base,
    )
