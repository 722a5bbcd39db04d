"""Evaluation statistics for benchmark results.

Implements the comparison pipeline used by the reports: feasibility
ratios, Friedman rank test with pairwise Wilcoxon post-hocs under Holm
correction, critical-difference groupings, fixed-iteration and
fixed-runtime summaries, and Pareto ranks for time/quality trade-offs.

Conventions: objectives are minimized throughout, rank 1 is best, and a
trial that never found a feasible point carries no objective value (its
outcome value is None and it ranks behind every feasible outcome).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import chdtrc, ndtr


# ---------------------------------------------------------------------------
# primitive tests
# ---------------------------------------------------------------------------


def feasibility_ratio(traces) -> float:
    """Percentage of trials whose final incumbent is feasible."""
    if not traces:
        raise ValueError("feasibility_ratio needs at least one trace")
    hits = sum(1 for t in traces if t.final_incumbent()[1])
    return 100.0 * hits / len(traces)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n for a 1-d array, ties receive the average rank."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def friedman_test(values: np.ndarray, lower_is_better: bool = True):
    """Friedman chi-square test over a blocks x treatments score matrix.

    Each row is ranked independently (average ranks on ties) and the
    plain chi-square statistic with k-1 degrees of freedom is returned
    together with its upper-tail p-value.  A matrix where every row is
    fully tied yields statistic 0 and p = 1.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] < 2:
        raise ValueError("need a 2-d matrix with at least 2 rows and 2 columns")
    n, k = values.shape
    signed = values if lower_is_better else -values
    ranks = np.vstack([_average_ranks(row) for row in signed])
    mean_ranks = ranks.mean(axis=0)
    stat = 12.0 * n / (k * (k + 1)) * float(np.sum((mean_ranks - (k + 1) / 2.0) ** 2))
    p = float(chdtrc(k - 1, stat))
    return float(stat), p


def _wilcoxon_exact_p(w_doubled: int, doubled_ranks: np.ndarray) -> float:
    """Exact two-sided p for the signed-rank statistic.

    Works on doubled ranks so tied (half-integer) ranks stay integral.
    Enumerates the null distribution of the positive-rank sum by dynamic
    programming over all sign assignments.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    denom = counts.sum()
    lo = counts[: w_doubled + 1].sum() / denom
    hi = counts[w_doubled:].sum() / denom
    return float(min(1.0, 2.0 * min(lo, hi)))


def wilcoxon_signed_rank(a, b) -> float:
    """Two-sided Wilcoxon signed-rank p-value for paired samples.

    Zero differences are dropped first; if every difference is zero the
    samples are indistinguishable and p = 1 by convention.  Fewer than 5
    nonzero differences is an error (the test has no resolution there).
    Up to 25 nonzero differences the exact null distribution is used;
    beyond that a normal approximation with tie-corrected variance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired 1-d samples of equal length required")
    d = a - b
    d = d[d != 0.0]
    if d.size == 0:
        return 1.0
    if d.size < 5:
        raise ValueError("need at least 5 nonzero differences")
    n = d.size
    ranks = _average_ranks(np.abs(d))
    w_pos = float(ranks[d > 0].sum())
    if n <= 25:
        doubled = np.rint(2.0 * ranks).astype(int)
        w_doubled = int(round(2.0 * w_pos))
        return _wilcoxon_exact_p(w_doubled, doubled)
    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    z = (w_pos - mu) / math.sqrt(var)
    return float(min(1.0, 2.0 * ndtr(-abs(z))))


def holm_adjust(pvals) -> list:
    """Holm step-down adjustment; returns p-values in the input order."""
    pvals = [float(p) for p in pvals]
    k = len(pvals)
    order = sorted(range(k), key=lambda i: pvals[i])
    adjusted = [0.0] * k
    running = 0.0
    for pos, idx in enumerate(order):
        running = max(running, min(1.0, (k - pos) * pvals[idx]))
        adjusted[idx] = running
    return adjusted


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialOutcome:
    """One trial reduced to its endpoints: best feasible value and cost.

    ``value`` is None when the trial never found a feasible point.
    ``time_ms`` is the trial's total wall time.
    """

    value: float | None
    time_ms: float


@dataclass(frozen=True)
class ResultMatrix:
    """Per-trial outcomes for a problems x methods grid.

    ``cells[(problem_id, method_id)]`` holds one TrialOutcome per trial,
    the same count for every method within a problem.
    """

    problems: tuple
    methods: tuple
    cells: dict

    def __post_init__(self):
        if len(self.problems) < 1 or len(self.methods) < 2:
            raise ValueError("need at least one problem and two methods")
        for p in self.problems:
            counts = set()
            for m in self.methods:
                if (p, m) not in self.cells:
                    raise ValueError(f"missing cell ({p}, {m})")
                counts.add(len(self.cells[(p, m)]))
            if len(counts) != 1 or 0 in counts:
                raise ValueError(f"unequal or empty trial counts on {p}")

    def trial_count(self, problem_id: str) -> int:
        return len(self.cells[(problem_id, self.methods[0])])


def result_matrix_from_traces(traces) -> ResultMatrix:
    """Collect finished traces into a ResultMatrix keyed by id fields."""
    cells = {}
    problems, methods = [], []
    for t in traces:
        key = (t.problem_id, t.method_id)
        if t.problem_id not in problems:
            problems.append(t.problem_id)
        if t.method_id not in methods:
            methods.append(t.method_id)
        v, ok = t.final_incumbent()
        cells.setdefault(key, []).append(
            TrialOutcome(value=v if ok else None, time_ms=float(t.wall_ms[-1]))
        )
    cells = {k: tuple(v) for k, v in cells.items()}
    return ResultMatrix(problems=tuple(problems), methods=tuple(methods), cells=cells)


# ---------------------------------------------------------------------------
# critical-difference ranking
# ---------------------------------------------------------------------------


def _ranks_from_keys(keys) -> list:
    """Average ranks for arbitrary sortable keys (exact ties share)."""
    k = len(keys)
    order = sorted(range(k), key=lambda i: keys[i])
    ranks = [0.0] * k
    i = 0
    while i < k:
        j = i
        while j + 1 < k and keys[order[j + 1]] == keys[order[i]]:
            j += 1
        for t in range(i, j + 1):
            ranks[order[t]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _method_problem_key(outcomes, metric: str):
    """Sortable score of one method on one problem.

    Performance: median final value over trials with infeasible trials
    counted as +inf; an infinite median ranks behind every finite one
    and ties among infinite medians break on the fraction of feasible
    trials (more feasible ranks better).  Time: median total wall time.
    """
    if metric == "time":
        med = float(np.median([o.time_ms for o in outcomes]))
        return (0, med)
    vals = np.array(
        [o.value if o.value is not None else np.inf for o in outcomes], dtype=float
    )
    med = float(np.median(vals))
    if math.isinf(med):
        feas_frac = float(np.mean(np.isfinite(vals)))
        return (1, -feas_frac)
    return (0, med)


def _maximal_cliques(n: int, adjacent) -> list:
    """Bron-Kerbosch without pivoting; fine for a handful of methods."""
    cliques = []

    def expand(r, p, x):
        if not p and not x:
            cliques.append(tuple(sorted(r)))
            return
        for v in list(p):
            expand(
                r | {v},
                {u for u in p if u != v and adjacent(u, v)},
                {u for u in x if u != v and adjacent(u, v)},
            )
            p.remove(v)
            x.add(v)

    expand(set(), set(range(n)), set())
    return cliques


@dataclass(frozen=True)
class RankReport:
    """Friedman + post-hoc comparison summary over a ResultMatrix."""

    metric: str
    alpha: float
    methods: tuple
    mean_ranks: dict
    per_problem_ranks: dict
    friedman_statistic: float
    friedman_p: float
    gate_passed: bool
    pairwise_raw: dict
    pairwise_adjusted: dict
    cliques: tuple

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "alpha": self.alpha,
            "methods": list(self.methods),
            "mean_ranks": dict(self.mean_ranks),
            "per_problem_ranks": {p: list(r) for p, r in self.per_problem_ranks.items()},
            "friedman_statistic": self.friedman_statistic,
            "friedman_p": self.friedman_p,
            "gate_passed": self.gate_passed,
            "pairwise_raw": {f"{a}|{b}": v for (a, b), v in self.pairwise_raw.items()},
            "pairwise_adjusted": {
                f"{a}|{b}": v for (a, b), v in self.pairwise_adjusted.items()
            },
            "cliques": [list(c) for c in self.cliques],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        """Plot-ready table: one row per method with rank and clique tag."""
        clique_of = {}
        for ci, members in enumerate(self.cliques):
            for m in members:
                clique_of.setdefault(m, []).append(ci)
        buf = io.StringIO()
        buf.write("method,mean_rank,cliques\n")
        for m in sorted(self.methods, key=lambda m: self.mean_ranks[m]):
            tags = ";".join(str(c) for c in clique_of.get(m, []))
            buf.write(f"{m},{self.mean_ranks[m]:.6g},{tags}\n")
        return buf.getvalue()


def critical_difference_ranking(
    matrix: ResultMatrix, metric: str = "performance", alpha: float = 0.05
) -> RankReport:
    """Rank methods across problems and group the indistinguishable ones.

    Per problem every method gets an average rank of its aggregated
    score (see _method_problem_key).  A Friedman test gates the
    post-hocs at ``alpha``: if it cannot reject, all methods form one
    clique.  Otherwise each method pair is compared by a Wilcoxon
    signed-rank test on the per-problem rank vectors, Holm-adjusted, and
    cliques are the maximal groups with no significant internal pair.
    """
    if metric not in ("performance", "time"):
        raise ValueError(f"unknown metric {metric!r}")
    if len(matrix.problems) < 2:
        raise ValueError("ranking needs at least two problems")
    methods = matrix.methods
    k = len(methods)
    per_problem = {}
    for p in matrix.problems:
        keys = [_method_problem_key(matrix.cells[(p, m)], metric) for m in methods]
        per_problem[p] = _ranks_from_keys(keys)
    rank_matrix = np.array([per_problem[p] for p in matrix.problems], dtype=float)
    mean_ranks = {m: float(rank_matrix[:, j].mean()) for j, m in enumerate(methods)}
    stat, p_value = friedman_test(rank_matrix, lower_is_better=True)
    gate = p_value < alpha

    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    raw, adjusted = {}, {}
    if gate:
        raw_list = []
        for i, j in pairs:
            try:
                pv = wilcoxon_signed_rank(rank_matrix[:, i], rank_matrix[:, j])
            except ValueError:
                # too few informative problems: cannot claim a difference
                pv = 1.0
            raw_list.append(pv)
        adj_list = holm_adjust(raw_list)
        for (i, j), pr, pa in zip(pairs, raw_list, adj_list):
            raw[(methods[i], methods[j])] = pr
            adjusted[(methods[i], methods[j])] = pa

        def similar(i, j):
            key = (methods[min(i, j)], methods[max(i, j)])
            return adjusted[key] >= alpha

        cliques = _maximal_cliques(k, similar)
    else:
        cliques = [tuple(range(k))]

    named = []
    for c in cliques:
        members = sorted((methods[i] for i in c), key=lambda m: (mean_ranks[m], m))
        named.append(tuple(members))
    named.sort(key=lambda c: (min(mean_ranks[m] for m in c), c))
    return RankReport(
        metric=metric,
        alpha=alpha,
        methods=methods,
        mean_ranks=mean_ranks,
        per_problem_ranks={p: tuple(r) for p, r in per_problem.items()},
        friedman_statistic=stat,
        friedman_p=p_value,
        gate_passed=gate,
        pairwise_raw=raw,
        pairwise_adjusted=adjusted,
        cliques=tuple(named),
    )


# ---------------------------------------------------------------------------
# fixed-budget reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodSummary:
    """Best-feasible distribution of one method at some budget."""

    method_id: str
    n_trials: int
    n_feasible: int
    values: tuple  # per-trial best feasible value, None when none found
    quartiles: tuple | None  # (min, q1, median, q3, max) over feasible trials

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "n_trials": self.n_trials,
            "n_feasible": self.n_feasible,
            "values": [None if v is None else float(v) for v in self.values],
            "quartiles": None if self.quartiles is None else list(self.quartiles),
        }


def _summarize(method_id: str, values: list) -> MethodSummary:
    feasible = np.array([v for v in values if v is not None], dtype=float)
    if feasible.size:
        q = np.percentile(feasible, [0, 25, 50, 75, 100])
        quartiles = tuple(float(v) for v in q)
    else:
        quartiles = None
    return MethodSummary(
        method_id=method_id,
        n_trials=len(values),
        n_feasible=int(feasible.size),
        values=tuple(values),
        quartiles=quartiles,
    )


def _group_by_method(traces) -> dict:
    if not traces:
        raise ValueError("no traces given")
    pids = {t.problem_id for t in traces}
    if len(pids) != 1:
        raise ValueError(f"traces span multiple problems: {sorted(pids)}")
    groups = {}
    for t in traces:
        groups.setdefault(t.method_id, []).append(t)
    for ts in groups.values():
        ts.sort(key=lambda t: (t.trial, t.seed))
    return groups


@dataclass(frozen=True)
class BudgetReport:
    """Per-method summaries for one problem at a shared budget."""

    problem_id: str
    budget_kind: str  # "iteration" or "runtime"
    budget: float
    summaries: dict
    trial_budgets_ms: tuple = ()

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "budget_kind": self.budget_kind,
            "budget": self.budget,
            "summaries": {m: s.to_dict() for m, s in self.summaries.items()},
            "trial_budgets_ms": [float(b) for b in self.trial_budgets_ms],
        }

    def to_json(self) -> str:
        # json.dumps would emit the non-standard Infinity literal for an
        # unlimited budget; substitute a portable string representation.
        d = self.to_dict()
        if math.isinf(d["budget"]):
            d["budget"] = "inf"
        d["trial_budgets_ms"] = [
            "inf" if math.isinf(b) else b for b in d["trial_budgets_ms"]
        ]
        return json.dumps(d, indent=2, sort_keys=True, allow_nan=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("method,n_trials,n_feasible,min,q1,median,q3,max\n")
        for m in sorted(self.summaries):
            s = self.summaries[m]
            q = s.quartiles or (float("nan"),) * 5
            buf.write(
                f"{m},{s.n_trials},{s.n_feasible},"
                + ",".join(f"{v:.10g}" for v in q)
                + "\n"
            )
        return buf.getvalue()


def fixed_iteration_report(traces, k: int) -> BudgetReport:
    """Best feasible value per trial after exactly ``k`` iterations.

    ``k = 0`` summarizes the initial designs alone; otherwise row
    ``n_init + k - 1`` of each trace is read, so ``k`` must not exceed
    any trace's iteration count.
    """
    groups = _group_by_method(traces)
    if k < 0:
        raise ValueError("iteration budget must be >= 0")
    summaries = {}
    for m, ts in groups.items():
        values = []
        for t in ts:
            if k > t.n_iter:
                raise ValueError(f"trace {t.method_id}/{t.seed} has only {t.n_iter} iterations")
            v = float(t.incumbent_f[t.n_init + k - 1])
            values.append(v if math.isfinite(v) else None)
        summaries[m] = _summarize(m, values)
    return BudgetReport(
        problem_id=traces[0].problem_id,
        budget_kind="iteration",
        budget=float(k),
        summaries=summaries,
    )


def fixed_runtime_report(traces, budget_ms: float | None = None) -> BudgetReport:
    """Best feasible value per trial within a shared wall-time budget.

    With ``budget_ms`` omitted the budget of trial t is the smallest
    total trace time any method needed for that trial, so every method
    is cut off where the fastest one finished.  Each trial reports the
    incumbent of the last row completed within the budget, or no value
    when no feasible point was found by then.  An infinite budget
    reproduces the fixed-iteration report at the final iteration.
    """
    groups = _group_by_method(traces)
    methods = sorted(groups)
    trial_ids = [tuple(t.trial for t in groups[m]) for m in methods]
    if len(set(trial_ids)) != 1:
        raise ValueError("methods disagree on trial indices; cannot pair trials")
    n_trials = len(trial_ids[0])
    if budget_ms is None:
        budgets = [
            min(float(groups[m][i].wall_ms[-1]) for m in methods)
            for i in range(n_trials)
        ]
    else:
        budgets = [float(budget_ms)] * n_trials
    summaries = {}
    for m in methods:
        values = []
        for i, t in enumerate(groups[m]):
            idx = int(np.searchsorted(t.wall_ms, budgets[i], side="right")) - 1
            if idx < 0:
                values.append(None)
                continue
            v = float(t.incumbent_f[idx])
            values.append(v if math.isfinite(v) else None)
        summaries[m] = _summarize(m, values)
    return BudgetReport(
        problem_id=traces[0].problem_id,
        budget_kind="runtime",
        budget=float("inf") if budget_ms is None else float(budget_ms),
        summaries=summaries,
        trial_budgets_ms=tuple(budgets),
    )


# ---------------------------------------------------------------------------
# Pareto ranks
# ---------------------------------------------------------------------------


def pareto_rank(points) -> np.ndarray:
    """Nondominated-sorting ranks for (time, value) pairs, both minimized.

    Rank 1 is the Pareto front; removing it exposes rank 2, and so on.
    A point dominates another when it is no worse in both coordinates
    and strictly better in at least one.  Duplicates share their rank.
    None values (no feasible outcome) are treated as +inf.
    """
    pts = np.array(
        [
            [float(t), float("inf") if v is None else float(v)]
            for t, v in points
        ],
        dtype=float,
    )
    n = pts.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int)
    ranks = np.zeros(n, dtype=int)
    remaining = np.arange(n)
    current = 1
    while remaining.size:
        sub = pts[remaining]
        nondominated = []
        for i in range(len(remaining)):
            le = (sub[:, 0] <= sub[i, 0]) & (sub[:, 1] <= sub[i, 1])
            lt = (sub[:, 0] < sub[i, 0]) | (sub[:, 1] < sub[i, 1])
            if not np.any(le & lt):
                nondominated.append(i)
        idx = remaining[nondominated]
        ranks[idx] = current
        mask = np.ones(remaining.size, dtype=bool)
        mask[nondominated] = False
        remaining = remaining[mask]
        current += 1
    return ranks
