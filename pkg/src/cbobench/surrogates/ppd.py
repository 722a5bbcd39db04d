"""Fit-free predictive-distribution surrogate path.

One ``ppd_predict`` call serves the objective and every constraint for the
whole candidate batch at once: the engine's PPD methods therefore perform
exactly one inference per iteration no matter how many constraints the
problem has. The surrogate itself is frozen; per-call work depends only on
the dataset passed in.

The reference surrogate is a distance-kernel weighted Gaussian: at each
query it takes the Nadaraya-Watson weighted mean and weighted residual
variance of the observed targets plus a variance floor, then discretizes
that Gaussian onto a fixed per-target bucket grid. The objective's floor
is a small static fraction of the target spread; constraint floors widen
with the query's distance to the nearest observation so that feasibility
mass never collapses to a confident zero in unexplored regions. It is a
deliberately simple stand-in wearing the same interface a pre-trained
amortized predictor would; the external adapter hosts real ones.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .distributions import PredictiveDistribution, bucket_grid, bucketize_gaussian

TARGETS_OBJECTIVE = "objective"
TARGETS_ALL = "objective+constraints"


@dataclass(frozen=True)
class PPDBatch:
    """Bucketed predictive distributions for m queries x T targets.

    Target 0 is the objective; targets 1..G are the constraints (present
    only when requested). ``edges`` is (T, B+1), ``probs`` is (m, T, B).
    """

    edges: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        edges.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "probs", probs)
        assert probs.ndim == 3 and edges.ndim == 2
        assert edges.shape == (probs.shape[1], probs.shape[2] + 1)

    @property
    def n_queries(self) -> int:
        return self.probs.shape[0]

    @property
    def n_targets(self) -> int:
        return self.probs.shape[1]

    def midpoints(self, target: int) -> np.ndarray:
        e = self.edges[target]
        return 0.5 * (e[:-1] + e[1:])

    def distribution(self, query: int, target: int) -> PredictiveDistribution:
        return PredictiveDistribution(
            kind="bucketed", edges=self.edges[target], probs=self.probs[query, target]
        )


def _target_matrix(D: Dataset, targets: str) -> np.ndarray:
    if targets == TARGETS_OBJECTIVE:
        return D.y[:, None]
    if targets == TARGETS_ALL:
        return np.column_stack([D.y, D.g_mat])
    raise ValueError(
        f"targets must be {TARGETS_OBJECTIVE!r} or {TARGETS_ALL!r}, got {targets!r}"
    )


class ReferencePPDSurrogate:
    """Nadaraya-Watson weighted-Gaussian predictor over bucket grids."""

    def __init__(self, bucket_count: int = 1000, bandwidth_rule="scott"):
        if bucket_count < 10:
            raise ValueError(f"bucket_count must be >= 10, got {bucket_count}")
        if not (bandwidth_rule in ("median", "scott") or isinstance(bandwidth_rule, (int, float))):
            raise ValueError(f"unknown bandwidth_rule: {bandwidth_rule!r}")
        self.bucket_count = int(bucket_count)
        self.bandwidth_rule = bandwidth_rule
        self.inference_call_count = 0

    def state_hash(self) -> str:
        # the inference counter is bookkeeping, not model state
        tag = f"reference-nw|{self.bucket_count}|{self.bandwidth_rule}"
        return hashlib.sha256(tag.encode()).hexdigest()

    def _bandwidth(self, X: np.ndarray) -> float:
        if isinstance(self.bandwidth_rule, (int, float)):
            return max(float(self.bandwidth_rule), 1e-6)
        n, d = X.shape
        if self.bandwidth_rule == "scott":
            col_sd = np.maximum(X.std(axis=0), 0.05)
            return float(n ** (-1.0 / (d + 4)) * col_sd.mean())
        if n == 1:
            return 0.5
        diff = X[:, None, :] - X[None, :, :]
        dists = np.sqrt((diff * diff).sum(axis=2))
        iu = np.triu_indices(n, k=1)
        return max(float(np.median(dists[iu])), 1e-6)

    def predict(self, D: Dataset, targets: str, Xq: np.ndarray) -> PPDBatch:
        if D.n == 0:
            raise ValueError("reference surrogate needs at least one observation")
        self.inference_call_count += 1
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        Y = _target_matrix(D, targets)
        n, T = Y.shape
        B = self.bucket_count

        h = self._bandwidth(D.X)
        diff = Xq[:, None, :] - D.X[None, :, :]
        sqd = (diff * diff).sum(axis=2)
        W = np.exp(-0.5 * sqd / (h * h))
        wsum = W.sum(axis=1, keepdims=True)
        # a query far from every observation gets the plain empirical mixture
        far = wsum[:, 0] <= 1e-300
        if np.any(far):
            W[far] = 1.0
            wsum[far] = n
        W = W / wsum

        mu = W @ Y
        second = W @ (Y * Y)
        var = np.maximum(second - mu * mu, 0.0)

        # Constraint floors are distance-aware: local residual variance alone
        # is overconfident off-data (neighbors can all sit on one side of a
        # sharp constraint boundary), and a hard-zero feasibility probability
        # annihilates any product-form acquisition at that candidate. The
        # floor therefore ramps from 1% of the global target spread on-data
        # to the full spread one bandwidth away -- the scale the empirical-
        # mixture fallback uses. The objective target keeps the tight static
        # floor: improvement scores degrade gracefully without it.
        d_near = np.sqrt(sqd.min(axis=1))
        reach = np.clip(d_near / h, 0.01, 1.0)

        edges = np.empty((T, B + 1))
        probs = np.empty((Xq.shape[0], T, B))
        for t in range(T):
            sd_t = float(Y[:, t].std())
            scale_floor = 1e-5 * max(1.0, abs(float(Y[:, t].mean())))
            if t == 0:
                floor = np.maximum(1e-9, max(1e-2 * sd_t, scale_floor))
            else:
                floor = np.maximum(1e-9, np.maximum(reach * sd_t, scale_floor))
            std_t = np.sqrt(var[:, t] + floor * floor)
            edges[t] = bucket_grid(Y[:, t], B)
            probs[:, t, :] = bucketize_gaussian(mu[:, t], std_t, edges[t])
        return PPDBatch(edges=edges, probs=probs)


def reference_ppd_surrogate(bucket_count: int = 1000, bandwidth_rule="scott"):
    return ReferencePPDSurrogate(bucket_count=bucket_count, bandwidth_rule=bandwidth_rule)


def ppd_predict(surrogate, D: Dataset, targets: str, Xq: np.ndarray) -> PPDBatch:
    """One batched inference for all queries and all requested targets."""
    return surrogate.predict(D, targets, Xq)
