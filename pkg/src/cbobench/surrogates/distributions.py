"""Predictive-distribution containers and Gaussian-to-bucket bridging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr


@dataclass(frozen=True)
class PredictiveDistribution:
    """One predictive distribution, either Gaussian moments or bucketed mass.

    Bucketed form: ``edges`` has B+1 strictly increasing entries and
    ``probs`` holds B nonnegative bucket masses summing to 1 (± 1e-9).
    """

    kind: str
    mean: float | None = None
    std: float | None = None
    edges: np.ndarray | None = None
    probs: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            assert self.mean is not None and self.std is not None
            assert self.std >= 0.0
        elif self.kind == "bucketed":
            edges = np.asarray(self.edges, dtype=float)
            probs = np.asarray(self.probs, dtype=float)
            assert edges.ndim == 1 and probs.ndim == 1
            assert edges.shape[0] == probs.shape[0] + 1
            assert np.all(np.diff(edges) > 0.0), "edges must be strictly increasing"
            assert np.all(probs >= 0.0)
            assert abs(probs.sum() - 1.0) <= 1e-9, "bucket mass must sum to 1"
            edges.setflags(write=False)
            probs.setflags(write=False)
            object.__setattr__(self, "edges", edges)
            object.__setattr__(self, "probs", probs)
        else:
            raise ValueError(f"unknown distribution kind: {self.kind!r}")

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def bucketed_mean(self) -> float:
        return float(np.dot(self.probs, self.midpoints))


def gaussian(mean: float, std: float) -> PredictiveDistribution:
    return PredictiveDistribution(kind="gaussian", mean=float(mean), std=float(std))


def bucketed(edges, probs) -> PredictiveDistribution:
    return PredictiveDistribution(kind="bucketed", edges=edges, probs=probs)


def bucket_grid(values: np.ndarray, bucket_count: int) -> np.ndarray:
    """Equal-width edges spanning observed values ± 3 spreads.

    Spread is the population standard deviation of ``values``; a degenerate
    (constant) sample falls back to a small absolute spread so the edges
    stay strictly increasing.
    """
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    spread = float(values.std())
    if spread <= 0.0:
        spread = max(1e-6, 1e-3 * abs(lo))
    return np.linspace(lo - 3.0 * spread, hi + 3.0 * spread, bucket_count + 1)


def bucketize_gaussian(mean, std, edges: np.ndarray) -> np.ndarray:
    """Gaussian mass per bucket, tails folded into the end buckets.

    prob_k = Phi((e_{k+1}-mean)/std) - Phi((e_k-mean)/std) for the interior
    edges; the two outermost buckets absorb everything beyond the grid, so
    the result sums to exactly 1. Accepts scalar or vector (mean, std) and
    returns (B,) or (n, B) accordingly.
    """
    edges = np.asarray(edges, dtype=float)
    mean_arr = np.atleast_1d(np.asarray(mean, dtype=float))
    std_arr = np.atleast_1d(np.asarray(std, dtype=float))
    if np.any(std_arr <= 0.0):
        raise ValueError("bucketize_gaussian needs std > 0")
    # CDF at interior edges only; tails fold into the end buckets
    z = (edges[None, 1:-1] - mean_arr[:, None]) / std_arr[:, None]
    cdf = np.empty((mean_arr.shape[0], edges.shape[0]))
    cdf[:, 0] = 0.0
    cdf[:, -1] = 1.0
    cdf[:, 1:-1] = ndtr(z)
    probs = np.diff(cdf, axis=1)
    np.maximum(probs, 0.0, out=probs)
    probs /= probs.sum(axis=1, keepdims=True)
    if np.isscalar(mean) or np.ndim(mean) == 0:
        return probs[0]
    return probs
