"""Acquisition machinery: penalty transform with its schedule, expected
improvement and probability of feasibility in Gaussian and bucketed form,
and the two constrained-EI compositions.

Conventions: minimization throughout; a constraint is satisfied when its
value is <= 0; every function here is pure (the two small state types are
replaced, never mutated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .problems import EvalResult

RHO_GROWTH = 1.5
RHO_STALL_LIMIT = 5


@dataclass(frozen=True)
class PenaltyState:
    """Penalty factor and the stall counter driving its schedule."""

    rho: float = 1.0
    stall_count: int = 0

    def __post_init__(self):
        assert self.rho >= 1.0 and self.stall_count >= 0


@dataclass(frozen=True)
class Incumbent:
    """Best observed objective under the feasibility rule.

    Until any feasible point is seen, f_star tracks the unconstrained
    minimum (flagged by feasible_found=False); afterwards it is the best
    feasible objective and never increases.
    """

    f_star: float = math.inf
    feasible_found: bool = False
    location: np.ndarray | None = None


def penalty_transform(f, g, rho: float):
    """f_PF = f + rho * sum(max(0, g_i)^2); equals f when all g_i <= 0.

    Accepts a single (f, g-vector) pair or batched (f-vector, n x G matrix).
    """
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    g = np.asarray(g, dtype=float)
    viol = np.maximum(0.0, g)
    if g.ndim == 1:
        return float(f) + rho * float(np.dot(viol, viol))
    return np.asarray(f, dtype=float) + rho * np.sum(viol * viol, axis=1)


def update_rho(state: PenaltyState, improved: bool) -> PenaltyState:
    """Advance the schedule: reset on improvement, grow 1.5x per 5 stalls."""
    if improved:
        return PenaltyState(rho=state.rho, stall_count=0)
    stall = state.stall_count + 1
    if stall >= RHO_STALL_LIMIT:
        return PenaltyState(rho=state.rho * RHO_GROWTH, stall_count=0)
    return PenaltyState(rho=state.rho, stall_count=stall)


def _phi(z):
    # z*z may overflow to inf for extreme z; exp(-inf) = 0 is the right limit
    with np.errstate(over="ignore"):
        return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def expected_improvement_gaussian(f_star: float, mean, std):
    """EI = (f_star - mean) Phi(z) + std phi(z), z = (f_star - mean)/std.

    std = 0 degenerates to max(0, f_star - mean). Vectorizes over
    (mean, std) arrays.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if np.any(std < 0):
        raise ValueError("std must be >= 0")
    scalar = mean.ndim == 0 and std.ndim == 0
    mean, std = np.atleast_1d(mean), np.atleast_1d(std)
    ei = np.maximum(0.0, f_star - mean)
    pos = std > 0
    if np.any(pos):
        z = (f_star - mean[pos]) / std[pos]
        ei_pos = (f_star - mean[pos]) * ndtr(z) + std[pos] * _phi(z)
        ei = ei.copy()
        ei[pos] = np.maximum(0.0, ei_pos)
    return float(ei[0]) if scalar else ei


def expected_improvement_bucketed(f_star: float, edges, probs):
    """EI over a bucketed distribution: sum_k p_k max(0, f_star - c_k).

    ``probs`` may be (B,) or batched (n, B) over a shared edge grid.
    """
    edges = np.asarray(edges, dtype=float)
    probs = np.asarray(probs, dtype=float)
    mid = 0.5 * (edges[:-1] + edges[1:])
    gain = np.maximum(0.0, f_star - mid)
    if probs.ndim == 1:
        return float(np.dot(probs, gain))
    return probs @ gain


def prob_feasible_gaussian(g_mean, g_std):
    """P(g <= 0) = Phi(-mean/std); std = 0 degenerates to the indicator."""
    g_mean = np.asarray(g_mean, dtype=float)
    g_std = np.asarray(g_std, dtype=float)
    if np.any(g_std < 0):
        raise ValueError("std must be >= 0")
    scalar = g_mean.ndim == 0 and g_std.ndim == 0
    g_mean, g_std = np.atleast_1d(g_mean), np.atleast_1d(g_std)
    p = (g_mean <= 0.0).astype(float)
    pos = g_std > 0
    if np.any(pos):
        p = p.copy()
        p[pos] = ndtr(-g_mean[pos] / g_std[pos])
    return float(p[0]) if scalar else p


def prob_feasible_bucketed(edges, probs, threshold: float = 0.0):
    """Bucket mass at or below the threshold.

    Mass strictly below the straddling bucket counts fully; the straddling
    bucket contributes the fraction of its width below the threshold.
    ``probs`` may be (B,) or batched (n, B) over a shared edge grid.
    """
    edges = np.asarray(edges, dtype=float)
    probs = np.asarray(probs, dtype=float)
    B = edges.shape[0] - 1
    frac = np.zeros(B)
    below = edges[1:] <= threshold
    frac[below] = 1.0
    k = np.searchsorted(edges, threshold, side="right") - 1
    if 0 <= k < B:
        frac[k] = (threshold - edges[k]) / (edges[k + 1] - edges[k])
    if threshold >= edges[-1]:
        frac[:] = 1.0
    if probs.ndim == 1:
        return float(np.dot(probs, frac))
    return probs @ frac


def _feasibility_product(pfeas: np.ndarray):
    """Product over the last axis, in log space for G >= 5.

    Exact-zero factors short-circuit to 0 instead of feeding log(0).
    """
    G = pfeas.shape[-1]
    if G < 5:
        return np.prod(pfeas, axis=-1)
    zero = np.any(pfeas == 0.0, axis=-1)
    safe = np.where(pfeas == 0.0, 1.0, pfeas)
    out = np.exp(np.sum(np.log(safe), axis=-1))
    return np.where(zero, 0.0, out)


def cei(ei, pfeas) -> float | np.ndarray:
    """Constrained EI: ei * prod_i pfeas_i (empty product = ei)."""
    pfeas = np.asarray(pfeas, dtype=float)
    if pfeas.size == 0:
        return ei
    prod = _feasibility_product(pfeas)
    if pfeas.ndim == 1:
        return ei * float(prod)
    return np.asarray(ei) * prod


def cei_plus(ei, pfeas) -> float | np.ndarray:
    """CEI with saturated factors: ei * prod_i min(1, 2 pfeas_i) >= cei."""
    pfeas = np.asarray(pfeas, dtype=float)
    if pfeas.size == 0:
        return ei
    prod = _feasibility_product(np.minimum(1.0, 2.0 * pfeas))
    if pfeas.ndim == 1:
        return ei * float(prod)
    return np.asarray(ei) * prod


def incumbent_update(inc: Incumbent, new_eval: EvalResult, x) -> Incumbent:
    """Fold one evaluation into the incumbent under the feasibility rule."""
    x = np.asarray(x, dtype=float)
    if new_eval.feasible:
        if not inc.feasible_found or new_eval.f < inc.f_star:
            return Incumbent(f_star=new_eval.f, feasible_found=True, location=x)
        return inc
    if inc.feasible_found:
        return inc
    if new_eval.f < inc.f_star:
        return Incumbent(f_star=new_eval.f, feasible_found=False, location=x)
    return inc
