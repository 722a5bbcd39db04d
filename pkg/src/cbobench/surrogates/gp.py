"""Gaussian-process regression: Matern-5/2 ARD kernel, constant mean,
inferred noise, log-marginal-likelihood fitting with analytic gradients.

Inputs are expected in the unit cube and targets standardized; the model
carries the output transform so predictions come back in original units
too. Hyperparameters are the best of R multi-start L-BFGS-B runs, so the
returned log marginal likelihood is never below that of any start point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from ..errors import GPNumericalError
from ..sampling import stream

SQRT5 = math.sqrt(5.0)

#: Total gp_fit invocations in this process; tests read and reset this to
#: verify the G+1 fit law of the GP-CEI path.
fit_call_count = 0


def reset_fit_counter() -> None:
    global fit_call_count
    fit_call_count = 0


@dataclass(frozen=True)
class GPConfig:
    restarts: int = 8
    max_opt_iter: int = 200
    lml_tol: float = 1e-6
    noise_floor: float = 1e-6
    jitter_max: float = 1e-4
    seed: int = 0
    mean_bounds: tuple = (-10.0, 10.0)
    signal_var_bounds: tuple = (1e-4, 1e4)
    lengthscale_bounds: tuple = (1e-3, 1e3)
    noise_var_bounds: tuple = (1e-6, 10.0)


@dataclass(frozen=True)
class GPModel:
    X: np.ndarray
    y: np.ndarray
    mean: float
    signal_var: float
    lengthscales: np.ndarray
    noise_var: float
    L: np.ndarray
    alpha: np.ndarray
    jitter: float
    lml: float
    start_lmls: tuple
    output_loc: float = 0.0
    output_scale: float = 1.0


@dataclass(frozen=True)
class GPPrediction:
    """Posterior moments at m queries, standardized and original units."""

    mean_s: np.ndarray
    std_s: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def _scaled_sqdists(A: np.ndarray, B: np.ndarray, lengthscales: np.ndarray):
    # (i,k,j) tensor of ((a_ij - b_kj)/l_j)^2, summed over j for r^2
    diff = (A[:, None, :] - B[None, :, :]) / lengthscales[None, None, :]
    return diff * diff


def matern52(A, B, signal_var, lengthscales):
    d2 = _scaled_sqdists(A, B, lengthscales).sum(axis=2)
    r = np.sqrt(np.maximum(d2, 0.0))
    return signal_var * (1.0 + SQRT5 * r + (5.0 / 3.0) * d2) * np.exp(-SQRT5 * r)


def _chol_with_jitter(K: np.ndarray, jitter_max: float):
    jitter = 0.0
    while True:
        try:
            L = cholesky(K + jitter * np.eye(K.shape[0]), lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            pass
        jitter = 1e-10 if jitter == 0.0 else jitter * 100.0
        if jitter > jitter_max:
            raise GPNumericalError(
                "kernel matrix is not positive definite even with jitter "
                f"{jitter_max:g}; data may contain duplicate rows or the "
                "noise variance collapsed"
            )


def _unpack(theta: np.ndarray, d: int):
    m = theta[0]
    signal_var = math.exp(theta[1])
    lengthscales = np.exp(theta[2 : 2 + d])
    noise_var = math.exp(theta[2 + d])
    return m, signal_var, lengthscales, noise_var


def _neg_lml_and_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray, cfg: GPConfig):
    n, d = X.shape
    m, signal_var, lengthscales, noise_var = _unpack(theta, d)
    sq = _scaled_sqdists(X, X, lengthscales)
    d2 = sq.sum(axis=2)
    r = np.sqrt(np.maximum(d2, 0.0))
    expo = np.exp(-SQRT5 * r)
    K_signal = signal_var * (1.0 + SQRT5 * r + (5.0 / 3.0) * d2) * expo
    K = K_signal + noise_var * np.eye(n)
    try:
        L, _ = _chol_with_jitter(K, cfg.jitter_max)
    except GPNumericalError:
        return 1e25, np.zeros_like(theta)
    resid = y - m
    alpha = cho_solve((L, True), resid)
    lml = (
        -0.5 * float(resid @ alpha)
        - float(np.log(np.diag(L)).sum())
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    Kinv = cho_solve((L, True), np.eye(n))
    A = np.outer(alpha, alpha) - Kinv
    grad = np.empty_like(theta)
    grad[0] = float(alpha.sum())
    grad[1] = 0.5 * float(np.sum(A * K_signal))
    # d k / d log l_j = signal_var * (5/3) (1 + sqrt5 r) exp(-sqrt5 r) * sq_j
    common = 0.5 * A * (signal_var * (5.0 / 3.0) * (1.0 + SQRT5 * r) * expo)
    for j in range(d):
        grad[2 + j] = float(np.sum(common * sq[:, :, j]))
    grad[2 + d] = 0.5 * noise_var * float(np.trace(A))
    return -lml, -grad


def _lml_only(theta, X, y, cfg):
    v, _ = _neg_lml_and_grad(theta, X, y, cfg)
    return -v


def _build_model(theta, X, y, cfg, start_lmls, output_loc, output_scale):
    n, d = X.shape
    m, signal_var, lengthscales, noise_var = _unpack(theta, d)
    K = matern52(X, X, signal_var, lengthscales) + noise_var * np.eye(n)
    L, jitter = _chol_with_jitter(K, cfg.jitter_max)
    resid = y - m
    alpha = cho_solve((L, True), resid)
    lml = (
        -0.5 * float(resid @ alpha)
        - float(np.log(np.diag(L)).sum())
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    return GPModel(
        X=X,
        y=y,
        mean=float(m),
        signal_var=float(signal_var),
        lengthscales=lengthscales,
        noise_var=float(noise_var),
        L=L,
        alpha=alpha,
        jitter=jitter,
        lml=lml,
        start_lmls=tuple(start_lmls),
        output_loc=float(output_loc),
        output_scale=float(output_scale),
    )


def gp_fit(
    X: np.ndarray,
    y_std: np.ndarray,
    config: GPConfig = GPConfig(),
    warm_start: np.ndarray | None = None,
    output_loc: float = 0.0,
    output_scale: float = 1.0,
) -> GPModel:
    """Maximize the log marginal likelihood from R multi-start points.

    ``warm_start`` (a packed hyperparameter vector from ``model.theta``)
    is used as one extra start. A single-point dataset skips optimization
    and returns a prior-mean model with unit signal.
    """
    global fit_call_count
    fit_call_count += 1
    X = np.ascontiguousarray(X, dtype=float)
    y_std = np.ascontiguousarray(y_std, dtype=float)
    n, d = X.shape
    if y_std.shape != (n,):
        raise ValueError(f"y has shape {y_std.shape}, expected ({n},)")

    if n == 1:
        theta = pack_theta(float(y_std[0]), 1.0, np.ones(d), config.noise_floor)
        return _build_model(
            theta, X, y_std, config, (None,), output_loc, output_scale
        )

    lo = np.empty(d + 3)
    hi = np.empty(d + 3)
    lo[0], hi[0] = config.mean_bounds
    lo[1], hi[1] = np.log(config.signal_var_bounds)
    lo[2 : 2 + d], hi[2 : 2 + d] = np.log(config.lengthscale_bounds)
    lo[2 + d], hi[2 + d] = np.log(
        (max(config.noise_var_bounds[0], config.noise_floor), config.noise_var_bounds[1])
    )
    bounds = list(zip(lo, hi))

    starts = [pack_theta(0.0, 1.0, np.full(d, 0.5), 1e-2)]
    rng = stream("gp_fit_starts", n, d, config.seed)
    for _ in range(max(0, config.restarts - 1)):
        theta0 = np.empty(d + 3)
        theta0[0] = rng.uniform(-1.0, 1.0)
        theta0[1] = math.log(rng.uniform(0.1, 10.0))
        theta0[2 : 2 + d] = np.log(rng.uniform(0.05, 2.0, size=d))
        theta0[2 + d] = math.log(10.0 ** rng.uniform(-5, -1))
        starts.append(theta0)
    if warm_start is not None:
        starts.append(np.asarray(warm_start, dtype=float))
    starts = [np.clip(s, lo, hi) for s in starts]

    start_lmls = [_lml_only(s, X, y_std, config) for s in starts]
    best_theta, best_lml = None, -np.inf
    for s, s_lml in zip(starts, start_lmls):
        res = minimize(
            _neg_lml_and_grad,
            s,
            args=(X, y_std, config),
            method="L-BFGS-B",
            jac=True,
            bounds=bounds,
            options={"maxiter": config.max_opt_iter, "ftol": config.lml_tol},
        )
        cand_theta, cand_lml = res.x, -res.fun
        # the optimizer must never hand back something worse than its start
        if cand_lml < s_lml:
            cand_theta, cand_lml = s, s_lml
        if cand_lml > best_lml:
            best_theta, best_lml = cand_theta, cand_lml

    return _build_model(
        best_theta, X, y_std, config, start_lmls, output_loc, output_scale
    )


def gp_fit_fixed(
    X: np.ndarray,
    y_std: np.ndarray,
    mean: float,
    signal_var: float,
    lengthscales,
    noise_var: float,
    config: GPConfig = GPConfig(),
    output_loc: float = 0.0,
    output_scale: float = 1.0,
) -> GPModel:
    """Condition on data at explicitly given hyperparameters (no fitting)."""
    X = np.ascontiguousarray(X, dtype=float)
    y_std = np.ascontiguousarray(y_std, dtype=float)
    theta = pack_theta(mean, signal_var, np.asarray(lengthscales, dtype=float), noise_var)
    return _build_model(theta, X, y_std, config, (None,), output_loc, output_scale)


def pack_theta(mean, signal_var, lengthscales, noise_var) -> np.ndarray:
    return np.concatenate(
        [[mean, math.log(signal_var)], np.log(lengthscales), [math.log(noise_var)]]
    )


def model_theta(model: GPModel) -> np.ndarray:
    """Packed hyperparameters, usable as a warm start for the next refit."""
    return pack_theta(
        model.mean, model.signal_var, model.lengthscales, model.noise_var
    )


def gp_predict(model: GPModel, Xq: np.ndarray, std_floor: float = 1e-9) -> GPPrediction:
    """Latent-function posterior moments at the query rows."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    if Xq.shape[1] != model.X.shape[1]:
        raise ValueError(
            f"queries have dimension {Xq.shape[1]}, model expects {model.X.shape[1]}"
        )
    k_star = matern52(Xq, model.X, model.signal_var, model.lengthscales)
    mean_s = model.mean + k_star @ model.alpha
    v = solve_triangular(model.L, k_star.T, lower=True)
    var_s = model.signal_var - np.einsum("ij,ij->j", v, v)
    std_s = np.sqrt(np.maximum(var_s, std_floor * std_floor))
    return GPPrediction(
        mean_s=mean_s,
        std_s=std_s,
        mean=model.output_loc + model.output_scale * mean_s,
        std=model.output_scale * std_s,
    )
