"""Observed-data container shared by both surrogate paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def standardize(values: np.ndarray) -> tuple[np.ndarray, float, float]:
    """(values - mean)/std with std := 1 when all values are equal."""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    std = float(values.std())
    if std <= 0.0:
        std = 1.0
    return (values - mean) / std, mean, std


@dataclass(frozen=True)
class Dataset:
    """Immutable snapshot of all evaluations so far.

    ``X`` lives in the unit cube (surrogate coordinates); ``raw_X`` in
    problem units. ``append`` returns a new snapshot, so a fitted model's
    reference to its training arrays can never be invalidated.
    """

    X: np.ndarray
    raw_X: np.ndarray
    y: np.ndarray
    g_mat: np.ndarray

    def __post_init__(self):
        for name in ("X", "raw_X", "y", "g_mat"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.X.shape[0]
        assert self.raw_X.shape[0] == n and self.y.shape == (n,)
        assert self.g_mat.shape[0] == n and self.g_mat.ndim == 2

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n_constraints(self) -> int:
        return self.g_mat.shape[1]

    @property
    def feasible_mask(self) -> np.ndarray:
        return np.max(self.g_mat, axis=1) <= 0.0

    def standardized_y(self) -> tuple[np.ndarray, float, float]:
        return standardize(self.y)

    def standardized_g(self, j: int) -> tuple[np.ndarray, float, float]:
        return standardize(self.g_mat[:, j])

    def append(self, x_unit, x_raw, f: float, g) -> "Dataset":
        return Dataset(
            X=np.vstack([self.X, np.asarray(x_unit, dtype=float)[None, :]]),
            raw_X=np.vstack([self.raw_X, np.asarray(x_raw, dtype=float)[None, :]]),
            y=np.append(self.y, float(f)),
            g_mat=np.vstack([self.g_mat, np.asarray(g, dtype=float)[None, :]]),
        )
