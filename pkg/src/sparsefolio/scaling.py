"""Column standardization shared by every solver.

Solvers centre the design and the target and rescale each column before
fitting; coefficients are reported on the raw scale.  No intercept is
returned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDesign


@dataclass(frozen=True)
class Standardization:
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float

    @classmethod
    def fit(cls, X, y, mode: str = "norm") -> "Standardization":
        """``mode="norm"`` gives unit-norm columns, ``"std"`` unit standard deviation."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        x_mean = X.mean(axis=0)
        norms = np.linalg.norm(X - x_mean, axis=0)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(X))) if X.size else 1.0) * np.sqrt(max(X.shape[0], 1))
        bad = np.flatnonzero(norms <= tol)
        if bad.size:
            raise DegenerateDesign(f"column {int(bad[0])} has zero norm after centring")
        if mode == "norm":
            scale = norms
        elif mode == "std":
            scale = norms / np.sqrt(X.shape[0])
        else:
            raise ValueError(f"unknown standardization mode {mode!r}")
        return cls(x_mean, scale, float(y.mean()))

    @classmethod
    def identity(cls, k: int) -> "Standardization":
        return cls(np.zeros(k), np.ones(k), 0.0)

    def transform(self, X, y=None):
        Xs = (np.asarray(X, dtype=float) - self.x_mean) / self.x_scale
        if y is None:
            return Xs
        return Xs, np.asarray(y, dtype=float) - self.y_mean

    def to_raw(self, b):
        """Map standardized coefficients (last axis) back to the raw column scale."""
        return np.asarray(b, dtype=float) / self.x_scale

    def to_std(self, beta):
        return np.asarray(beta, dtype=float) * self.x_scale


def prepare(X, y, standardize: bool = True, mode: str = "norm"):
    """Return ``(Xs, ys, Standardization)``; identity transform when disabled."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"design {X.shape} and target {y.shape} do not conform")
    if standardize:
        st = Standardization.fit(X, y, mode)
    else:
        st = Standardization.identity(X.shape[1])
    Xs, ys = st.transform(X, y)
    return Xs, ys, st
