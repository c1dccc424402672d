"""Cyclic coordinate descent for the lasso, and the elastic net built on it."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BadOmega, InvalidConfig, NoConvergence
from .scaling import prepare


def lambda_max(design, target, standardize: bool = True) -> float:
    """Smallest penalty at which the lasso solution is identically zero."""
    Xs, ys, _ = prepare(design, target, standardize)
    return float(np.max(np.abs(Xs.T @ ys))) / Xs.shape[0]


def _cd_gram(G, cvec, n, lam, pf, b, tol, max_sweeps):
    k = b.size
    grad = cvec - G @ b  # x_j'(y - Xb) for every j
    diag = np.diag(G).copy()
    thresh = n * lam * pf
    sweeps = 0
    converged = False
    coords = range(k)
    while sweeps < max_sweeps:
        sweeps += 1
        max_change = 0.0
        for j in coords:
            bj = b[j]
            z = grad[j] + diag[j] * bj
            if z > thresh[j]:
                new = (z - thresh[j]) / diag[j]
            elif z < -thresh[j]:
                new = (z + thresh[j]) / diag[j]
            else:
                new = 0.0
            delta = new - bj
            if delta != 0.0:
                b[j] = new
                grad -= delta * G[:, j]
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change < tol:
            converged = True
            break
    return b, sweeps, converged


def coord_descent(design, target, lam: float, standardize: bool = True, penalty_factor=None,
                  tol: float = 1e-10, max_sweeps: int = 100_000, warm_start=None) -> np.ndarray:
    """Minimize ``||y - X b||^2 / (2T) + lam * sum(pf_j |b_j|)``.

    The penalty acts on the standardized coefficients (unit-norm centred
    columns, same space as :func:`lars_path`), so ``lam = knot / T`` matches a
    LARS knot.  Returns raw-scale coefficients.  If the sweep cap is hit a
    :class:`NoConvergence` warning is issued and the last iterate returned.
    """
    if not lam >= 0:
        raise ValueError(f"penalty must be >= 0, got {lam!r}")
    Xs, ys, st = prepare(design, target, standardize)
    T, k = Xs.shape
    pf = np.ones(k) if penalty_factor is None else np.asarray(penalty_factor, dtype=float)
    if pf.shape != (k,) or np.any(pf < 0):
        raise ValueError("penalty_factor must be a nonnegative length-k vector")
    G = Xs.T @ Xs
    cvec = Xs.T @ ys
    b = np.zeros(k) if warm_start is None else st.to_std(warm_start).astype(float)
    b, sweeps, converged = _cd_gram(G, cvec, T, float(lam), pf, b, tol, max_sweeps)
    if not converged:
        warnings.warn(f"coordinate descent hit the {max_sweeps}-sweep cap", NoConvergence, stacklevel=2)
    return st.to_raw(b)


@dataclass(frozen=True)
class ElasticNetConfig:
    """Penalty ``lambda2 * b' omega b + lambda1 * ||b||_1``.

    ``omega`` is the belief *precision* (the inverse of the view-uncertainty
    matrix); ``None`` means identity.
    """
    lambda1: float = 0.0
    lambda2: float = 0.0
    omega: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (self.lambda1 >= 0 and self.lambda2 >= 0):
            raise InvalidConfig(f"elastic-net weights must be >= 0, got {self.lambda1}, {self.lambda2}")
        if self.omega is not None:
            om = np.array(self.omega, dtype=float)
            if om.ndim != 2 or om.shape[0] != om.shape[1]:
                raise BadOmega(f"omega must be square, got shape {om.shape}")
            if not np.allclose(om, om.T, rtol=1e-10, atol=1e-12):
                raise BadOmega("omega is not symmetric")
            try:
                np.linalg.cholesky(om)
            except np.linalg.LinAlgError:
                raise BadOmega("omega is not positive definite") from None
            om.setflags(write=False)
            object.__setattr__(self, "omega", om)

    def omega_for(self, k: int) -> np.ndarray:
        if self.omega is None:
            return np.eye(k)
        if self.omega.shape != (k, k):
            raise BadOmega(f"omega is {self.omega.shape}, design has {k} columns")
        return self.omega


def elastic_net_solve(design, target, config: ElasticNetConfig, standardize: bool = True,
                      tol: float = 1e-10, max_sweeps: int = 100_000) -> np.ndarray:
    """Minimize ``||y - X b||^2 + lambda2 b'Ωb + lambda1 ||b||_1`` on the raw coefficient scale.

    The quadratic term is folded into the least-squares part by appending
    ``sqrt(lambda2) * L'`` rows (``Ω = L L'``) with zero targets; the result
    is a plain lasso handed to :func:`coord_descent`.  ``standardize`` only
    centres the data; the column rescaling used internally is undone exactly,
    so the penalty applies to raw coefficients.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(target, dtype=float)
    T, k = X.shape
    M = config.omega_for(k)
    if standardize:
        Xc, yc, st = prepare(X, y, True)
        s = st.x_scale
    else:
        Xc, yc, s = X, y, np.ones(k)
    L = np.linalg.cholesky(M)
    aug = np.sqrt(config.lambda2) * (L.T / s[None, :])
    Xa = np.vstack([Xc, aug])
    ya = np.concatenate([yc, np.zeros(k)])
    n = Xa.shape[0]
    b = coord_descent(Xa, ya, config.lambda1 / (2 * n), standardize=False,
                      penalty_factor=1.0 / s, tol=tol, max_sweeps=max_sweeps)
    return b / s


def elastic_net_objective(design, target, beta, config: ElasticNetConfig) -> float:
    X = np.asarray(design, dtype=float)
    r = np.asarray(target, dtype=float) - X @ beta
    M = config.omega_for(X.shape[1])
    return float(r @ r + config.lambda2 * beta @ M @ beta + config.lambda1 * np.sum(np.abs(beta)))
