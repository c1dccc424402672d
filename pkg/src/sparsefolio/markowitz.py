"""Minimum-variance portfolio at a target return (the unregularized baseline)."""
from __future__ import annotations

import math

import numpy as np

from .errors import InfeasibleTarget, SingularCovariance
from .transform import Moments, PortfolioWeights


def _prepare_sigma(sigma: np.ndarray) -> np.ndarray:
    S = 0.5 * (sigma + sigma.T)
    p = S.shape[0]
    try:
        np.linalg.cholesky(S)
        return S
    except np.linalg.LinAlgError:
        pass
    delta = 1e-10 * max(float(np.trace(S)) / p, 1e-300)
    S = S + delta * np.eye(p)
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise SingularCovariance("covariance is not positive definite even after jitter") from None
    return S


def _kkt_solve(S, A, b, free):
    """Minimize w'Sw s.t. A w = b with w fixed at 0 outside ``free``.

    Returns (w, multipliers).  Uses least squares on the KKT system so
    redundant equality rows on small free sets are tolerated.
    """
    p = S.shape[0]
    f = np.asarray(free, dtype=int)
    m = A.shape[0]
    n = f.size
    K = np.zeros((n + m, n + m))
    K[:n, :n] = 2 * S[np.ix_(f, f)]
    K[:n, n:] = A[:, f].T
    K[n:, :n] = A[:, f]
    rhs = np.concatenate([np.zeros(n), b])
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    w = np.zeros(p)
    w[f] = sol[:n]
    nu = -sol[n:]  # gradient 2Sw = A' nu on the free block
    return w, nu


def markowitz_qp(moments: Moments, rho: float, long_only: bool = False, assets=None,
                 max_iter: int = 500) -> PortfolioWeights:
    """Minimize ``w'Σw`` subject to ``μ'w = rho``, ``1'w = 1`` and optionally ``w >= 0``.

    The equality-only problem is the 2-multiplier KKT system.  The long-only
    problem runs a primal active-set method over the nonnegativity bounds,
    starting from a two-asset feasible point.
    """
    mu = np.asarray(moments.mu, dtype=float)
    p = mu.size
    assets = tuple(assets) if assets is not None else tuple(f"A{i}" for i in range(p))
    S = _prepare_sigma(np.asarray(moments.sigma, dtype=float))
    A = np.vstack([mu, np.ones(p)])
    b = np.array([rho, 1.0])
    scale = max(float(np.max(np.abs(mu))), 1e-300)
    tol = 1e-12 * scale

    if not long_only:
        if p == 1:
            if abs(mu[0] - rho) > tol:
                raise InfeasibleTarget(f"single asset cannot reach rho={rho}")
            w = np.ones(1)
        else:
            if np.ptp(mu) <= tol:
                raise InfeasibleTarget("all expected returns equal; return constraint is degenerate")
            w, _ = _kkt_solve(S, A, b, np.arange(p))
        return PortfolioWeights(_renorm(w), assets, "qp", {"rho": rho, "long_only": False})

    lo, hi = float(mu.min()), float(mu.max())
    if rho < lo - tol or rho > hi + tol:
        raise InfeasibleTarget(f"rho={rho} outside attainable range [{lo}, {hi}] for long-only")

    # feasible start: one asset at/below rho, one at/above, mixed to hit rho exactly
    w = np.zeros(p)
    exact = np.flatnonzero(np.abs(mu - rho) <= tol)
    if exact.size:
        i = int(exact[np.argmin(np.diag(S)[exact])])
        w[i] = 1.0
        free = [i]
    else:
        below = np.flatnonzero(mu < rho)
        above = np.flatnonzero(mu > rho)
        i = int(below[np.argmax(mu[below])])
        j = int(above[np.argmin(mu[above])])
        t = (rho - mu[i]) / (mu[j] - mu[i])
        w[i], w[j] = 1 - t, t
        free = sorted([i, j])

    for _ in range(max_iter):
        target, nu = _kkt_solve(S, A, b, free)
        step = target - w
        if np.max(np.abs(step)) <= 1e-14:
            grad = 2 * S @ w
            gamma = grad - A.T @ nu
            bound = [i for i in range(p) if i not in free]
            if not bound:
                break
            gb = gamma[bound]
            worst = int(np.argmin(gb))
            if gb[worst] >= -1e-12 * max(1.0, float(np.max(np.abs(grad)))):
                break
            free = sorted(free + [bound[worst]])
            continue
        alpha, block = 1.0, None
        for i in free:
            if step[i] < 0:
                a = -w[i] / step[i]
                if a < alpha:
                    alpha, block = a, i
        w = w + alpha * step
        if block is not None:
            w[block] = 0.0
            free = [i for i in free if i != block]
    else:
        raise RuntimeError("active-set iteration did not converge")

    w = np.where(w < 0, 0.0, w)
    return PortfolioWeights(_renorm(w), assets, "qp", {"rho": rho, "long_only": True})


def _renorm(w: np.ndarray) -> np.ndarray:
    # remove the last few ulps of budget drift
    return w / math.fsum(w)


def portfolio_variance(sigma, w) -> float:
    return float(w @ sigma @ w)
