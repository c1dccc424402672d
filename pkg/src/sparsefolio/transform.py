"""Turn a return panel into the regression the sparse solvers see.

Pipeline: sample moments -> eliminate the budget constraint by subtracting
the numeraire column -> tilt the target by the exponential (expected-return)
prior -> solve -> put the numeraire weight back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import dtrcon

from .errors import BadNumeraire, NonFiniteCoefficient, RankDeficient, SingularDesign, TooFewRows
from .market_data import ReturnPanel

# condition-number ceiling on the triangular factor before ridge jitter kicks in
COND_LIMIT = 1e12
JITTER_SCALE = 1e-8


@dataclass(frozen=True)
class Moments:
    mu: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class ReducedProblem:
    design: np.ndarray
    target: np.ndarray
    numeraire: int
    lam: float
    rho: float
    assets: tuple[str, ...] = ()
    mu_reduced: np.ndarray | None = None
    jittered: bool = False
    residual: np.ndarray | None = None

    @property
    def noisy_target(self) -> np.ndarray:
        """``target`` plus the part of the pre-tilt target orthogonal to the constant and the design.

        Centred, it has the same least-squares solution as ``target`` (every
        centred penalized objective shifts by a constant) but keeps the
        regression noise that the projection removes, which the samplers and
        noise-variance estimates need.
        """
        if self.residual is None:
            return self.target
        return self.target + self.residual

    @property
    def k(self) -> int:
        return self.design.shape[1]

    @property
    def other_assets(self) -> tuple[str, ...]:
        return tuple(a for i, a in enumerate(self.assets) if i != self.numeraire)

    def dumps(self) -> str:
        """Plain-text matrix dump used for debugging."""
        T, k = self.design.shape
        lines = [
            f"# reduced problem T={T} k={k}",
            f"numeraire={self.numeraire}",
            f"lambda={self.lam!r}",
            f"rho={self.rho!r}",
            f"jittered={int(self.jittered)}",
            "assets=" + ",".join(self.assets),
            "row,target," + ",".join(f"x{j}" for j in range(k)),
        ]
        for t in range(T):
            lines.append(",".join([str(t), repr(float(self.target[t]))]
                                  + [repr(float(v)) for v in self.design[t]]))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PortfolioWeights:
    weights: np.ndarray
    assets: tuple[str, ...]
    solver_tag: str = ""
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "assets", tuple(self.assets))
        if w.shape != (len(self.assets),):
            raise ValueError(f"{w.shape[0]} weights for {len(self.assets)} assets")
        if not np.all(np.isfinite(w)):
            raise NonFiniteCoefficient("portfolio weights must be finite")
        if abs(math.fsum(w) - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {math.fsum(w)!r}, not 1")

    @property
    def cardinality(self) -> int:
        return int(np.sum(np.abs(self.weights) > 1e-8))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.assets, map(float, self.weights)))


def sample_moments(panel: ReturnPanel | np.ndarray) -> Moments:
    """Column means and the unbiased (T-1) sample covariance."""
    R = panel.returns if isinstance(panel, ReturnPanel) else np.asarray(panel, dtype=float)
    T = R.shape[0]
    if T < 2:
        raise TooFewRows(f"sample moments need T >= 2, got {T}")
    mu = R.mean(axis=0)
    C = R - mu
    sigma = C.T @ C / (T - 1)
    sigma = 0.5 * (sigma + sigma.T)
    return Moments(mu, sigma)


def _cond_upper(Rf: np.ndarray) -> float:
    if Rf.shape[0] == 0:
        return 1.0
    if not np.all(np.isfinite(Rf)) or np.any(np.diag(Rf) == 0):
        return math.inf
    rcond, info = dtrcon(Rf, norm="1", uplo="U", diag="N")
    if info != 0 or rcond == 0:
        return math.inf
    return 1.0 / rcond


def conjugate_tilt(design, y, mu_reduced, lam: float, return_info: bool = False):
    """Target tilted by the exponential prior ``exp(-lam * mu'v)``.

    Returns ``X (X'X)^{-1} (X'y - lam * mu)`` computed from a thin QR
    factorization of ``X``; with ``lam=0`` this is the orthogonal projection of
    ``y`` onto the column space.

    If the triangular factor is worse conditioned than ``COND_LIMIT`` the
    normal equations get a ridge ``delta * I`` with
    ``delta = 1e-8 * trace(X'X) / k`` (factored as QR of ``[X; sqrt(delta) I]``).
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu_reduced, dtype=float)
    T, k = X.shape
    if k == 0:
        out = np.zeros(T)
        return (out, False) if return_info else out

    Q, Rf = np.linalg.qr(X, mode="reduced")
    jittered = False
    if _cond_upper(Rf) <= COND_LIMIT:
        z = sla.solve_triangular(Rf, lam * mu, trans="T", lower=False)
        out = Q @ (Q.T @ y - z)
    else:
        delta = JITTER_SCALE * float(np.sum(X * X)) / k
        Xa = np.vstack([X, math.sqrt(delta) * np.eye(k)])
        _, Ra = np.linalg.qr(Xa, mode="reduced")
        if _cond_upper(Ra) > COND_LIMIT:
            raise RankDeficient(f"design rank-deficient even after jitter delta={delta:g}")
        rhs = X.T @ y - lam * mu
        v = sla.solve_triangular(Ra, sla.solve_triangular(Ra, rhs, trans="T"))
        out = X @ v
        jittered = True
    return (out, jittered) if return_info else out


def reduce_problem(panel: ReturnPanel | np.ndarray, rho: float, lam: float = 0.0,
                   numeraire: int = 0, assets: Sequence[str] | None = None) -> ReducedProblem:
    """Budget elimination followed by the conjugate tilt.

    With ``w_num = 1 - sum(v)`` the empirical risk ``||rho*1 - R w||^2`` becomes
    ``||y - X v||^2`` where ``X[:, j] = R[:, j] - R[:, num]`` and
    ``y = rho*1 - R[:, num]``.
    """
    if isinstance(panel, ReturnPanel):
        R, assets = panel.returns, panel.assets
    else:
        R = np.asarray(panel, dtype=float)
        assets = tuple(assets) if assets is not None else tuple(f"A{i}" for i in range(R.shape[1]))
    T, p = R.shape
    if p < 2:
        raise BadNumeraire(f"need at least 2 assets to eliminate the budget constraint, got {p}")
    if not isinstance(numeraire, (int, np.integer)) or not 0 <= numeraire < p:
        raise BadNumeraire(f"numeraire index {numeraire!r} outside 0..{p - 1}")
    if not math.isfinite(rho):
        raise ValueError(f"rho must be finite, got {rho!r}")
    if not (math.isfinite(lam) and lam >= 0):
        raise ValueError(f"lambda must be finite and >= 0, got {lam!r}")

    others = [i for i in range(p) if i != numeraire]
    base = R[:, numeraire]
    X = R[:, others] - base[:, None]
    norms = np.linalg.norm(X, axis=0)
    scale = max(float(np.linalg.norm(R)), 1.0) * 1e-12
    zero = np.flatnonzero(norms <= scale)
    if zero.size:
        j = others[zero[0]]
        raise SingularDesign(
            f"asset {assets[j]!r} duplicates numeraire {assets[numeraire]!r} (zero column norm)")
    y = rho - base
    mu = R.mean(axis=0)
    mu_red = mu[others] - mu[numeraire]
    target, jittered = conjugate_tilt(X, y, mu_red, lam, return_info=True)
    Z = np.column_stack([np.ones(T), X])
    residual = y - Z @ np.linalg.lstsq(Z, y, rcond=None)[0]
    for arr in (X, target, residual):
        arr.setflags(write=False)
    return ReducedProblem(X, target, int(numeraire), float(lam), float(rho),
                          tuple(assets), mu_red, jittered, residual)


def recover_weights(coeffs, numeraire: int, assets: Sequence[str],
                    solver_tag: str = "", hyperparams: dict | None = None) -> PortfolioWeights:
    """Insert the numeraire weight ``1 - sum(coeffs)`` back into asset order."""
    c = np.asarray(coeffs, dtype=float).ravel()
    assets = tuple(assets)
    if c.size != len(assets) - 1:
        raise ValueError(f"{c.size} coefficients for {len(assets)} assets")
    if not np.all(np.isfinite(c)):
        raise NonFiniteCoefficient(f"non-finite coefficient at index {int(np.flatnonzero(~np.isfinite(c))[0])}")
    if not 0 <= numeraire < len(assets):
        raise BadNumeraire(f"numeraire index {numeraire!r} outside 0..{len(assets) - 1}")
    w = np.insert(c, numeraire, 1.0 - math.fsum(c))
    return PortfolioWeights(w, assets, solver_tag, dict(hyperparams or {}))


def cross_validate_lambda(panel: ReturnPanel, rho: float, grid, solve, numeraire: int = 0,
                          folds: int = 5) -> tuple[float, np.ndarray]:
    """Pick the tilt weight by contiguous-block cross-validation.

    ``solve(problem) -> coeffs`` fits one reduced problem.  The held-out score
    is the empirical risk ``mean((rho - r_t'w)^2)`` of the recovered portfolio.
    Returns the best grid value and the score per grid value.
    """
    grid = np.asarray(grid, dtype=float)
    T = len(panel)
    if folds < 2 or T < 2 * folds:
        raise ValueError(f"cannot form {folds} folds from {T} rows")
    edges = np.linspace(0, T, folds + 1).astype(int)
    scores = np.zeros(grid.size)
    for g, lam in enumerate(grid):
        total = 0.0
        for f in range(folds):
            lo, hi = edges[f], edges[f + 1]
            keep = np.r_[0:lo, hi:T]
            train = panel.returns[keep]
            prob = reduce_problem(train, rho, lam, numeraire, panel.assets)
            w = recover_weights(solve(prob), numeraire, panel.assets).weights
            held = panel.returns[lo:hi] @ w
            total += float(np.sum((rho - held) ** 2))
        scores[g] = total / T
    return float(grid[int(np.argmin(scores))]), scores
