"""Gibbs samplers for the Bayesian lasso and the horseshoe.

Both samplers work on a design standardized to mean 0 / standard deviation 1
and a centred target, share the Gaussian ``w`` update

    w | . ~ N(A^{-1} X'y, sigma2 A^{-1}),   A = X'X + diag(1 / prior_var)

and differ only in how the per-coefficient prior variances are drawn.
Draws are reported on the raw coefficient scale.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import EmptyDraws, InvalidConfig, NumericalOverflow
from .scaling import prepare

SCALE_FLOOR = 1e-12
SCALE_CEIL = 1e12


@dataclass(frozen=True)
class ChainConfig:
    n_iter: int = 12_000
    burn_in: int = 2_000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.burn_in < self.n_iter):
            raise InvalidConfig(f"need 0 <= burn_in < n_iter, got burn_in={self.burn_in}, n_iter={self.n_iter}")
        if self.thin < 1:
            raise InvalidConfig(f"thin must be >= 1, got {self.thin}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def n_kept(self) -> int:
        return len(range(self.burn_in, self.n_iter, self.thin))


@dataclass(frozen=True)
class PosteriorDraws:
    samples: np.ndarray
    sigma2_draws: np.ndarray
    seed: int
    burn_in: int
    thin: int
    hyper_draws: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[0] < 1:
            raise EmptyDraws("posterior draws need at least one retained sample")
        if not np.all(np.isfinite(s)):
            raise NumericalOverflow("non-finite coefficient draw")
        if np.any(np.asarray(self.sigma2_draws) <= 0):
            raise NumericalOverflow("non-positive sigma2 draw")

    @property
    def n_draws(self) -> int:
        return self.samples.shape[0]

    def rows(self):
        """``(iteration, coordinate, value)`` triples in retained order."""
        for n, row in enumerate(self.samples):
            it = self.burn_in + n * self.thin
            for j, v in enumerate(row):
                yield it, j, float(v)


def _inv_gamma(rng, shape, scale):
    return scale / rng.gamma(shape)


class _GaussianStep:
    """Draws ``w`` from its full conditional given prior variances and sigma2."""

    def __init__(self, X, y):
        self.XtX = X.T @ X
        self.Xty = X.T @ y
        self.k = X.shape[1]

    def __call__(self, rng, prior_var, sigma2):
        A = self.XtX + np.diag(1.0 / prior_var)
        L = sla.cholesky(A, lower=True, check_finite=False)
        mean = sla.cho_solve((L, True), self.Xty, check_finite=False)
        z = rng.standard_normal(self.k)
        return mean + np.sqrt(sigma2) * sla.solve_triangular(L, z, lower=True, trans="T", check_finite=False)


def _check(it, **state):
    for name, v in state.items():
        if not np.all(np.isfinite(v)):
            raise NumericalOverflow(f"non-finite {name} at iteration {it}",
                                    {k: np.array(val, copy=True) for k, val in state.items()})


def bayesian_lasso_gibbs(design, target, config: ChainConfig = ChainConfig(), lam: float | None = None,
                         freeze_scales: bool = False, gamma_shape: float = 1.0, gamma_rate: float = 1.78,
                         standardize: bool = True) -> PosteriorDraws:
    """Scale-mixture Gibbs sampler for the Laplace prior.

    Hierarchy: ``w ~ N(0, sigma2 diag(tau2))``, ``tau2_j ~ Exp(lam^2/2)``,
    ``p(sigma2) ∝ 1/sigma2`` and, unless ``lam`` is fixed, ``lam^2 ~
    Gamma(gamma_shape, gamma_rate)``.  ``freeze_scales`` pins every ``tau2_j``
    to 1 (ridge-like conjugate sub-model).
    """
    X, y, st = prepare(design, target, standardize, mode="std")
    n, p = X.shape
    rng = np.random.default_rng(config.seed)
    gauss = _GaussianStep(X, y)

    w = sla.solve(gauss.XtX + np.eye(p), gauss.Xty, assume_a="pos")
    q = y - X @ w
    sigma2 = float(q @ q) / n
    if freeze_scales:
        tau2 = np.ones(p)
    else:
        tau2 = np.clip(w ** 2, SCALE_FLOOR, SCALE_CEIL)
    l1 = float(np.sum(np.abs(w)))
    lam_cur = float(lam) if lam is not None else (p * np.sqrt(sigma2) / l1 if l1 > 0 else 1.0)

    keep = config.n_kept
    samples = np.empty((keep, p))
    sig_out = np.empty(keep)
    lam_out = np.empty(keep)
    tau_out = np.empty((keep, p))
    shape_s = (n - 1) / 2 + p / 2
    slot = 0
    for it in range(config.n_iter):
        w = gauss(rng, tau2, sigma2)
        resid = y - X @ w
        sigma2 = _inv_gamma(rng, shape_s, float(resid @ resid) / 2 + float(w @ (w / tau2)) / 2)
        if not freeze_scales:
            lam2 = lam_cur * lam_cur
            mean_ig = np.sqrt(lam2 * sigma2 / np.maximum(w * w, SCALE_FLOOR ** 2))
            inv_tau2 = rng.wald(np.minimum(mean_ig, SCALE_CEIL), lam2)
            tau2 = np.clip(1.0 / inv_tau2, SCALE_FLOOR, SCALE_CEIL)
            if lam is None:
                lam_cur = float(np.sqrt(rng.gamma(p + gamma_shape, 1.0 / (tau2.sum() / 2 + gamma_rate))))
        _check(it, w=w, sigma2=sigma2, tau2=tau2, lam=lam_cur)
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            samples[slot] = w
            sig_out[slot] = sigma2
            lam_out[slot] = lam_cur
            tau_out[slot] = tau2
            slot += 1

    return PosteriorDraws(st.to_raw(samples), sig_out, config.seed, config.burn_in, config.thin,
                          {"lambda": lam_out, "tau2": tau_out})


def horseshoe_gibbs(design, target, config: ChainConfig = ChainConfig(), freeze_scales: bool = False,
                    standardize: bool = True) -> PosteriorDraws:
    """Horseshoe regression via the inverse-gamma expansion of each half-Cauchy.

    ``w_j ~ N(0, sigma2 tau2 lambda2_j)`` with
    ``lambda2_j | nu_j ~ IG(1/2, 1/nu_j)``, ``nu_j ~ IG(1/2, 1)`` and likewise
    ``tau2 | xi ~ IG(1/2, 1/xi)``, ``xi ~ IG(1/2, 1)``, which makes every full
    conditional inverse-gamma.  Scale draws are clamped to [1e-12, 1e12].
    """
    X, y, st = prepare(design, target, standardize, mode="std")
    n, p = X.shape
    rng = np.random.default_rng(config.seed)
    gauss = _GaussianStep(X, y)

    w = sla.solve(gauss.XtX + np.eye(p), gauss.Xty, assume_a="pos")
    q = y - X @ w
    sigma2 = float(q @ q) / n
    lam2 = np.ones(p)
    tau2 = 1.0
    nu = np.ones(p)
    xi = 1.0

    keep = config.n_kept
    samples = np.empty((keep, p))
    sig_out = np.empty(keep)
    tau_out = np.empty(keep)
    lam_out = np.empty((keep, p))
    shape_s = (n - 1) / 2 + p / 2
    slot = 0
    for it in range(config.n_iter):
        prior_var = tau2 * lam2
        w = gauss(rng, prior_var, sigma2)
        resid = y - X @ w
        sigma2 = _inv_gamma(rng, shape_s, float(resid @ resid) / 2 + float(w @ (w / prior_var)) / 2)
        if not freeze_scales:
            lam2 = np.clip(_inv_gamma(rng, np.ones(p), 1.0 / nu + w * w / (2 * tau2 * sigma2)),
                           SCALE_FLOOR, SCALE_CEIL)
            tau2 = float(np.clip(_inv_gamma(rng, (p + 1) / 2, 1.0 / xi + float(np.sum(w * w / lam2)) / (2 * sigma2)),
                                 SCALE_FLOOR, SCALE_CEIL))
            nu = _inv_gamma(rng, np.ones(p), 1.0 + 1.0 / lam2)
            xi = float(_inv_gamma(rng, 1.0, 1.0 + 1.0 / tau2))
        _check(it, w=w, sigma2=sigma2, lam2=lam2, tau2=tau2)
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            samples[slot] = w
            sig_out[slot] = sigma2
            tau_out[slot] = tau2
            lam_out[slot] = lam2
            slot += 1

    return PosteriorDraws(st.to_raw(samples), sig_out, config.seed, config.burn_in, config.thin,
                          {"tau2": tau_out, "lambda2": lam_out})


def summarize_draws(draws: PosteriorDraws, rule: str = "interval", eps: float = 0.0):
    """Posterior-mean point estimate plus a sparse support.

    ``rule="interval"`` keeps coordinates whose central 50% credible interval
    excludes zero; ``rule="threshold"`` keeps ``|posterior mean| > eps``.
    Coefficients outside the support are set to zero.
    """
    s = np.asarray(draws.samples)
    if s.shape[0] == 0:
        raise EmptyDraws("no draws to summarize")
    mean = s.mean(axis=0)
    if rule == "interval":
        lo, hi = np.quantile(s, [0.25, 0.75], axis=0)
        keep = (lo > 0) | (hi < 0)
    elif rule == "threshold":
        keep = np.abs(mean) > eps
    else:
        raise ValueError(f"unknown sparsification rule {rule!r}")
    coeffs = np.where(keep, mean, 0.0)
    return coeffs, tuple(int(j) for j in np.flatnonzero(keep))


def batch_means_se(x, n_batches: int = 50) -> np.ndarray:
    """Monte-Carlo standard error of the mean of each column by batch means."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0] - x.shape[0] % n_batches
    b = x[:n].reshape(n_batches, n // n_batches, -1).mean(axis=1)
    return b.std(axis=0, ddof=1) / np.sqrt(n_batches)
