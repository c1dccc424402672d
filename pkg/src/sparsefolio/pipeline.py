"""Solver dispatch: one training panel in, one portfolio out.

Hyperparameters arrive as a flat ``dict`` (the CLI passes ``key=value``
strings through :func:`coerce_params`).  Each solver documents its keys in
``SOLVER_PARAMS``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .backtest import equal_weight
from .coordinate import ElasticNetConfig, coord_descent, elastic_net_solve, lambda_max
from .errors import InvalidConfig, MalformedRow
from .io import csv_text
from .lars import SelectionPath, lars_path
from .markowitz import markowitz_qp
from .market_data import ReturnPanel
from .mcmc import ChainConfig, PosteriorDraws, bayesian_lasso_gibbs, horseshoe_gibbs, summarize_draws
from .sbr import SpikeSlabConfig, sbr_select
from .scaling import prepare
from .transform import (PortfolioWeights, ReducedProblem, cross_validate_lambda, recover_weights,
                        reduce_problem, sample_moments)
from .views import ViewSet, views_to_penalty

SOLVERS = ("lars", "cd", "enet", "sbr", "lasso-gibbs", "horseshoe", "qp", "naive")

SOLVER_PARAMS = {
    "lars": {"cardinality": int, "penalty": float, "lasso": bool},
    "cd": {"lambda": float, "lambda_frac": float},
    "enet": {"lambda1": float, "lambda1_frac": float, "lambda2": float},
    "sbr": {"a": float, "sigma2": float, "sigma_e2": float},
    "lasso-gibbs": {"rule": str, "eps": float, "lambda": float},
    "horseshoe": {"rule": str, "eps": float},
    "qp": {"long_only": bool},
    "naive": {},
}


def _to_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise InvalidConfig(f"not a boolean: {v!r}")


def coerce_params(solver: str, params: dict) -> dict:
    """Convert string hyperparameters to their declared types; reject unknown keys."""
    if solver not in SOLVERS:
        raise InvalidConfig(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
    spec = SOLVER_PARAMS[solver]
    out = {}
    for key, value in params.items():
        if key not in spec:
            raise InvalidConfig(f"solver {solver!r} has no hyperparameter {key!r} (known: {sorted(spec)})")
        kind = spec[key]
        try:
            out[key] = _to_bool(value) if kind is bool else kind(value)
        except (TypeError, ValueError):
            raise InvalidConfig(f"hyperparameter {key}={value!r} is not a valid {kind.__name__}") from None
    return out


@dataclass
class FitResult:
    weights: PortfolioWeights
    coeffs: np.ndarray | None = None
    problem: ReducedProblem | None = None
    path: SelectionPath | None = None
    draws: PosteriorDraws | None = None
    info: dict = field(default_factory=dict)


def sbr_defaults(design, target) -> SpikeSlabConfig:
    """Noise variance from the OLS residual of the standardized problem; weak slab.

    Pass a target that still carries its noise (``ReducedProblem.noisy_target``);
    the projected target fits exactly and would give a zero noise estimate.
    """
    Xs, ys, _ = prepare(design, target, True)
    T, k = Xs.shape
    beta = np.linalg.lstsq(Xs, ys, rcond=None)[0]
    dof = T - k - 1
    resid = ys - Xs @ beta
    sigma_e2 = float(resid @ resid) / dof if dof > 0 else float(ys @ ys) / T
    return SpikeSlabConfig(a=0.1, sigma2=max(float(ys @ ys), 1e-300), sigma_e2=max(sigma_e2, 1e-300))


def in_sample_rss(problem: ReducedProblem, coeffs) -> float:
    """Residual sum of squares of the centred reduced regression."""
    X = problem.design - problem.design.mean(axis=0)
    y = problem.target - problem.target.mean()
    r = y - X @ np.asarray(coeffs, dtype=float)
    return float(r @ r)


def fit_portfolio(train: ReturnPanel, solver: str, rho: float, lam: float = 0.0, numeraire: int = 0,
                  params: dict | None = None, chain: ChainConfig | None = None,
                  views: ViewSet | None = None) -> FitResult:
    params = coerce_params(solver, params or {})
    assets = train.assets

    if solver == "naive":
        return FitResult(equal_weight(assets))
    if solver == "qp":
        long_only = params.get("long_only", True)
        w = markowitz_qp(sample_moments(train), rho, long_only, assets)
        return FitResult(w)

    prob = reduce_problem(train, rho, lam, numeraire)
    X, y = prob.design, prob.target
    hp = {"rho": rho, "lambda_tilt": lam, "numeraire": assets[numeraire]}

    def done(coeffs, **extra):
        coeffs = np.asarray(coeffs, dtype=float)
        w = recover_weights(coeffs, numeraire, assets, solver, {**hp, **params, **extra.pop("hp", {})})
        return FitResult(w, coeffs, prob, **extra)

    if solver == "lars":
        path = lars_path(X, y, lasso=params.get("lasso", True))
        if "penalty" in params:
            coeffs = path.coeffs_at(params["penalty"])
            return done(coeffs, path=path)
        size = params.get("cardinality", min(10, prob.k))
        kn = path.knot_for_cardinality(size)
        return done(kn.coeffs, path=path, hp={"penalty": kn.penalty, "cardinality": size})

    if solver == "cd":
        lam_cd = params.get("lambda")
        if lam_cd is None:
            lam_cd = params.get("lambda_frac", 0.05) * lambda_max(X, y)
        return done(coord_descent(X, y, lam_cd), hp={"lambda": lam_cd})

    if solver == "enet":
        Xc = X - X.mean(axis=0)
        yc = y - y.mean()
        l1 = params.get("lambda1")
        if l1 is None:
            l1 = params.get("lambda1_frac", 0.05) * 2 * float(np.max(np.abs(Xc.T @ yc)))
        l2 = params.get("lambda2", 0.0)
        omega = None
        if views is not None:
            frag = views_to_penalty(views, l2)
            keep = [i for i in range(len(assets)) if i != numeraire]
            omega = frag.omega[np.ix_(keep, keep)]
        cfg = ElasticNetConfig(lambda1=l1, lambda2=l2, omega=omega)
        return done(elastic_net_solve(X, y, cfg), hp={"lambda1": l1, "lambda2": l2})

    if solver == "sbr":
        base = sbr_defaults(X, prob.noisy_target)
        cfg = replace(base, **{k: params[k] for k in ("a", "sigma2", "sigma_e2") if k in params})
        support, coeffs = sbr_select(X, y, cfg)
        return done(coeffs, info={"support": support},
                    hp={"a": cfg.a, "sigma2": cfg.sigma2, "sigma_e2": cfg.sigma_e2})

    if solver in ("lasso-gibbs", "horseshoe"):
        chain = chain or ChainConfig()
        if solver == "lasso-gibbs":
            draws = bayesian_lasso_gibbs(X, prob.noisy_target, chain, lam=params.get("lambda"))
        else:
            draws = horseshoe_gibbs(X, prob.noisy_target, chain)
        rule = params.get("rule", "interval")
        coeffs, support = summarize_draws(draws, rule, params.get("eps", 0.0))
        return done(coeffs, draws=draws, info={"support": support},
                    hp={"rule": rule, "seed": chain.seed, "n_iter": chain.n_iter, "burn_in": chain.burn_in})

    raise InvalidConfig(f"unknown solver {solver!r}")


def default_rho(train: ReturnPanel) -> float:
    """Cross-sectional average of per-asset mean returns (always long-only attainable)."""
    mu = train.returns.mean(axis=0)
    return float(math.fsum(mu) / mu.size)


def reduced_solver(solver: str, params: dict | None = None):
    """``solve(problem) -> coeffs`` for tuning the tilt weight by cross-validation.

    The MCMC solvers are too slow to refit per fold and grid point, so they
    (and the solvers that ignore the tilt) are tuned with coordinate descent
    at the default ``lambda_frac``.
    """
    params = coerce_params(solver, params or {}) if solver in SOLVERS else {}
    if solver == "lars":
        size = params.get("cardinality", 10)
        return lambda prob: lars_path(prob.design, prob.target).knot_for_cardinality(min(size, prob.k)).coeffs
    if solver == "sbr":
        def solve(prob):
            base = sbr_defaults(prob.design, prob.noisy_target)
            cfg = replace(base, **{k: params[k] for k in ("a", "sigma2", "sigma_e2") if k in params})
            return sbr_select(prob.design, prob.target, cfg)[1]
        return solve
    if solver == "enet":
        frac, l2 = params.get("lambda1_frac", 0.05), params.get("lambda2", 0.0)

        def solve(prob):
            Xc = prob.design - prob.design.mean(axis=0)
            yc = prob.target - prob.target.mean()
            l1 = frac * 2 * float(np.max(np.abs(Xc.T @ yc)))
            return elastic_net_solve(prob.design, prob.target, ElasticNetConfig(l1, l2))
        return solve
    frac = params.get("lambda_frac", 0.05) if solver == "cd" else 0.05
    return lambda prob: coord_descent(prob.design, prob.target, frac * lambda_max(prob.design, prob.target))


def tilt_grid(train: ReturnPanel, rho: float, numeraire: int = 0, n: int = 9) -> np.ndarray:
    """Zero plus a log grid scaled so ``lam * mu`` spans 1e-3..10 times ``X'y``."""
    prob = reduce_problem(train, rho, 0.0, numeraire)
    ref = np.linalg.norm(prob.design.T @ prob.target) / max(np.linalg.norm(prob.mu_reduced), 1e-300)
    return np.concatenate([[0.0], ref * np.logspace(-3, 1, n)])


def select_tilt(train: ReturnPanel, solver: str, rho: float, numeraire: int = 0,
                params: dict | None = None, folds: int = 5) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-validated tilt weight; returns ``(best, grid, scores)``."""
    grid = tilt_grid(train, rho, numeraire)
    best, scores = cross_validate_lambda(train, rho, grid, reduced_solver(solver, params), numeraire, folds)
    return best, grid, scores


def weights_csv(w: PortfolioWeights, comments=()) -> str:
    return csv_text(["asset", "weight"], [(a, float(v)) for a, v in zip(w.assets, w.weights)],
                    [*comments, f"solver={w.solver_tag}"])


def load_weights(path, label: str | None = None) -> PortfolioWeights:
    """Read an ``asset,weight`` file written by :func:`weights_csv`."""
    tag, assets, values = None, [], []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("solver="):
                    tag = body[len("solver="):]
                continue
            if line.replace(" ", "") == "asset,weight":
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise MalformedRow(n, "expected asset,weight")
            try:
                values.append(float(parts[1]))
            except ValueError:
                raise MalformedRow(n, f"weight {parts[1]!r} is not numeric") from None
            assets.append(parts[0])
    if not assets:
        raise MalformedRow(0, f"{path}: no weights")
    return PortfolioWeights(np.array(values), assets, label or tag or "portfolio")


def matched_lars_cardinality(path: SelectionPath, problem: ReducedProblem, rss: float,
                             rtol: float = 1e-9) -> int:
    """Fewest nonzero coefficients at a LARS knot whose in-sample RSS is at most ``rss``.

    RSS falls monotonically along the path and is highest just after each
    knot, so knots are the only points that need checking.
    """
    best = None
    for kn in path.knots:
        if in_sample_rss(problem, kn.coeffs) <= rss * (1 + rtol):
            n = int(np.count_nonzero(kn.coeffs))
            best = n if best is None else min(best, n)
    if best is None:
        raise ValueError("no knot reaches the requested fit")
    return best
