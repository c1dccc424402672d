"""Black-Litterman equilibrium returns, view updating and view-based penalties."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .coordinate import ElasticNetConfig
from .errors import InvalidConfig, MalformedRow, SingularCovariance, SingularSystem


def _chol(M, exc, what):
    try:
        return sla.cho_factor(0.5 * (M + M.T), lower=True)
    except (np.linalg.LinAlgError, ValueError):
        raise exc(f"{what} is not symmetric positive definite") from None


@dataclass(frozen=True)
class ViewSet:
    pick: np.ndarray
    q: np.ndarray
    omega: np.ndarray
    tau: float = 0.05

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.pick, dtype=float))
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        om = np.atleast_2d(np.asarray(self.omega, dtype=float))
        m = P.shape[0]
        if q.shape != (m,) or om.shape != (m, m):
            raise InvalidConfig(f"views: pick {P.shape}, q {q.shape}, omega {om.shape} do not conform")
        if not np.allclose(om, om.T):
            raise InvalidConfig("view covariance omega is not symmetric")
        try:
            np.linalg.cholesky(om)
        except np.linalg.LinAlgError:
            raise InvalidConfig("view covariance omega is not positive definite") from None
        if not self.tau > 0:
            raise InvalidConfig(f"tau must be > 0, got {self.tau!r}")
        object.__setattr__(self, "pick", P)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "omega", om)

    @property
    def n_views(self) -> int:
        return self.pick.shape[0]


@dataclass(frozen=True)
class Equilibrium:
    pi: np.ndarray
    market_sharpe: float
    market_weights: np.ndarray


def implied_returns(sigma, market_weights, market_sharpe: float) -> Equilibrium:
    """CAPM-implied expected returns ``pi = market_sharpe * Σ w_m``."""
    S = np.asarray(sigma, dtype=float)
    wm = np.asarray(market_weights, dtype=float)
    if not market_sharpe > 0:
        raise InvalidConfig(f"market Sharpe ratio must be > 0, got {market_sharpe!r}")
    _chol(S, SingularCovariance, "covariance")
    return Equilibrium(market_sharpe * S @ wm, float(market_sharpe), wm)


def implied_weights(sigma, pi, market_sharpe: float) -> np.ndarray:
    """Inverse map ``w_m = (market_sharpe * Σ)^{-1} pi``."""
    cf = _chol(np.asarray(sigma, dtype=float), SingularCovariance, "covariance")
    return sla.cho_solve(cf, np.asarray(pi, dtype=float)) / market_sharpe


def bl_update(equilibrium: Equilibrium, sigma, views: ViewSet):
    """Posterior mean and covariance of expected returns given the views.

    precision = (τΣ)^{-1} + P'Ω^{-1}P,
    mean      = precision^{-1} ((τΣ)^{-1} π + P'Ω^{-1} q).
    """
    S = np.asarray(sigma, dtype=float)
    p = S.shape[0]
    P = views.pick
    if P.shape[1] != p or equilibrium.pi.shape != (p,):
        raise InvalidConfig(f"views over {P.shape[1]} assets, covariance is {S.shape}")
    cs = _chol(views.tau * S, SingularSystem, "tau * covariance")
    co = _chol(views.omega, SingularSystem, "view covariance")
    prec = sla.cho_solve(cs, np.eye(p)) + P.T @ sla.cho_solve(co, P)
    rhs = sla.cho_solve(cs, equilibrium.pi) + P.T @ sla.cho_solve(co, views.q)
    cp_ = _chol(prec, SingularSystem, "posterior precision")
    mean = sla.cho_solve(cp_, rhs)
    cov = sla.cho_solve(cp_, np.eye(p))
    return mean, 0.5 * (cov + cov.T)


def views_to_penalty(views: ViewSet, strength: float) -> ElasticNetConfig:
    """Quadratic elastic-net penalty expressing the views in weight space.

    The weight-space precision is ``P'Ω^{-1}P`` plus ``eps * I`` with
    ``eps = 1e-8 * trace / p`` so it stays positive definite when there are
    fewer views than assets.  ``lambda1`` is left at 0 for the caller to set.
    """
    if not strength >= 0:
        raise InvalidConfig(f"penalty strength must be >= 0, got {strength!r}")
    P = views.pick
    p = P.shape[1]
    co = _chol(views.omega, SingularSystem, "view covariance")
    M = P.T @ sla.cho_solve(co, P)
    M = 0.5 * (M + M.T)
    eps = 1e-8 * float(np.trace(M)) / p
    if eps <= 0:
        eps = 1e-8
    return ElasticNetConfig(lambda1=0.0, lambda2=float(strength), omega=M + eps * np.eye(p))


def load_views(path, assets: Sequence[str], tau: float = 0.05) -> ViewSet:
    """Read ``type,assets,value,confidence`` rows.

    ``absolute,AAPL,0.001,1e-6`` says AAPL returns 0.001 per period;
    ``relative,AAPL;MSFT,0.0005,1e-6`` says AAPL outperforms MSFT by 0.0005.
    ``confidence`` is the view variance (diagonal of Ω).
    """
    assets = list(assets)
    rows, qs, conf = [], [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            line = reader.line_num
            if not row or row[0].strip().startswith("#"):
                continue
            if [c.strip().lower() for c in row] == ["type", "assets", "value", "confidence"]:
                continue
            if len(row) != 4:
                raise MalformedRow(line, "expected type,assets,value,confidence")
            kind, names, value, var = (c.strip() for c in row)
            names = [n.strip() for n in names.split(";")]
            pick = np.zeros(len(assets))
            try:
                idx = [assets.index(n) for n in names]
            except ValueError:
                raise MalformedRow(line, f"unknown asset in {names}") from None
            if kind == "absolute" and len(idx) == 1:
                pick[idx[0]] = 1.0
            elif kind == "relative" and len(idx) == 2 and idx[0] != idx[1]:
                pick[idx[0]], pick[idx[1]] = 1.0, -1.0
            else:
                raise MalformedRow(line, f"bad view type/asset combination {kind!r} {names}")
            try:
                qv, cv = float(value), float(var)
            except ValueError:
                raise MalformedRow(line, "value and confidence must be numeric") from None
            if not cv > 0:
                raise MalformedRow(line, "confidence (view variance) must be > 0")
            rows.append(pick)
            qs.append(qv)
            conf.append(cv)
    if not rows:
        raise InvalidConfig(f"{path}: no views")
    return ViewSet(np.vstack(rows), np.array(qs), np.diag(conf), tau)
