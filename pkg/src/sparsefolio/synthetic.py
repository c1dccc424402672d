"""Synthetic factor-model markets for experiments and tests."""
from __future__ import annotations

import datetime as dt

import numpy as np

from .market_data import PricePanel


def business_days(start: str, n: int) -> list[dt.date]:
    days = np.busday_offset(np.datetime64(start), np.arange(n), roll="forward")
    return [d.astype(dt.date) for d in days]


def factor_returns(n_assets: int = 50, n_factors: int = 5, n_days: int = 750, seed: int = 0,
                   factor_vol: float = 0.01, idio_range=(0.005, 0.02), drift=(4e-4, 3e-4)):
    """Daily net returns ``alpha + B f_t + e_t`` with Gaussian factors and noise.

    The first factor is a market factor with loadings around 1; the others
    have loadings centred at 0.  Returns ``(returns, loadings, idio_vol)``.
    """
    rng = np.random.default_rng(seed)
    B = rng.normal(0.0, 0.5, size=(n_assets, n_factors))
    B[:, 0] = rng.normal(1.0, 0.3, size=n_assets)
    fvol = factor_vol * np.linspace(1.0, 0.4, n_factors)
    idio = rng.uniform(*idio_range, size=n_assets)
    alpha = rng.normal(drift[0], drift[1], size=n_assets)
    f = rng.normal(size=(n_days, n_factors)) * fvol
    e = rng.normal(size=(n_days, n_assets)) * idio
    R = alpha + f @ B.T + e
    return np.clip(R, -0.5, None), B, idio


def factor_market(n_assets: int = 50, n_factors: int = 5, n_days: int = 750, seed: int = 0,
                  start: str = "2016-02-23", **kwargs) -> PricePanel:
    """Price panel (``n_days + 1`` rows, first row 100) driven by :func:`factor_returns`."""
    R, _, _ = factor_returns(n_assets, n_factors, n_days, seed, **kwargs)
    prices = 100.0 * np.vstack([np.ones(n_assets), np.cumprod(1.0 + R, axis=0)])
    width = max(2, len(str(n_assets - 1)))
    assets = [f"S{i:0{width}d}" for i in range(n_assets)]
    return PricePanel(business_days(start, n_days + 1), assets, prices)
