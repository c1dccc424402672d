"""Out-of-sample evaluation and comparison tables."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import AssetMismatch, EmptyAssetList, EmptyTestPanel
from .io import atomic_write_text, csv_text
from .market_data import ReturnPanel
from .transform import PortfolioWeights

PERIODS_PER_YEAR = 252
CONVENTIONS = ("paper", "standard")


@dataclass(frozen=True)
class BacktestReport:
    label: str
    mu_ann: float
    sigma_ann: float
    sharpe: float
    cardinality: int
    cumulative: np.ndarray
    dates: tuple
    convention: str
    daily: np.ndarray

    def cumulative_rows(self):
        return [(d if isinstance(d, str) else d.isoformat(), float(v))
                for d, v in zip(self.dates, self.cumulative)]


def annualize(daily, convention: str = "paper") -> tuple[float, float, float]:
    """Annualized (mean, volatility, ratio) of a daily return series.

    ``paper`` scales both mean and standard deviation by 252; ``standard``
    scales the standard deviation by sqrt(252).
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown annualization convention {convention!r}")
    r = np.asarray(daily, dtype=float)
    mean = float(r.mean())
    sd = float(r.std(ddof=1)) if r.size > 1 else 0.0
    mu_ann = PERIODS_PER_YEAR * mean
    sigma_ann = PERIODS_PER_YEAR * sd if convention == "paper" else math.sqrt(PERIODS_PER_YEAR) * sd
    if sigma_ann > 0:
        sharpe = mu_ann / sigma_ann
    else:
        sharpe = math.copysign(math.inf, mu_ann) if mu_ann != 0 else math.nan
    return mu_ann, sigma_ann, sharpe


def portfolio_returns(weights: PortfolioWeights, test: ReturnPanel, mode: str = "fixed") -> np.ndarray:
    """Daily portfolio returns on ``test``.

    ``fixed`` re-sets to the target weights every period (``r_t = w'r_t``);
    ``drift`` buys once and lets holdings move with prices.
    """
    if len(test) == 0:
        raise EmptyTestPanel("test panel has no rows")
    missing = [a for a in weights.assets if a not in test.assets]
    if missing:
        raise AssetMismatch(f"weights reference assets absent from the test panel: {missing}")
    R = test.select(weights.assets).returns
    w = weights.weights
    if mode == "fixed":
        return R @ w
    if mode == "drift":
        growth = np.cumprod(1.0 + R, axis=0)
        value = np.concatenate([[math.fsum(w)], growth @ w])
        return value[1:] / value[:-1] - 1.0
    raise ValueError(f"unknown backtest mode {mode!r}")


def _report(label, daily, dates, cardinality, convention, start_label):
    mu_ann, sigma_ann, sharpe = annualize(daily, convention)
    cum = np.concatenate([[1.0], np.cumprod(1.0 + daily)])
    return BacktestReport(label, mu_ann, sigma_ann, sharpe, cardinality, cum,
                          (start_label, *dates), convention, np.asarray(daily))


def evaluate_portfolio(weights: PortfolioWeights, test: ReturnPanel, convention: str = "paper",
                       mode: str = "fixed", label: str | None = None, start_label="start") -> BacktestReport:
    daily = portfolio_returns(weights, test, mode)
    return _report(label or weights.solver_tag or "portfolio", daily, test.dates,
                   weights.cardinality, convention, start_label)


def equal_weight(assets: Sequence[str]) -> PortfolioWeights:
    assets = tuple(assets)
    if not assets:
        raise EmptyAssetList("equal_weight needs at least one asset")
    p = len(assets)
    return PortfolioWeights(np.full(p, 1.0 / p), assets, "naive", {})


def rolling_backtest(panel: ReturnPanel, fit: Callable[[ReturnPanel], PortfolioWeights], window: int,
                     stride: int, convention: str = "paper", label: str = "rolling") -> BacktestReport:
    """Re-fit on a trailing window every ``stride`` periods and chain the out-of-sample returns.

    The reported cardinality is that of the last fitted portfolio.
    """
    T = len(panel)
    if window < 2 or stride < 1 or window >= T:
        raise ValueError(f"need 2 <= window < {T} and stride >= 1")
    daily, dates, last = [], [], None
    for start in range(window, T, stride):
        train = panel.rows(start - window, start)
        test = panel.rows(start, min(start + stride, T))
        last = fit(train)
        daily.append(portfolio_returns(last, test))
        dates.extend(test.dates)
    return _report(label, np.concatenate(daily), dates, last.cardinality, convention,
                   panel.dates[window - 1].isoformat())


ROW_LABELS = ("mu", "sigma", "mu/sigma", "||w||_0")


@dataclass(frozen=True)
class ComparisonTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[str, tuple], ...]

    def to_csv(self, comments=()) -> str:
        return csv_text(["metric", *self.columns],
                        [(name, *vals) for name, vals in self.rows], comments)

    def to_text(self) -> str:
        def fmt(v):
            return str(v) if isinstance(v, int) else f"{v:.4f}"
        cells = [["", *self.columns]] + [[name, *(fmt(v) for v in vals)] for name, vals in self.rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(cells[0]))]
        return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


def comparison_table(reports: Sequence[BacktestReport]) -> ComparisonTable:
    """Rows mu, sigma, mu/sigma, ||w||_0 with one column per report, in input order."""
    if not reports:
        raise ValueError("comparison table needs at least one report")
    cols = tuple(r.label for r in reports)
    rows = (
        ("mu", tuple(float(r.mu_ann) for r in reports)),
        ("sigma", tuple(float(r.sigma_ann) for r in reports)),
        ("mu/sigma", tuple(float(r.sharpe) for r in reports)),
        ("||w||_0", tuple(int(r.cardinality) for r in reports)),
    )
    return ComparisonTable(cols, rows)


def _safe_label(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


def write_reports(reports: Sequence[BacktestReport], outdir, comments=()) -> list[Path]:
    """Write ``report.csv`` plus one ``cumulative_<label>.csv`` per report."""
    outdir = Path(outdir)
    written = [outdir / "report.csv"]
    atomic_write_text(written[0], comparison_table(reports).to_csv(comments))
    for r in reports:
        path = outdir / f"cumulative_{_safe_label(r.label)}.csv"
        atomic_write_text(path, csv_text(["date", "value"], r.cumulative_rows(),
                                         [*comments, f"convention={r.convention}"]))
        written.append(path)
    return written
