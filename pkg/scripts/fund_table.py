"""Side-by-side report over several universes: LARS, horseshoe, least squares and SBR per universe.

    python3 scripts/fund_table.py --split 2018-02-15 --out report/ \
        Viking=viking.csv Renaissance=ren.csv SP100=sp100.csv

Each positional argument is ``name=price_file``; columns come out as
``name-LARS``, ``name-HS``, ``name-LM``, ``name-L0``.
"""
import argparse
from pathlib import Path

from sparsefolio.backtest import comparison_table, evaluate_portfolio, write_reports
from sparsefolio.market_data import load_prices, split_panel, to_returns
from sparsefolio.mcmc import ChainConfig
from sparsefolio.pipeline import default_rho, fit_portfolio

METHODS = (("LARS", "lars", {}), ("HS", "horseshoe", {}), ("LM", "lars", {"penalty": 0.0}), ("L0", "sbr", {}))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("universes", nargs="+", help="name=price_file")
    ap.add_argument("--split", required=True, help="last training date")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--convention", default="paper", choices=("paper", "standard"))
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    reports = []
    for item in args.universes:
        name, _, path = item.partition("=")
        if not path:
            ap.error(f"expected name=price_file, got {item!r}")
        train, test = split_panel(to_returns(load_prices(path)), args.split)
        rho = default_rho(train)
        for tag, solver, params in METHODS:
            fit = fit_portfolio(train, solver, rho, params=params, chain=ChainConfig(seed=args.seed))
            reports.append(evaluate_portfolio(fit.weights, test, args.convention, label=f"{name}-{tag}"))
    print(comparison_table(reports).to_text(), end="")
    if args.out:
        write_reports(reports, Path(args.out), [f"seed={args.seed}", f"split={args.split}"])


if __name__ == "__main__":
    main()
