"""Write a synthetic factor-model price panel in the ingestion schema.

    python3 scripts/make_synthetic.py --out data/prices.csv --seed 0
"""
import argparse

from sparsefolio.market_data import write_panel
from sparsefolio.synthetic import factor_market


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="prices.csv")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--assets", type=int, default=50)
    ap.add_argument("--factors", type=int, default=5)
    ap.add_argument("--days", type=int, default=750)
    args = ap.parse_args()
    panel = factor_market(args.assets, args.factors, args.days, args.seed)
    write_panel(args.out, panel.dates, panel.assets, panel.prices,
                [f"seed={args.seed}", f"synthetic factors={args.factors} days={args.days}"])
    print(f"wrote {args.out}: {len(panel.dates)} dates x {len(panel.assets)} assets "
          f"({panel.dates[0]}..{panel.dates[-1]})")


if __name__ == "__main__":
    main()
