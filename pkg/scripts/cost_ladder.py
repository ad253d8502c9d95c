#!/usr/bin/env python3
"""Transaction-cost and lot-size impact study via the integer-share GA.

Sweeps GA frontiers across a ladder of proportional cost rates (and
optionally lot sizes) on one dataset, writing one frontier CSV per level
plus a summary of the attainable maximum return.  Shows how frictions
compress the frontier relative to the frictionless quadratic-programming
solution.

Example:
    python scripts/cost_ladder.py --prices data/prices-2005-2006.csv \\
        --prices-eval data/prices-2007.csv --capital 10000 \\
        --costs 0 0.01 0.05 0.1 --out results/ladder
"""

from __future__ import annotations

import argparse
from pathlib import Path

from portopt.frontier import lambda_frontier
from portopt.ga import GaParams, ga_frontier
from portopt.market import MarketParams
from portopt.market_data import assets_return, fill_missing, load_prices
from portopt.risk_models import RiskKind, build_risk_model


def fmt(x: float) -> str:
    return format(float(x), ".10g")


def write_points(path: Path, points) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("parameter,risk,return\n")
        for p in points:
            fh.write(f"{fmt(p.parameter)},{fmt(p.risk)},{fmt(p.expected_return)}\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--prices", required=True)
    parser.add_argument("--prices-eval", required=True,
                        help="first row supplies the current prices")
    parser.add_argument("--capital", type=float, default=10_000.0)
    parser.add_argument("--costs", type=float, nargs="+", default=[0.01, 0.05, 0.1])
    parser.add_argument("--lot-size", type=int, default=1)
    parser.add_argument("--risk", choices=["var", "svar"], default="var")
    parser.add_argument("--risk-free", type=float, default=0.0)
    parser.add_argument("--horizon", type=int, default=251)
    parser.add_argument("--points", type=int, default=40)
    parser.add_argument("--generations", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results/ladder")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    returns = assets_return(fill_missing(load_prices(args.prices)))
    model = build_risk_model(returns, kind=RiskKind(args.risk))
    current_prices = fill_missing(load_prices(args.prices_eval)).values[0]

    exact = lambda_frontier(model, n_points=args.points)
    write_points(out / "frontier_exact.csv", exact)
    print(f"frictionless max return {max(p.expected_return for p in exact):.8f}")

    params = GaParams(generations=args.generations, seed=args.seed)
    for rate in args.costs:
        market = MarketParams(
            capital=args.capital,
            prices=current_prices,
            buy_cost_rates=rate,
            sell_cost_rates=rate,
            risk_free_rate=args.risk_free,
            horizon=args.horizon,
            lot_sizes=args.lot_size,
        )
        points = ga_frontier(model, params, market, n_points=args.points)
        write_points(out / f"frontier_cost_{rate}.csv", points)
        print(
            f"cost {rate:>5}: max return {max(p.expected_return for p in points):.8f}, "
            f"max residual {max(p.portfolio.residual for p in points):.4f}"
        )


if __name__ == "__main__":
    main()
