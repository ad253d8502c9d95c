"""Command-line surface for reproducible batch runs.

Four subcommands: ``stats`` (per-asset dispersion table), ``optimize``
(one portfolio, exact or GA), ``frontier`` (frontier sweeps, random
clouds, two-asset curves) and ``fit`` (out-of-sample frontier fit).

Options may come from a JSON config file (``--config`` or the
``PORTOPT_CONFIG`` environment variable) with command-line flags taking
precedence.  All numeric output is written with 17 significant digits,
and a fixed seed makes every command byte-reproducible.

Exit codes: 0 success, 2 ingestion failure, 3 infeasible program or
target out of range, 4 asset misalignment, 1 anything else.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import frontier as frontier_mod
from . import ga as ga_mod
from .errors import (
    AssetAlignmentError,
    IngestionError,
    PortfolioError,
    QpError,
    TargetOutOfRange,
)
from .market import MarketParams, market_params_from_dict
from .market_data import assets_return, fill_missing, load_prices
from .optimizers import ObjectiveParams, lambda_portfolio, markowitz_portfolio
from .risk_models import AnnualizationConvention, RiskKind, build_risk_model

CONFIG_ENV_VAR = "PORTOPT_CONFIG"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INGESTION = 2
EXIT_INFEASIBLE = 3
EXIT_ALIGNMENT = 4


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(str(c) if isinstance(c, str) else _fmt(c) for c in row))
            handle.write("\n")
    return path


def _write_json(path: Path, doc: dict) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")
    return path


# --- configuration -----------------------------------------------------------

_DEFAULTS = {
    "prices": None,
    "prices_eval": None,
    "risk": "var",
    "threshold_b": 0.0,
    "target_return": None,
    "lam": None,
    "ga": False,
    "generations": 500,
    "population": None,
    "seed": 0,
    "capital": None,
    "buy_cost": (0.0,),
    "sell_cost": (0.0,),
    "risk_free": 0.0,
    "horizon": 251,
    "lot_size": 1,
    "cloud": None,
    "points": 40,
    "two_asset": False,
    "out": "out",
    "format": "json",
    "periods_expectation": 251,
    "periods_evaluation": 250,
    "market": None,
}


@dataclass(frozen=True)
class RunConfig:
    """One reproducible run: data paths, model choice, objective, output.

    Built by layering defaults, then a JSON config file, then explicit
    command-line flags.
    """

    prices: str | None = None
    prices_eval: str | None = None
    risk: str = "var"
    threshold_b: float = 0.0
    target_return: float | None = None
    lam: float | None = None
    ga: bool = False
    generations: int = 500
    population: int | None = None
    seed: int = 0
    capital: float | None = None
    buy_cost: tuple[float, ...] = (0.0,)
    sell_cost: tuple[float, ...] = (0.0,)
    risk_free: float = 0.0
    horizon: int = 251
    lot_size: int = 1
    cloud: int | None = None
    points: int = 40
    two_asset: bool = False
    out: str = "out"
    format: str = "json"
    periods_expectation: int = 251
    periods_evaluation: int = 250
    market: dict | None = None


def _load_config_file(path: str | None) -> dict:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
    except FileNotFoundError:
        raise IngestionError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise IngestionError(f"config file {path} is not valid JSON: {exc}") from None
    unknown = set(doc) - set(_DEFAULTS)
    if unknown:
        raise IngestionError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _merge_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(_DEFAULTS)
    merged.update(_load_config_file(args.config))
    for key in _DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    for key in ("buy_cost", "sell_cost"):
        if np.isscalar(merged[key]):
            merged[key] = (float(merged[key]),)
        else:
            merged[key] = tuple(float(v) for v in merged[key])
    return RunConfig(**merged)


def _convention(cfg: RunConfig) -> AnnualizationConvention:
    return AnnualizationConvention(
        daily_to_annual_expectation=int(cfg.periods_expectation),
        evaluation_periods=int(cfg.periods_evaluation),
    )


def _load_table(path: str | None, label: str):
    if not path:
        raise IngestionError(f"no price file configured for {label}")
    if not Path(path).exists():
        raise IngestionError(f"price file not found: {path}")
    return load_prices(path)


def _build_model(cfg: RunConfig):
    table = fill_missing(_load_table(cfg.prices, "--prices"))
    returns = assets_return(table)
    model = build_risk_model(
        returns,
        kind=RiskKind(cfg.risk),
        threshold_b=float(cfg.threshold_b),
        convention=_convention(cfg),
    )
    return model, returns


def _market_params(cfg: RunConfig, n_assets: int, cost_index: int = 0) -> MarketParams | None:
    """Market parameters from the config, or None for the frictionless model.

    Current prices come from an explicit ``market`` config block when
    given, otherwise from the first row of the evaluation price file.
    """
    if cfg.market is not None:
        return market_params_from_dict(cfg.market, n_assets)
    if cfg.capital is None:
        return None
    if not cfg.prices_eval:
        raise IngestionError(
            "integer optimization needs --prices-eval (its first row is the "
            "current price) or an explicit market config block"
        )
    eval_table = fill_missing(_load_table(cfg.prices_eval, "--prices-eval"))
    return MarketParams(
        capital=float(cfg.capital),
        prices=eval_table.values[0],
        buy_cost_rates=cfg.buy_cost[cost_index],
        sell_cost_rates=cfg.sell_cost[min(cost_index, len(cfg.sell_cost) - 1)],
        risk_free_rate=float(cfg.risk_free),
        horizon=int(cfg.horizon),
        lot_sizes=int(cfg.lot_size),
    )


def _ga_params(cfg: RunConfig) -> ga_mod.GaParams:
    return ga_mod.GaParams(
        generations=int(cfg.generations),
        population=cfg.population,
        seed=int(cfg.seed),
    )


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- documents ---------------------------------------------------------------


def _portfolio_doc(portfolio, convention: AnnualizationConvention) -> dict:
    periods = convention.daily_to_annual_expectation
    return {
        "assets": list(portfolio.assets),
        "weights": [float(w) for w in portfolio.weights],
        "sparse_view": portfolio.sparse_view,
        "expected_return": {
            "daily": portfolio.expected_return,
            "annual": portfolio.expected_return * periods,
        },
        "risk": {
            "daily": portfolio.risk,
            # Display-only sqrt-of-periods scaling; optimization is daily.
            "annual_sqrt_scaled": portfolio.risk * math.sqrt(periods),
        },
    }


def _solution_doc(solution, convention: AnnualizationConvention) -> dict:
    periods = convention.daily_to_annual_expectation
    return {
        "assets": list(solution.assets),
        "shares": [int(c) for c in solution.shares],
        "implied_weights": [float(w) for w in solution.implied_weights],
        "sparse_weights": solution.sparse_weights,
        "sparse_shares": solution.sparse_shares,
        "residual": solution.residual,
        "fitness": solution.fitness,
        "expected_return": {
            "daily": solution.expected_return,
            "annual": solution.expected_return * periods,
        },
        "risk": {
            "daily": solution.risk,
            "annual_sqrt_scaled": solution.risk * math.sqrt(periods),
        },
    }


def _write_portfolio(out: Path, stem: str, doc: dict, fmt: str) -> list[Path]:
    if fmt == "json":
        return [_write_json(out / f"{stem}.json", doc)]
    rows = list(zip(doc["assets"], doc["weights"]))
    written = [_write_csv(out / f"{stem}.csv", ["asset", "weight"], rows)]
    summary_keys = {
        "expected_return_daily": doc["expected_return"]["daily"],
        "expected_return_annual": doc["expected_return"]["annual"],
        "risk_daily": doc["risk"]["daily"],
        "risk_annual_sqrt_scaled": doc["risk"]["annual_sqrt_scaled"],
    }
    if "residual" in doc:
        summary_keys["residual"] = doc["residual"]
        summary_keys["fitness"] = doc["fitness"]
    written.append(
        _write_csv(
            out / f"{stem}_summary.csv",
            list(summary_keys),
            [list(summary_keys.values())],
        )
    )
    if "shares" in doc:
        written.append(
            _write_csv(
                out / f"{stem}_shares.csv",
                ["asset", "shares"],
                [(a, str(c)) for a, c in zip(doc["assets"], doc["shares"])],
            )
        )
    return written


def _write_trace(out: Path, trace: ga_mod.GaTrace) -> Path:
    rows = [
        (str(gen + 1), best)
        for gen, best in enumerate(trace.best_fitness_per_generation)
    ]
    return _write_csv(out / "ga_trace.csv", ["generation", "best_fitness"], rows)


# --- commands ----------------------------------------------------------------


def cmd_stats(cfg: RunConfig) -> list[Path]:
    """Per-asset (risk, mean) dispersion table under the chosen risk kind."""
    model, _ = _build_model(cfg)
    risks = np.sqrt(np.diag(model.sigma))
    rows = [(a, r, m) for a, r, m in zip(model.assets, risks, model.mu)]
    return [_write_csv(_out_dir(cfg) / "stats.csv", ["asset", "risk", "mean"], rows)]


def cmd_optimize(cfg: RunConfig) -> list[Path]:
    """One portfolio: minimum-risk, target-return, tradeoff, or integer GA."""
    model, _ = _build_model(cfg)
    out = _out_dir(cfg)
    convention = _convention(cfg)
    market = _market_params(cfg, model.n_assets)
    fmt = cfg.format

    if market is not None:
        lam = 0.5 if cfg.lam is None else float(cfg.lam)
        solution, trace = ga_mod.ga_lambda_n_portfolio(model, lam, _ga_params(cfg), market)
        written = _write_portfolio(out, "solution", _solution_doc(solution, convention), fmt)
        written.append(_write_trace(out, trace))
        return written

    if cfg.target_return is not None:
        portfolio = markowitz_portfolio(
            model, ObjectiveParams(target_return=float(cfg.target_return))
        )
    elif cfg.ga:
        lam = 0.5 if cfg.lam is None else float(cfg.lam)
        portfolio, trace = ga_mod.ga_lambda_portfolio(model, lam, _ga_params(cfg))
        written = _write_portfolio(out, "portfolio", _portfolio_doc(portfolio, convention), fmt)
        written.append(_write_trace(out, trace))
        return written
    else:
        lam = 0.0 if cfg.lam is None else float(cfg.lam)
        portfolio = lambda_portfolio(model, ObjectiveParams(lam=lam))
    return _write_portfolio(out, "portfolio", _portfolio_doc(portfolio, convention), fmt)


def cmd_frontier(cfg: RunConfig) -> list[Path]:
    """Frontier CSV plus optional random cloud and two-asset curve files."""
    model, _ = _build_model(cfg)
    out = _out_dir(cfg)
    n_points = int(cfg.points)
    written: list[Path] = []

    if cfg.ga:
        market = _market_params(cfg, model.n_assets)
        if market is not None and len(cfg.buy_cost) > 1:
            for index, level in enumerate(cfg.buy_cost):
                ladder_market = _market_params(cfg, model.n_assets, cost_index=index)
                points = ga_mod.ga_frontier(model, _ga_params(cfg), ladder_market, n_points)
                written.append(
                    _write_csv(
                        out / f"frontier_ga_cost_{level}.csv",
                        ["parameter", "risk", "return"],
                        [(p.parameter, p.risk, p.expected_return) for p in points],
                    )
                )
        else:
            points = ga_mod.ga_frontier(model, _ga_params(cfg), market, n_points)
            written.append(
                _write_csv(
                    out / "frontier_ga.csv",
                    ["parameter", "risk", "return"],
                    [(p.parameter, p.risk, p.expected_return) for p in points],
                )
            )
    else:
        points = frontier_mod.efficient_frontier(model, n_points)
        written.append(
            _write_csv(
                out / "frontier.csv",
                ["parameter", "risk", "return"],
                [(p.parameter, p.risk, p.expected_return) for p in points],
            )
        )

    if cfg.cloud:
        cloud = frontier_mod.random_portfolio_cloud(
            model, count=int(cfg.cloud), seed=int(cfg.seed)
        )
        written.append(_write_csv(out / "cloud.csv", ["risk", "return"], cloud))

    if cfg.two_asset:
        rows = []
        for i, j in itertools.combinations(range(model.n_assets), 2):
            sub = np.ix_([i, j], [i, j])
            curve = frontier_mod.two_asset_curve(model.mu[[i, j]], model.sigma[sub], 30)
            rows.extend(
                (model.assets[i], model.assets[j], risk, ret) for risk, ret in curve
            )
        written.append(
            _write_csv(
                out / "two_asset_curves.csv",
                ["asset_a", "asset_b", "risk", "return"],
                rows,
            )
        )
    return written


def cmd_fit(cfg: RunConfig) -> list[Path]:
    """Expected-versus-realized frontier comparison on a second period."""
    model, _ = _build_model(cfg)
    eval_table = fill_missing(_load_table(cfg.prices_eval, "--prices-eval"))
    returns_out = assets_return(eval_table)
    report = frontier_mod.frontier_fit(model, returns_out, int(cfg.points))
    out = _out_dir(cfg)
    written = [
        _write_csv(out / "fit_pairs.csv", ["expected", "realized"], report.pairs)
    ]
    summary = {
        "mean_error_daily": report.mean_error,
        "mean_underestimation_error_daily": report.mean_underestimation_error,
        "mean_error_annual": report.annual_mean_error,
        "mean_underestimation_error_annual": report.annual_mean_underestimation_error,
    }
    if cfg.format == "json":
        written.append(_write_json(out / "fit_summary.json", summary))
    else:
        written.append(
            _write_csv(out / "fit_summary.csv", list(summary), [list(summary.values())])
        )
    return written


# --- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="portopt",
        description="Portfolio selection toolkit: statistics, optimization, "
        "frontiers and out-of-sample fit.",
    )
    parser.add_argument("--config", help="JSON config file (or set $" + CONFIG_ENV_VAR + ")")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p: argparse.ArgumentParser):
        p.add_argument("--prices", help="in-sample price CSV")
        p.add_argument("--prices-eval", dest="prices_eval", help="evaluation price CSV")
        p.add_argument("--risk", choices=["var", "svar"], help="risk measure")
        p.add_argument("--threshold-b", dest="threshold_b", type=float,
                       help="critical return level for the downside measure")
        p.add_argument("--target-return", dest="target_return", type=float)
        p.add_argument("--lambda", dest="lam", type=float,
                       help="risk/return tradeoff in [0, 1]")
        p.add_argument("--ga", action="store_const", const=True, default=None,
                       help="use the genetic algorithm")
        p.add_argument("--generations", type=int)
        p.add_argument("--population", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--capital", type=float, help="capital for the integer model")
        p.add_argument("--buy-cost", dest="buy_cost", type=float, nargs="+",
                       help="proportional buy cost rate(s); several values form a ladder")
        p.add_argument("--sell-cost", dest="sell_cost", type=float, nargs="+")
        p.add_argument("--risk-free", dest="risk_free", type=float)
        p.add_argument("--horizon", type=int)
        p.add_argument("--lot-size", dest="lot_size", type=int)
        p.add_argument("--cloud", type=int, help="random portfolio sample count")
        p.add_argument("--points", type=int, help="frontier point count")
        p.add_argument("--two-asset", dest="two_asset", action="store_const", const=True,
                       default=None, help="emit all two-asset opportunity curves")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=["csv", "json"],
                       help="document format for portfolio/summary files")

    for name, handler, doc in (
        ("stats", cmd_stats, "per-asset risk/mean dispersion table"),
        ("optimize", cmd_optimize, "solve one portfolio program"),
        ("frontier", cmd_frontier, "sweep a frontier; optional cloud/curves"),
        ("fit", cmd_fit, "out-of-sample frontier fit report"),
    ):
        p = sub.add_parser(name, help=doc)
        add_shared(p)
        p.set_defaults(handler=handler)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = args.handler(_merge_config(args))
    except IngestionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except (QpError, TargetOutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AssetAlignmentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALIGNMENT
    except (PortfolioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
