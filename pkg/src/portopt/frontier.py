"""Frontier sweeps, opportunity-set geometry and out-of-sample fit.

Sweep ranges mirror the reference behavior: target returns run from
``min(mu) + |min(mu)| * 0.005`` to ``max(mu) - max(mu) * 0.005`` (note the
asymmetry when ``min(mu) < 0``: the lower bound moves toward zero), every
swept parameter is rounded to 6 decimals, and the default point counts
are 40 for frontiers, 30 for two-asset curves and 10000 for random
clouds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssetAlignmentError, QpError
from .market_data import ReturnsMatrix
from .optimizers import ObjectiveParams, Portfolio, lambda_portfolio, markowitz_portfolio
from .risk_models import RiskModel, mean_returns

RANGE_CLIP = 0.005
PARAMETER_DECIMALS = 6


@dataclass(frozen=True)
class FrontierPoint:
    """One (risk, return) pair plus the parameter that produced it."""

    risk: float
    expected_return: float
    parameter: float
    portfolio: Portfolio


@dataclass(frozen=True)
class FitReport:
    """Expected-versus-realized comparison over frontier portfolios.

    ``pairs`` holds per-point (expected, realized) daily returns.  The
    mean error averages |expected - realized|; the under-estimation error
    averages expected - realized over the points where the expectation
    was not met.  Annual figures are computed on annualized pairs
    (expected x expectation periods, realized x evaluation periods), so
    they are not plain multiples of the daily figures.
    """

    pairs: tuple[tuple[float, float], ...]
    mean_error: float
    mean_underestimation_error: float
    annual_mean_error: float
    annual_mean_underestimation_error: float


def _target_range(mu: np.ndarray, n_points: int, low: float | None = None) -> np.ndarray:
    lo = low if low is not None else float(mu.min()) + abs(float(mu.min())) * RANGE_CLIP
    hi = float(mu.max()) - float(mu.max()) * RANGE_CLIP
    return np.round(np.linspace(lo, hi, n_points), PARAMETER_DECIMALS)


def efficient_frontier(model: RiskModel, n_points: int = 40) -> list[FrontierPoint]:
    """Minimum-risk set traced over equally spaced pinned target returns."""
    if model.n_assets < 2:
        raise ValueError("frontier needs at least 2 assets")
    points = []
    for target in _target_range(model.mu, n_points):
        try:
            p = markowitz_portfolio(
                model,
                ObjectiveParams(target_return=float(target), pin_return_equality=True),
            )
        except QpError as exc:
            raise type(exc)(f"target {target}: {exc}") from exc
        points.append(
            FrontierPoint(
                risk=p.risk,
                expected_return=p.expected_return,
                parameter=float(target),
                portfolio=p,
            )
        )
    return points


def lambda_frontier(model: RiskModel, n_points: int = 40) -> list[FrontierPoint]:
    """Efficient frontier from the tradeoff program, lam swept over [0, 1]."""
    if model.n_assets < 2:
        raise ValueError("frontier needs at least 2 assets")
    points = []
    for lam in np.round(np.linspace(0.0, 1.0, n_points), PARAMETER_DECIMALS):
        p = lambda_portfolio(model, ObjectiveParams(lam=float(lam)))
        points.append(
            FrontierPoint(
                risk=p.risk,
                expected_return=p.expected_return,
                parameter=float(lam),
                portfolio=p,
            )
        )
    return points


def two_asset_curve(mu: np.ndarray, sigma: np.ndarray, n_points: int = 30) -> np.ndarray:
    """Opportunity-set curve for one asset pair.

    Sweeps the first asset's weight from 0 to 1 and returns an
    ``(n_points, 2)`` array of (risk, expected return) rows.
    """
    mu = np.asarray(mu, dtype=float).reshape(2)
    sigma = np.asarray(sigma, dtype=float).reshape(2, 2)
    w_a = np.linspace(0.0, 1.0, n_points)
    weights = np.column_stack([w_a, 1.0 - w_a])
    returns = weights @ mu
    variances = np.einsum("pi,ij,pj->p", weights, sigma, weights)
    risks = np.sqrt(np.maximum(variances, 0.0))
    return np.column_stack([risks, returns])


def random_simplex_weights(
    n_assets: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Stick-breaking weight samples: each coordinate uniform within the
    mass still unassigned, the last taking the remainder, then a random
    permutation of coordinates.

    Intentionally not uniform on the simplex; the density concentrates
    exactly where the opportunity-set plots show it.
    """
    weights = np.empty((count, n_assets))
    remaining = np.ones(count)
    for j in range(n_assets - 1):
        draw = rng.uniform(0.0, remaining)
        weights[:, j] = draw
        remaining = remaining - draw
    weights[:, n_assets - 1] = remaining
    return rng.permuted(weights, axis=1)


def random_portfolio_cloud(
    model: RiskModel, count: int = 10000, seed: int = 0
) -> np.ndarray:
    """Random opportunity-set points as an ``(count, 2)`` (risk, return)
    array, deterministic under ``seed``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    weights = random_simplex_weights(model.n_assets, count, np.random.default_rng(seed))
    returns = weights @ model.mu
    variances = np.einsum("pi,ij,pj->p", weights, model.sigma, weights)
    return np.column_stack([np.sqrt(np.maximum(variances, 0.0)), returns])


def frontier_fit(
    model: RiskModel, returns_out: ReturnsMatrix, n_points: int = 40
) -> FitReport:
    """Compare in-sample frontier expectations with realized returns.

    Targets run from the global minimum-risk portfolio's return up to the
    clipped maximum; each portfolio is solved with the return constraint
    as an inequality and then realized on the out-of-sample means.
    """
    if returns_out.assets != model.assets:
        extra = set(returns_out.assets) - set(model.assets)
        missing = set(model.assets) - set(returns_out.assets)
        raise AssetAlignmentError(
            "out-of-sample assets do not match the model "
            f"(missing: {sorted(missing)}, unexpected: {sorted(extra)})"
        )
    mu_out = mean_returns(returns_out)
    base = markowitz_portfolio(model)
    targets = _target_range(model.mu, n_points, low=base.expected_return)

    pairs = []
    for target in targets:
        p = markowitz_portfolio(model, ObjectiveParams(target_return=float(target)))
        pairs.append((p.expected_return, float(p.weights @ mu_out)))

    expected = np.array([e for e, _ in pairs])
    realized = np.array([r for _, r in pairs])
    conv = model.convention
    annual_expected = expected * conv.daily_to_annual_expectation
    annual_realized = realized * conv.evaluation_periods

    def _errors(e: np.ndarray, r: np.ndarray) -> tuple[float, float]:
        diff = e - r
        under = diff[diff > 0]
        return float(np.abs(diff).mean()), float(under.mean()) if under.size else 0.0

    mean_error, under_error = _errors(expected, realized)
    annual_mean_error, annual_under_error = _errors(annual_expected, annual_realized)
    return FitReport(
        pairs=tuple(pairs),
        mean_error=mean_error,
        mean_underestimation_error=under_error,
        annual_mean_error=annual_mean_error,
        annual_mean_underestimation_error=annual_under_error,
    )
