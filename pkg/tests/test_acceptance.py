"""Acceptance gate: every primary criterion at its stated tolerance.

Each test prints one PASS line on success (visible with ``pytest -s``;
the test id itself doubles as the line under ``-v``).  The dataset-bound
regression checks at the bottom only run when the original price files
are supplied via ``PORTOPT_DATA_DIR`` (or a ``data/`` directory next to
the repository root); the headline numbers they assert are not
reproducible without that data.
"""

from __future__ import annotations

import itertools
import os
import time
from pathlib import Path

import numpy as np
import pytest

from portopt.cli import main
from portopt.frontier import (
    efficient_frontier,
    frontier_fit,
    random_portfolio_cloud,
    two_asset_curve,
)
from portopt.ga import GaParams, ga_frontier, ga_lambda_n_portfolio, ga_lambda_portfolio
from portopt.market import MarketParams, fitness
from portopt.market_data import ReturnsMatrix, assets_return, fill_missing, load_prices
from portopt.optimizers import ObjectiveParams, lambda_portfolio, markowitz_portfolio
from portopt.qp import QuadraticProgram, solve_qp
from portopt.risk_models import (
    RiskKind,
    build_risk_model,
    semicovariance_estrada,
    semivariance_exact,
)

from conftest import random_model, simplex_grid

PASS = "[PASS] {}"


# --- QP oracle equivalence ----------------------------------------------------


def test_qp_oracle_equivalence():
    """50 seeded PSD instances vs a 0.01-step simplex grid, plus the
    two-asset closed form; runtime under 5 s."""
    start = time.monotonic()
    grids = {n: simplex_grid(n, 0.01) for n in (2, 3, 4)}
    rng = np.random.default_rng(20240501)
    for trial in range(50):
        n = 2 + trial % 3
        a = rng.normal(size=(n + 3, n))
        dmat = a.T @ a / (n + 3)
        dvec = rng.normal(size=n) * 0.05
        qp = QuadraticProgram(
            dmat=dmat,
            dvec=dvec,
            a_eq=np.ones((1, n)),
            b_eq=np.ones(1),
            a_ineq=np.eye(n),
            b_ineq=np.zeros(n),
        )
        sol = solve_qp(qp)
        grid = grids[n]
        values = 0.5 * np.einsum("pi,ij,pj->p", grid, dmat, grid) - grid @ dvec
        assert sol.objective <= values.min() + 1e-4

    for _ in range(20):
        s1, s2 = rng.uniform(0.005, 0.06, size=2)
        sigma = np.diag([s1**2, s2**2])
        qp = QuadraticProgram(
            dmat=2.0 * sigma,
            dvec=np.zeros(2),
            a_eq=np.ones((1, 2)),
            b_eq=np.ones(1),
            a_ineq=np.eye(2),
            b_ineq=np.zeros(2),
        )
        w = solve_qp(qp).x
        closed_form = s2**2 / (s1**2 + s2**2)
        assert abs(w[0] - closed_form) < 1e-10

    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"QP oracle suite took {elapsed:.2f}s"
    print(PASS.format(f"QP oracle equivalence ({elapsed:.2f}s)"))


# --- frontier dominance ---------------------------------------------------------


def test_frontier_dominance_against_random_clouds():
    """20 seeded 5-asset instances: no cloud point beats the traced
    frontier at its own return by more than 1e-6 risk; under 30 s."""
    start = time.monotonic()
    for seed in range(20):
        model = random_model(np.random.default_rng(1000 + seed), 5)
        points = efficient_frontier(model, n_points=40)
        frontier_returns = np.array([p.expected_return for p in points])
        frontier_risks = np.array([p.risk for p in points])
        cloud = random_portfolio_cloud(model, count=10_000, seed=seed)
        interp = np.interp(cloud[:, 1], frontier_returns, frontier_risks)
        suspects = np.flatnonzero(cloud[:, 0] < interp - 1e-6)
        # linear interpolation overestimates a convex frontier, so confirm
        # any flagged point against the exact pinned solve at its return
        for idx in suspects:
            ret = float(cloud[idx, 1])
            exact = markowitz_portfolio(
                model, ObjectiveParams(target_return=ret, pin_return_equality=True)
            )
            assert cloud[idx, 0] >= exact.risk - 1e-6, (seed, idx)
    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"dominance suite took {elapsed:.2f}s"
    print(PASS.format(f"frontier dominance ({elapsed:.2f}s)"))


# --- semivariance identities ----------------------------------------------------


def test_semivariance_identities():
    """Symmetric-return identity at 1e-12, PSD on 100 instances, and
    single-asset exact/approximate agreement."""
    # variance = 2 x downside matrix diagonal for symmetric returns at B = mean
    for seed in range(20):
        rng = np.random.default_rng(300 + seed)
        half = rng.uniform(0.0005, 0.08, size=int(rng.integers(5, 60)))
        series = np.concatenate([half, -half])
        r = ReturnsMatrix(assets=("S",), values=series[:, None])
        variance_t = float(np.mean((series - series.mean()) ** 2))
        diag = float(semicovariance_estrada(r, float(series.mean()))[0, 0])
        assert abs(variance_t - 2.0 * diag) < 1e-12

    for seed in range(100):
        rng = np.random.default_rng(500 + seed)
        values = rng.normal(size=(int(rng.integers(3, 60)), int(rng.integers(1, 7)))) * 0.05
        r = ReturnsMatrix(
            assets=tuple(f"A{i}" for i in range(values.shape[1])), values=values
        )
        sigma = semicovariance_estrada(r, float(rng.uniform(-0.02, 0.02)))
        floor = -1e-10 * max(float(np.diag(sigma).max()), 0.0)
        assert np.linalg.eigvalsh(sigma).min() >= floor

    # one-asset collapse: identical terms, so any difference is summation
    # reordering in the last ulp
    for seed in range(30):
        rng = np.random.default_rng(700 + seed)
        values = rng.normal(size=(int(rng.integers(4, 500)), 1)) * 0.02
        r = ReturnsMatrix(assets=("A",), values=values)
        exact = semivariance_exact(r, np.array([1.0]), 0.0)
        approx = float(semicovariance_estrada(r, 0.0)[0, 0])
        assert abs(exact - approx) <= 1e-18

    print(PASS.format("semivariance identities"))


# --- two-asset geometry ---------------------------------------------------------


def test_two_asset_geometry():
    """Perfect-correlation sweep collinear to 1e-10; anti-correlated pair
    reaches zero risk at the closed-form mixing weight."""
    rng = np.random.default_rng(42)
    for _ in range(10):
        sa, sb = sorted(rng.uniform(0.005, 0.08, size=2))
        mu = np.sort(rng.uniform(0.0002, 0.004, size=2))

        sigma_pos = np.array([[sa**2, sa * sb], [sa * sb, sb**2]])
        curve = two_asset_curve(mu, sigma_pos, n_points=30)
        slope, intercept = np.polyfit(curve[:, 0], curve[:, 1], 1)
        residual = curve[:, 1] - (slope * curve[:, 0] + intercept)
        assert np.abs(residual).max() < 1e-10

        w = sb / (sa + sb)
        sigma_p = w * sa - (1.0 - w) * sb
        assert abs(sigma_p) < 1e-12
    print(PASS.format("two-asset geometry"))


# --- GA oracle gap ---------------------------------------------------------------


def test_ga_tradeoff_gap_against_qp():
    """10 seeded 10-asset instances: GA at lam=0.5, 300 generations comes
    within 2% relative fitness of the QP optimum; under 60 s."""
    start = time.monotonic()
    for seed in range(10):
        model = random_model(np.random.default_rng(2000 + seed), 10)
        qp_best = lambda_portfolio(model, ObjectiveParams(lam=0.5))
        f_qp = 0.5 * qp_best.expected_return - 0.5 * float(
            qp_best.weights @ model.sigma @ qp_best.weights
        )
        portfolio, trace = ga_lambda_portfolio(
            model, 0.5, GaParams(generations=300, seed=seed)
        )
        f_ga = 0.5 * portfolio.expected_return - 0.5 * portfolio.risk**2
        assert abs(f_qp - f_ga) / abs(f_qp) <= 0.02, (seed, f_qp, f_ga)
        assert (np.diff(trace.best_fitness_per_generation) >= 0).all()
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"GA gap suite took {elapsed:.2f}s"
    print(PASS.format(f"GA tradeoff gap ({elapsed:.2f}s)"))


# --- integer exhaustive oracle ----------------------------------------------------


def _integer_instance(seed: int):
    rng = np.random.default_rng(4000 + seed)
    prices = rng.uniform(3.0, 12.0, size=3)
    capital = float(rng.uniform(40.0, 80.0))
    rate = 0.01
    while True:
        caps = [int(capital // (p * (1 + rate))) for p in prices]
        if np.prod([c + 1 for c in caps]) <= 10_000:
            break
        capital *= 0.8
    model = random_model(rng, 3)
    market = MarketParams(
        capital=capital,
        prices=prices,
        buy_cost_rates=rate,
        sell_cost_rates=rate,
        risk_free_rate=0.0001,
        horizon=251,
    )
    grid = np.array(list(itertools.product(*[range(c + 1) for c in caps])))
    feasible = grid[
        (grid * prices * (1 + rate)).sum(axis=1) <= capital
    ]
    return model, market, feasible


def test_integer_ga_against_enumeration():
    """10 seeded 3-asset instances with lattice <= 1e4 points: the GA hits
    the enumeration optimum in at least 8, within 1% otherwise; under 60 s."""
    start = time.monotonic()
    exact_hits = 0
    for seed in range(10):
        model, market, feasible = _integer_instance(seed)
        best = float(np.asarray(fitness(feasible, model, market, 0.5)).max())
        solution, _ = ga_lambda_n_portfolio(
            model, 0.5, GaParams(generations=300, seed=seed), market
        )
        if np.isclose(solution.fitness, best, rtol=1e-12, atol=1e-15):
            exact_hits += 1
        else:
            assert best - solution.fitness <= 0.01 * abs(best), (seed, best, solution.fitness)
    assert exact_hits >= 8, f"only {exact_hits}/10 exact"
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"integer oracle suite took {elapsed:.2f}s"
    print(PASS.format(f"integer exhaustive oracle ({exact_hits}/10 exact, {elapsed:.2f}s)"))


# --- cost monotonicity and lot equivalence ----------------------------------------


def test_cost_ladder_and_lot_equivalence():
    """Max frontier return strictly falls as costs rise; lot-L run equals
    the lot-1 run on L-scaled prices bit for bit."""
    rng = np.random.default_rng(6000)
    model = random_model(rng, 8)
    prices = rng.uniform(2.0, 20.0, size=8)
    params = GaParams(generations=150, seed=77)
    max_returns = []
    for rate in (0.0, 0.01, 0.05, 0.1):
        market = MarketParams(
            capital=2000.0,
            prices=prices,
            buy_cost_rates=rate,
            sell_cost_rates=rate,
            risk_free_rate=0.0,
            horizon=251,
        )
        points = ga_frontier(model, params, market, n_points=15)
        max_returns.append(max(p.expected_return for p in points))
    assert all(b < a for a, b in zip(max_returns, max_returns[1:])), max_returns

    with_lots = MarketParams(
        capital=20_000.0, prices=prices, buy_cost_rates=0.01, lot_sizes=50
    )
    scaled = MarketParams(capital=20_000.0, prices=prices * 50, buy_cost_rates=0.01)
    s1, _ = ga_lambda_n_portfolio(model, 0.5, GaParams(generations=120, seed=3), with_lots)
    s2, _ = ga_lambda_n_portfolio(model, 0.5, GaParams(generations=120, seed=3), scaled)
    assert np.array_equal(s1.shares, s2.shares)
    assert s1.fitness == s2.fitness
    print(PASS.format(f"cost monotonicity {['%.3g' % r for r in max_returns]} + lot equivalence"))


# --- CLI determinism ---------------------------------------------------------------


def test_cli_byte_identical_reruns(tmp_path):
    """Every command rerun with the same config and seed writes identical bytes."""
    prices = tmp_path / "p.csv"
    rng = np.random.default_rng(8)
    steps = rng.uniform(-0.015, 0.02, size=(30, 4))
    values = 20.0 * np.cumprod(1.0 + steps, axis=0)
    rows = ["date,A,B,C,D"]
    rows += [f"d{i:03d}," + ",".join(f"{v:.6f}" for v in row) for i, row in enumerate(values)]
    prices.write_text("\n".join(rows) + "\n", encoding="utf-8")
    commands = [
        ["stats"],
        ["optimize", "--lambda", "0.4"],
        ["optimize", "--ga", "--lambda", "0.4", "--generations", "30"],
        ["frontier", "--points", "6", "--cloud", "200", "--two-asset"],
        ["fit", "--prices-eval", str(prices), "--points", "6"],
        ["optimize", "--capital", "300", "--buy-cost", "0.01", "--sell-cost", "0.01",
         "--lambda", "0.5", "--generations", "30"],
    ]
    for k, argv in enumerate(commands):
        base = ["--prices", str(prices), "--seed", "123"]
        if "--capital" in argv:
            base += ["--prices-eval", str(prices)]
        out_a, out_b = tmp_path / f"a{k}", tmp_path / f"b{k}"
        assert main(argv + base + ["--out", str(out_a)]) == 0
        assert main(argv + base + ["--out", str(out_b)]) == 0
        names_a = sorted(p.name for p in out_a.iterdir())
        names_b = sorted(p.name for p in out_b.iterdir())
        assert names_a == names_b
        for name in names_a:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), (argv, name)
    print(PASS.format("CLI determinism"))


# --- conditional regression checks (original dataset) ------------------------------


def _data_dir() -> Path | None:
    env = os.environ.get("PORTOPT_DATA_DIR")
    candidates = [Path(env)] if env else []
    candidates.append(Path(__file__).resolve().parent.parent / "data")
    for cand in candidates:
        if (cand / "prices-2005-2006.csv").exists() and (cand / "prices-2007.csv").exists():
            return cand
    return None


requires_dataset = pytest.mark.skipif(
    _data_dir() is None,
    reason="original prices-2005-2006.csv / prices-2007.csv not supplied",
)


@pytest.fixture(scope="module")
def dataset_models():
    data = _data_dir()
    in_sample = assets_return(fill_missing(load_prices(data / "prices-2005-2006.csv")))
    out_sample = assets_return(fill_missing(load_prices(data / "prices-2007.csv")))
    return in_sample, out_sample


@requires_dataset
def test_dataset_max_mean_asset(dataset_models):
    in_sample, _ = dataset_models
    model = build_risk_model(in_sample)
    idx = int(np.argmax(model.mu))
    assert "ABAT" in model.assets[idx]
    assert abs(model.mu[idx] - 0.006855) < 5e-7
    print(PASS.format("dataset max-mean asset"))


@requires_dataset
def test_dataset_min_variance_portfolio(dataset_models):
    in_sample, _ = dataset_models
    model = build_risk_model(in_sample)
    p = markowitz_portfolio(model)
    assert abs(p.expected_return - 0.0004407315) < 1e-6
    assert abs(p.risk - 0.004236929) < 1e-6
    print(PASS.format("dataset min-variance portfolio"))


@requires_dataset
def test_dataset_low_risk_target(dataset_models):
    in_sample, _ = dataset_models
    model = build_risk_model(in_sample)
    p = markowitz_portfolio(model, ObjectiveParams(target_return=0.002))
    assert abs(p.risk - 0.01006362) < 1e-6
    print(PASS.format("dataset target-0.002 risk"))


@requires_dataset
def test_dataset_fit_errors_variance(dataset_models):
    in_sample, out_sample = dataset_models
    model = build_risk_model(in_sample)
    report = frontier_fit(model, out_sample, n_points=40)
    assert abs(report.annual_mean_error - 0.22997690) < 1e-4
    assert abs(report.annual_mean_underestimation_error - 0.08396657) < 1e-4
    print(PASS.format("dataset fit errors (variance)"))


@requires_dataset
def test_dataset_fit_errors_semivariance(dataset_models):
    in_sample, out_sample = dataset_models
    model = build_risk_model(in_sample, RiskKind.SEMIVARIANCE)
    report = frontier_fit(model, out_sample, n_points=40)
    assert abs(report.annual_mean_error - 0.21296826) < 1e-4
    assert abs(report.annual_mean_underestimation_error - 0.08160426) < 1e-4
    print(PASS.format("dataset fit errors (semivariance)"))


@requires_dataset
def test_dataset_ga_reference_magnitudes(dataset_models):
    # Unseeded single-sample figures: order-of-magnitude reference only.
    in_sample, out_sample = dataset_models
    model = build_risk_model(in_sample)
    portfolio, _ = ga_lambda_portfolio(model, 0.5, GaParams(generations=300, seed=0))
    assert 0.3 * 0.002915660 < portfolio.expected_return < 3 * 0.002915660
    data = _data_dir()
    current = fill_missing(load_prices(data / "prices-2007.csv")).values[0]
    market = MarketParams(
        capital=10_000.0,
        prices=current,
        buy_cost_rates=0.01,
        sell_cost_rates=0.01,
        risk_free_rate=0.07 / 251,
        horizon=251,
    )
    solution, _ = ga_lambda_n_portfolio(model, 0.5, GaParams(generations=300, seed=0), market)
    assert 0.3 * 0.001198913 < solution.fitness < 3 * 0.001198913
    print(PASS.format("dataset GA reference magnitudes"))
