"""Elitist genetic algorithm for the portfolio tradeoff objectives.

Two problem bindings share one loop structure:

* continuous weights on the simplex, objective
  ``lam * mu'w - (1 - lam) * w'Sw``;
* integer share counts under capital, transaction costs and lots, with
  the net-return objective from :mod:`portopt.market` and a
  proportion-preserving repair operator keeping every individual
  feasible.

Per generation: roulette selection over shifted fitness, one escalating
mutation per pair (applied to the first parent), single-point crossover,
then a merge of parents and children keeping the best half - so the best
fitness trace is nondecreasing by construction.

Reproducibility: one seeded generator drives each run and draws in a
fixed order (selection uniforms for the whole population, then per pair:
mutation check, mutated gene and value if the check fires, crossover
cut).  Frontier sweeps derive one independent child seed per point from
the master seed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import market as mkt
from .errors import PortfolioError
from .frontier import FrontierPoint
from .market import IntegerSolution, MarketParams
from .optimizers import Portfolio, portfolio_from_weights
from .risk_models import RiskModel

#: Smallest population worth evolving; used when the asset count is low.
MIN_POPULATION = 30

#: Generations without improvement tolerated before an early stop.
EARLY_STOP_WINDOW = 30

#: Escalation added to the base mutation rate by the final generation.
MUTATION_RAMP_CONTINUOUS = 0.5
MUTATION_RAMP_INTEGER = 0.3

_DEFAULT_MUTATION = {"continuous": 0.2, "integer": 0.3}


class ZeroMassChild(PortfolioError):
    """Crossover produced a child with no mass to renormalize."""


@dataclass(frozen=True)
class GaParams:
    """Run parameters; unset fields resolve to per-binding defaults."""

    generations: int = 500
    base_mutation_rate: float | None = None
    population: int | None = None
    seed: int = 0
    report_threshold: float = 0.005
    early_stop: bool = False

    def __post_init__(self):
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if self.base_mutation_rate is not None and not 0.0 <= self.base_mutation_rate <= 1.0:
            raise ValueError("base_mutation_rate must lie in [0, 1]")
        if self.population is not None and (self.population < 2 or self.population % 2):
            raise ValueError("population must be an even count of at least 2")

    def population_for(self, n_assets: int) -> int:
        """Even population matching the gene count, floored at 30."""
        if self.population is not None:
            return self.population
        return max(MIN_POPULATION, 2 * (n_assets // 2))

    def mutation_base(self, binding: str) -> float:
        if self.base_mutation_rate is not None:
            return self.base_mutation_rate
        return _DEFAULT_MUTATION[binding]


@dataclass(frozen=True)
class GaTrace:
    """Best fitness per generation plus the closing population fitness."""

    best_fitness_per_generation: np.ndarray
    final_population_fitness: np.ndarray


# --- operators ---------------------------------------------------------------


def _selection_probabilities(fitness: np.ndarray) -> np.ndarray:
    """Roulette weights from possibly-negative fitness values.

    Fitness is shifted by its minimum (plus a tiny offset) so every
    individual keeps nonzero probability; a degenerate all-equal
    population falls back to uniform selection.
    """
    fitness = np.asarray(fitness, dtype=float)
    fmin = float(fitness.min())
    shifted = fitness - fmin + (1e-12 * abs(fmin) + 1e-15)
    total = shifted.sum()
    if not np.isfinite(total) or total <= 0.0:
        return np.full(fitness.shape[0], 1.0 / fitness.shape[0])
    return shifted / total


def roulette_select(fitness: np.ndarray, rng: np.random.Generator) -> int:
    """One index drawn with probability fitness_i / sum(fitness).

    Expects the nonnegative (already shifted) fitness mass; raw fitness
    with negative entries is shifted first so the rule stays total.
    Degenerate mass (zero or non-finite total) selects uniformly.
    """
    f = np.asarray(fitness, dtype=float)
    if f.size and f.min() < 0.0:
        f = f - f.min() + (1e-12 * abs(f.min()) + 1e-15)
    total = f.sum()
    if not np.isfinite(total) or total <= 0.0:
        probs = np.full(f.shape[0], 1.0 / f.shape[0])
    else:
        probs = f / total
    cum = np.cumsum(probs)
    return int(min(np.searchsorted(cum, rng.random(), side="left"), cum.shape[0] - 1))


def _roulette_indices(fitness: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(_selection_probabilities(fitness))
    draws = rng.random(count)
    return np.minimum(np.searchsorted(cum, draws, side="left"), cum.shape[0] - 1)


def crossover_continuous(
    w1: np.ndarray, w2: np.ndarray, cut: int
) -> tuple[np.ndarray, np.ndarray]:
    """Exchange prefix/suffix at ``cut`` and renormalize both children.

    ``cut`` counts genes kept from the first listed parent, so it runs
    over 1..N-1.  A child with zero total mass cannot be renormalized;
    that raises :class:`ZeroMassChild` and the caller resamples the cut.
    """
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    n = w1.shape[0]
    if not 1 <= cut <= n - 1:
        raise ValueError(f"cut must lie in [1, {n - 1}]")
    child1 = np.concatenate([w1[:cut], w2[cut:]])
    child2 = np.concatenate([w2[:cut], w1[cut:]])
    s1, s2 = child1.sum(), child2.sum()
    if s1 <= 0.0 or s2 <= 0.0:
        raise ZeroMassChild(f"cut {cut} left a child with zero mass")
    return child1 / s1, child2 / s2


def mutate_continuous(
    w: np.ndarray, generation_j: int, params: GaParams, rng: np.random.Generator
) -> np.ndarray:
    """Escalating one-gene mutation: fires with probability
    ``mr + (j/m) * 0.5`` and replaces a random gene by U(0, 2).

    Renormalization happens at crossover, not here.
    """
    out = np.array(w, dtype=float)
    rate = params.mutation_base("continuous") + (
        generation_j / params.generations
    ) * MUTATION_RAMP_CONTINUOUS
    if rng.random() < rate:
        gene = int(rng.integers(out.shape[0]))
        out[gene] = rng.uniform(0.0, 2.0)
    return out


def _cross_resampling(w1, w2, rng: np.random.Generator, n: int):
    # Zero-mass children only arise from exactly-zero gene blocks, which
    # evolved populations never contain; bounded retries then parents as-is.
    for _ in range(64):
        cut = int(rng.integers(1, n))
        try:
            return crossover_continuous(w1, w2, cut)
        except ZeroMassChild:
            continue
    return w1 / w1.sum(), w2 / w2.sum()


# --- continuous binding ------------------------------------------------------


def _continuous_fitness(weights: np.ndarray, model: RiskModel, lam: float) -> np.ndarray:
    returns = weights @ model.mu
    variances = np.einsum("pi,ij,pj->p", weights, model.sigma, weights)
    return lam * returns - (1.0 - lam) * variances


def ga_lambda_portfolio(
    model: RiskModel, lam: float, params: GaParams | None = None
) -> tuple[Portfolio, GaTrace]:
    """Approximate the tradeoff optimum with the continuous-weight GA."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    params = params or GaParams()
    n = model.n_assets
    rng = np.random.default_rng(params.seed)

    if n == 1:
        w = np.ones((1, 1))
        f = _continuous_fitness(w, model, lam)
        trace = GaTrace(f.copy(), f.copy())
        return portfolio_from_weights(model, w[0], params.report_threshold), trace

    pop = params.population_for(n)
    m = params.generations
    weights = rng.random((pop, n))
    weights /= weights.sum(axis=1, keepdims=True)
    fit = _continuous_fitness(weights, model, lam)
    order = np.argsort(fit, kind="stable")
    weights, fit = weights[order], fit[order]
    best = [float(fit[-1])]

    for j in range(2, m + 1):
        chosen = _roulette_indices(fit, pop, rng)
        children = np.empty_like(weights)
        for i in range(0, pop, 2):
            parent1 = mutate_continuous(weights[chosen[i]], j, params, rng)
            parent2 = weights[chosen[i + 1]]
            children[i], children[i + 1] = _cross_resampling(parent1, parent2, rng, n)
        child_fit = _continuous_fitness(children, model, lam)
        merged_fit = np.concatenate([fit, child_fit])
        keep = np.argsort(merged_fit, kind="stable")[pop:]
        weights = np.vstack([weights, children])[keep]
        fit = merged_fit[keep]
        best.append(float(fit[-1]))
        if params.early_stop and len(best) > EARLY_STOP_WINDOW:
            if best[-1] <= best[-1 - EARLY_STOP_WINDOW]:
                break

    trace = GaTrace(np.array(best), fit.copy())
    return portfolio_from_weights(model, weights[-1], params.report_threshold), trace


# --- integer binding ---------------------------------------------------------


def repair_integer(n_raw: np.ndarray, params: MarketParams) -> np.ndarray:
    """Project an integer purchase back into the budget.

    The raw counts' value proportions are preserved as closely as
    possible: assets are visited in decreasing proportion order (ties by
    ascending index) and each count is re-derived as
    ``floor(proportion * K / (p_i * (1 + cb_i)))``, which always leaves a
    nonnegative residual.
    """
    n_raw = np.asarray(n_raw, dtype=int)
    p_eff = params.effective_prices
    unit = p_eff * (1.0 + params.buy_cost_rates)
    value = p_eff * n_raw
    total = float(value.sum())
    out = np.zeros(n_raw.shape[0], dtype=int)
    if total <= 0.0:
        return out
    props = value / total
    visit = np.argsort(-props, kind="stable")
    for idx in visit:
        if props[idx] <= 0.0:
            break
        out[idx] = int((props[idx] * params.capital) // unit[idx])
    # Guard against float rounding pushing the outlay past the capital.
    while params.capital - float((out * unit).sum()) < 0.0:
        for idx in visit:
            if out[idx] > 0:
                out[idx] -= 1
                break
    return out


def _initial_integer_population(
    pop: int, params: MarketParams, rng: np.random.Generator
) -> np.ndarray:
    n = params.n_assets
    unit = params.effective_prices * (1.0 + params.buy_cost_rates)
    counts = np.zeros((pop, n), dtype=int)
    for i in range(pop):
        remaining = params.capital
        for asset in rng.permutation(n):
            capacity = int(remaining // unit[asset])
            counts[i, asset] = int(rng.integers(0, capacity + 1)) if capacity > 0 else 0
            remaining = params.capital - float((counts[i] * unit).sum())
        if remaining < 0.0:
            counts[i] = repair_integer(counts[i], params)
    return counts


def ga_lambda_n_portfolio(
    model: RiskModel,
    lam: float,
    params: GaParams | None = None,
    market: MarketParams | None = None,
) -> tuple[IntegerSolution, GaTrace]:
    """Integer-share GA under capital, transaction costs and lot sizes."""
    if market is None:
        raise ValueError("market parameters are required for the integer binding")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    if market.n_assets != model.n_assets:
        raise ValueError("market and model asset counts differ")
    params = params or GaParams()
    n = model.n_assets
    rng = np.random.default_rng(params.seed)
    pop = params.population_for(n)
    m = params.generations
    mutation_cap = max(2 * int(market.capital // market.effective_prices.min()), 1)

    counts = _initial_integer_population(pop, market, rng)
    fit = np.asarray(mkt.fitness(counts, model, market, lam))
    order = np.argsort(fit, kind="stable")
    counts, fit = counts[order], fit[order]
    best = [float(fit[-1])]

    for j in range(2, m + 1):
        chosen = _roulette_indices(fit, pop, rng)
        children = np.empty_like(counts)
        for i in range(0, pop, 2):
            n1 = counts[chosen[i]].copy()
            n2 = counts[chosen[i + 1]]
            rate = params.mutation_base("integer") + (j / m) * MUTATION_RAMP_INTEGER
            if rng.random() < rate:
                gene = int(rng.integers(n))
                n1[gene] = int(rng.integers(1, mutation_cap + 1))
            if n > 1:
                cut = int(rng.integers(1, n))
                c1 = np.concatenate([n1[:cut], n2[cut:]])
                c2 = np.concatenate([n2[:cut], n1[cut:]])
            else:
                c1, c2 = n1, n2.copy()
            children[i] = repair_integer(c1, market)
            children[i + 1] = repair_integer(c2, market)
        child_fit = np.asarray(mkt.fitness(children, model, market, lam))
        merged_fit = np.concatenate([fit, child_fit])
        keep = np.argsort(merged_fit, kind="stable")[pop:]
        counts = np.vstack([counts, children])[keep]
        fit = merged_fit[keep]
        best.append(float(fit[-1]))
        if params.early_stop and len(best) > EARLY_STOP_WINDOW:
            if best[-1] <= best[-1 - EARLY_STOP_WINDOW]:
                break

    trace = GaTrace(np.array(best), fit.copy())
    solution = mkt.evaluate(counts[-1], model, market, lam, params.report_threshold)
    return solution, trace


# --- frontier sweep ----------------------------------------------------------


def ga_frontier(
    model: RiskModel,
    params: GaParams | None = None,
    market: MarketParams | None = None,
    n_points: int = 40,
):
    """GA-driven frontier: lam swept over [0, 1], one derived seed per point.

    Returns :class:`~portopt.frontier.FrontierPoint` entries whose
    ``portfolio`` is a :class:`Portfolio` for the continuous binding or an
    :class:`IntegerSolution` when market parameters are given.
    """
    params = params or GaParams()
    lams = np.round(np.linspace(0.0, 1.0, n_points), 6)
    seeds = np.random.SeedSequence(params.seed).generate_state(n_points, dtype=np.uint64)
    points = []
    for lam, seed in zip(lams, seeds):
        sub = dataclasses.replace(params, seed=int(seed))
        if market is None:
            best, _ = ga_lambda_portfolio(model, float(lam), sub)
        else:
            best, _ = ga_lambda_n_portfolio(model, float(lam), sub, market)
        points.append(
            FrontierPoint(
                risk=best.risk,
                expected_return=best.expected_return,
                parameter=float(lam),
                portfolio=best,
            )
        )
    return points
