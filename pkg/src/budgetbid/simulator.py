"""Monte-Carlo regret experiments against a known price model.

Each run draws one i.i.d. price stream and feeds it to a fresh clone of every
policy (common random numbers across policies). At period ``t`` a policy has
seen the observations of periods ``1 .. t - lag`` and its bid is scored by
the gap between the known-distribution optimum and the *expected* payoff of
that bid. Run ``r`` draws from ``numpy.random.default_rng([seed, r])``, so
results do not depend on how runs are scheduled across workers.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import clone

from ._validation import check_prices
from .exceptions import ConfigError, DimensionError
from .oracle import ExpUniformModel, LowerBoundModel, expected_reward, optimal_bid
from .payoff import MarketObservation

__all__ = ["ExperimentConfig", "RegretTrajectory", "sample_prices", "run_rng",
           "run_experiment", "run_single"]

OPTIMAL = "optimal"


def run_rng(seed, run_index):
    """Random generator of one Monte-Carlo run."""
    return np.random.default_rng([int(seed), int(run_index)])


def sample_prices(model, rng):
    """One period of prices drawn from ``model``."""
    clearing, spot = model.sample(rng)
    return MarketObservation(clearing, spot)


@dataclass
class ExperimentConfig:
    model: object
    policies: dict
    horizon: int
    runs: int
    budget: float
    lag: int = 1
    seed: int = 0
    threads: int = 1
    keep_runs: bool = False

    def validate(self):
        if not isinstance(self.model, (ExpUniformModel, LowerBoundModel)):
            raise ConfigError(f"unsupported model {type(self.model).__name__}")
        if self.horizon < 1 or self.runs < 1:
            raise ConfigError("horizon and runs must be >= 1")
        if self.lag < 1:
            raise ConfigError("simulation lag must be >= 1")
        if not self.budget > 0:
            raise ConfigError("budget must be positive")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        if isinstance(self.model, LowerBoundModel) and self.budget != 1.0:
            raise ConfigError("the lower-bound model is defined for budget 1")
        return self


@dataclass
class RegretTrajectory:
    """Cumulative expected regret per policy, averaged over runs."""

    policies: list
    mean: np.ndarray
    stderr: np.ndarray
    optimal_bid: np.ndarray
    optimal_value: float
    n_runs: int
    runs: np.ndarray = field(default=None, repr=False)

    @property
    def horizon(self):
        return self.mean.shape[1]

    def final(self, policy):
        return float(self.mean[self.policies.index(policy), -1])

    def at(self, policy, t):
        """Mean cumulative regret after period ``t`` (1-based)."""
        return float(self.mean[self.policies.index(policy), t - 1])

    def rows(self):
        for t in range(self.horizon):
            for p, name in enumerate(self.policies):
                yield t + 1, name, float(self.mean[p, t]), float(self.stderr[p, t])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "policy", "mean_cum_regret", "stderr"])
            for t, name, mean, err in self.rows():
                writer.writerow([t, name, repr(mean), repr(err)])


def _prepare(policy, budget, n_goods, x_star):
    est = clone(policy)
    params = est.get_params(deep=False)
    updates = {}
    if "budget" in params:
        updates["budget"] = budget
    if "n_goods" in params:
        updates["n_goods"] = n_goods
    if isinstance(params.get("bids"), str):
        if params["bids"] != OPTIMAL:
            raise ConfigError(f"unknown bids keyword {params['bids']!r}")
        updates["bids"] = x_star
    return est.set_params(**updates)


def run_single(config, run_index, x_star=None):
    """Per-period incremental regret of every policy for one run, shape (P, T)."""
    model = config.model
    if x_star is None:
        x_star = optimal_bid(model, config.budget)
    r_star = expected_reward(model, x_star)
    rng = run_rng(config.seed, run_index)
    clearing, spot = check_prices(*model.sample(rng, size=config.horizon))
    n_goods = clearing.shape[1]
    regret = np.empty((len(config.policies), config.horizon))
    for p, policy in enumerate(config.policies.values()):
        est = _prepare(policy, config.budget, n_goods, x_star)
        est._ensure_initialized(n_goods)
        for t in range(config.horizon):
            seen = t + 1 - config.lag
            if seen >= 1:
                est._absorb(clearing[seen - 1], spot[seen - 1])
            bid = est.predict()
            if bid.shape != (n_goods,):
                raise DimensionError(f"policy produced {bid.shape} bids for {n_goods} goods")
            regret[p, t] = r_star - expected_reward(model, bid)
    return regret


def run_experiment(config):
    """Average cumulative regret over ``config.runs`` independent runs."""
    config.validate()
    x_star = optimal_bid(config.model, config.budget)
    r_star = expected_reward(config.model, x_star)
    if config.threads == 1:
        per_run = [run_single(config, r, x_star) for r in range(config.runs)]
    else:
        per_run = Parallel(n_jobs=config.threads)(
            delayed(run_single)(config, r, x_star) for r in range(config.runs))
    per_run = np.stack(per_run)
    cumulative = np.cumsum(per_run, axis=2)
    mean = cumulative.mean(axis=0)
    if config.runs > 1:
        stderr = cumulative.std(axis=0, ddof=1) / np.sqrt(config.runs)
    else:
        stderr = np.zeros_like(mean)
    return RegretTrajectory(
        policies=list(config.policies),
        mean=mean,
        stderr=stderr,
        optimal_bid=x_star,
        optimal_value=r_star,
        n_runs=config.runs,
        runs=per_run if config.keep_runs else None,
    )
