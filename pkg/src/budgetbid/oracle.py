"""Known-distribution payoffs and optimal bids for the two parametric price models.

``ExpUniformModel``: clearing prices exponential with mean ``lambda_bar``,
spot prices uniform on ``pi_bar +/- spot_halfwidth``, independent.

``LowerBoundModel``: a single good with budget 1, clearing price uniform on
``[(1 - eps)/2, (1 + eps)/2]`` and Bernoulli(``pi_mean``) spot price. Its two
members ``pi_mean = 1/2 +/- eps`` are hard to tell apart in ``T`` periods.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, DomainError

__all__ = [
    "ExpUniformModel", "LowerBoundModel", "expected_payoff", "marginal_payoff",
    "bids_for_multiplier", "waterfill_optimal", "lower_bound_instance",
    "expected_payoff_lb", "optimal_bid", "expected_reward",
]

_BISECT_ITERS = 200


@dataclass(frozen=True)
class ExpUniformModel:
    lambda_bar: np.ndarray
    pi_bar: np.ndarray
    spot_halfwidth: float = 1.0

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambda_bar, dtype=float))
        pi = np.atleast_1d(np.asarray(self.pi_bar, dtype=float))
        if lam.ndim != 1 or lam.shape != pi.shape:
            raise DimensionError("lambda_bar and pi_bar must be vectors of equal length")
        if np.any(lam <= 0):
            raise DomainError("exponential means lambda_bar must be positive")
        if not self.spot_halfwidth >= 0:
            raise DomainError("spot_halfwidth must be non-negative")
        object.__setattr__(self, "lambda_bar", lam)
        object.__setattr__(self, "pi_bar", pi)
        object.__setattr__(self, "spot_halfwidth", float(self.spot_halfwidth))

    @property
    def n_goods(self):
        return self.lambda_bar.size

    def sample(self, rng, size=None):
        """Draw ``(clearing, spot)``; with ``size`` the arrays gain a leading axis."""
        shape = (self.n_goods,) if size is None else (size, self.n_goods)
        clearing = rng.exponential(self.lambda_bar, size=shape)
        # exponential draws of exactly 0 are possible in floating point
        clearing = np.maximum(clearing, np.finfo(float).tiny)
        h = self.spot_halfwidth
        spot = rng.uniform(self.pi_bar - h, self.pi_bar + h, size=shape)
        return clearing, spot


@dataclass(frozen=True)
class LowerBoundModel:
    epsilon: float
    pi_mean: float

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.5:
            raise DomainError(f"epsilon must lie in (0, 1/2], got {self.epsilon!r}")
        if not 0 <= self.pi_mean <= 1:
            raise DomainError(f"pi_mean must be a probability, got {self.pi_mean!r}")
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "pi_mean", float(self.pi_mean))

    n_goods = 1

    @property
    def support(self):
        return (1 - self.epsilon) / 2, (1 + self.epsilon) / 2

    def sample(self, rng, size=None):
        shape = (1,) if size is None else (size, 1)
        lo, hi = self.support
        clearing = rng.uniform(lo, hi, size=shape)
        spot = (rng.random(size=shape) < self.pi_mean).astype(float)
        return clearing, spot


def _check_bid(model, bid):
    bid = np.atleast_1d(np.asarray(bid, dtype=float))
    if bid.shape != (model.n_goods,):
        raise DimensionError(f"bid must have {model.n_goods} entries, got shape {bid.shape}")
    if np.any(bid < 0) or np.any(np.isnan(bid)):
        raise DomainError("bids must be non-negative")
    return bid


def expected_payoff(model, bid, per_good=False):
    """Expected one-period payoff ``E[(spot - clearing) . 1{bid >= clearing}]``.

    Closed form per good: ``(pi - lam)(1 - exp(-x/lam)) + x exp(-x/lam)``.
    """
    bid = _check_bid(model, bid)
    lam, pi = model.lambda_bar, model.pi_bar
    with np.errstate(over="ignore", invalid="ignore"):
        tail = np.exp(-bid / lam)
        xtail = np.where(np.isinf(bid), 0.0, bid * tail)
    values = (pi - lam) * (1 - tail) + xtail
    return values if per_good else float(values.sum())


def marginal_payoff(model, bid):
    """Per-good derivative ``(pi - x) exp(-x/lam) / lam``."""
    bid = _check_bid(model, bid)
    lam, pi = model.lambda_bar, model.pi_bar
    return (pi - bid) * np.exp(-bid / lam) / lam


def bids_for_multiplier(model, gamma):
    """Per-good bid whose marginal payoff equals ``gamma``.

    Goods with ``pi/lam < gamma`` (marginal at zero already below ``gamma``)
    bid 0. Otherwise the marginal decreases from ``pi/lam`` to 0 over
    ``[0, pi]`` and the root is found by bisection.
    """
    gamma = float(gamma)
    lam, pi = model.lambda_bar, model.pi_bar
    if np.any(pi <= 0):
        raise DomainError("all pi_bar entries must be positive; drop unprofitable goods first")
    if gamma <= 0:
        return pi.copy()
    lo = np.zeros_like(pi)
    hi = pi.copy()
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        above = (pi - mid) * np.exp(-mid / lam) / lam > gamma
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(pi, 1.0)):
            break
    bids = 0.5 * (lo + hi)
    return np.where(pi / lam < gamma, 0.0, bids)


def waterfill_optimal(model, budget):
    """Optimal bid under a known ``ExpUniformModel`` and its budget multiplier.

    Returns ``(bids, gamma)``. With ``sum(pi_bar) <= budget`` the budget does
    not bind and every good bids its mean spot price (``gamma = 0``).
    Otherwise ``gamma`` is bisected until the bids spend the budget.
    """
    budget = float(budget)
    if budget < 0:
        raise DomainError("budget must be non-negative")
    pi, lam = model.pi_bar, model.lambda_bar
    if np.any(pi <= 0):
        raise DomainError("all pi_bar entries must be positive; drop unprofitable goods first")
    if pi.sum() <= budget:
        return pi.copy(), 0.0
    lo, hi = 0.0, float(np.max(pi / lam))
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if bids_for_multiplier(model, mid).sum() > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    gamma = hi
    bids = bids_for_multiplier(model, gamma)
    return bids, gamma


def lower_bound_instance(horizon):
    """Two hard instances for horizon ``T`` and the regret floor ``sqrt(T)/(16 sqrt 5)``.

    Returns ``((high, low), floor)`` where ``high`` has spot mean ``1/2 + eps``
    and ``low`` has ``1/2 - eps`` with ``eps = 1 / (2 sqrt(5 T))``.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    eps = 1.0 / (2.0 * math.sqrt(5.0) * math.sqrt(horizon))
    pair = (LowerBoundModel(eps, 0.5 + eps), LowerBoundModel(eps, 0.5 - eps))
    floor = math.sqrt(horizon) / (16.0 * math.sqrt(5.0))
    return pair, floor


def expected_payoff_lb(model, bid):
    """Expected payoff of a scalar bid in ``[0, 1]`` under a ``LowerBoundModel``."""
    bid = np.asarray(bid, dtype=float).reshape(-1)
    if bid.size != 1:
        raise DimensionError("the lower-bound instance has a single good")
    bid = float(bid[0])
    if not 0 <= bid <= 1:
        raise DomainError(f"bid must lie in [0, 1], got {bid!r}")
    lo, hi = model.support
    u = min(max(bid, lo), hi)
    return (model.pi_mean * (u - lo) - 0.5 * (u * u - lo * lo)) / model.epsilon


def _lb_optimal(model):
    lo, hi = model.support
    if model.pi_mean <= lo:
        return 0.0
    return min(model.pi_mean, hi)


def optimal_bid(model, budget):
    """Known-distribution optimal bid vector for either model."""
    if isinstance(model, LowerBoundModel):
        if float(budget) != 1.0:
            raise DomainError("the lower-bound instance is defined for budget 1")
        return np.array([_lb_optimal(model)])
    return waterfill_optimal(model, budget)[0]


def expected_reward(model, bid):
    """Expected one-period payoff of ``bid`` for either model."""
    if isinstance(model, LowerBoundModel):
        return expected_payoff_lb(model, bid)
    return expected_payoff(model, bid)
