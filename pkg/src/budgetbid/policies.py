"""Online bidding policies.

Every bidder is a scikit-learn style estimator. ``partial_fit(clearing, spot)``
absorbs one or more periods of observed prices, ``predict()`` returns the bid
vector for the next period and ``fit`` restarts from an empty history. The
driver decides which observations a bidder may see (information lag); the
bidders only ever consume the newest available period.

>>> bidder = DPDSBidder(budget=2.0, n_goods=1)
>>> bidder.predict()
array([0.])
>>> bidder.partial_fit([1.0], [3.0]).predict()
array([1.])
"""

import math
import warnings
from collections import deque

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_budget, check_prices
from .allocator import DEFAULT_MAX_COMBINATIONS, BudgetGrid, brute_force_mckp, solve_dp
from .exceptions import ConfigError, DimensionError, DomainError, InstanceTooLargeError
from .payoff import EmpiricalPayoff, MarketObservation

__all__ = [
    "BaseBidder", "DPDSBidder", "UCBIDGreedyBidder", "StochasticApproxBidder",
    "SlidingWindowBidder", "FixedBidder", "project_to_feasible", "make_bidder",
    "window_pairs",
    "POLICY_TYPES",
]


def project_to_feasible(x, budget):
    """Euclidean projection onto ``{x >= 0, sum(x) <= budget}``."""
    x = np.asarray(x, dtype=float).ravel()
    budget = float(budget)
    clipped = np.maximum(x, 0.0)
    if clipped.sum() <= budget:
        return clipped
    # sort-based threshold search for sum(max(x - theta, 0)) == budget
    u = np.sort(clipped)[::-1]
    css = np.cumsum(u) - budget
    ind = np.arange(1, u.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(clipped - theta, 0.0)


class BaseBidder(BaseEstimator):
    """Shared bookkeeping: goods count, observation count, step interface."""

    def _initialize(self, n_goods):
        self.n_goods_ = int(n_goods)
        self.n_observations_ = 0
        self._budget = check_budget(self.budget)
        self._init_state()

    def _init_state(self):
        raise NotImplementedError

    def _update(self, clearing, spot):
        raise NotImplementedError

    def _bid(self):
        raise NotImplementedError

    def _ensure_initialized(self, n_goods=None):
        if hasattr(self, "n_goods_"):
            if n_goods is not None and n_goods != self.n_goods_:
                raise DimensionError(f"expected {self.n_goods_} goods, got {n_goods}")
            return
        if n_goods is None:
            n_goods = getattr(self, "n_goods", None)
        elif getattr(self, "n_goods", None) not in (None, n_goods):
            raise DimensionError(f"bidder configured for {self.n_goods} goods, got {n_goods}")
        if n_goods is None:
            raise NotFittedError(
                f"{type(self).__name__} needs n_goods or at least one observation")
        self._initialize(n_goods)

    def reset(self):
        for attr in [a for a in vars(self) if a.endswith("_") or a.startswith("_")]:
            delattr(self, attr)
        return self

    def fit(self, clearing, spot):
        """Forget any history and learn from the given periods in order."""
        self.reset()
        return self.partial_fit(clearing, spot)

    def partial_fit(self, clearing, spot):
        """Absorb one period (1-d inputs) or several periods (rows of 2-d inputs)."""
        n_goods = getattr(self, "n_goods_", None)
        clearing, spot = check_prices(clearing, spot, n_goods=n_goods)
        self._ensure_initialized(clearing.shape[1])
        for lam, pi in zip(clearing, spot):
            self._absorb(lam, pi)
        return self

    def _absorb(self, clearing, spot):
        # one validated period; callers that check a whole stream up front
        # may use this directly
        self._update(clearing, spot)
        self.n_observations_ += 1

    def predict(self):
        """Bid vector for the next period."""
        self._ensure_initialized()
        return np.asarray(self._bid(), dtype=float).copy()

    def step(self, observation=None):
        """Absorb ``observation`` (a ``MarketObservation`` or ``None``) then bid."""
        if observation is not None:
            if not isinstance(observation, MarketObservation):
                observation = MarketObservation(*observation)
            self.partial_fit(observation.clearing, observation.spot)
        return self.predict()


class DPDSBidder(BaseBidder):
    """Empirical payoff maximization on a budget grid, solved by dynamic programming.

    Parameters
    ----------
    budget : float
        Per-period budget ``B``.
    schedule : {"power", "linear"}
        Grid resolution after ``t`` observations: ``max(ceil(t**gamma), 2)``
        for ``"power"``, ``t`` for ``"linear"``.
    gamma : float
        Exponent of the power schedule. Values below 1/2 trigger a warning;
        the regret guarantee needs at least 1/2.
    n_goods : int, optional
        Number of goods; lets the bidder emit the zero bid before any data.
    max_resolution : int, optional
        Upper cap on the grid resolution.
    """

    def __init__(self, budget=1.0, schedule="power", gamma=0.5, n_goods=None,
                 max_resolution=None):
        self.budget = budget
        self.schedule = schedule
        self.gamma = gamma
        self.n_goods = n_goods
        self.max_resolution = max_resolution

    def _init_state(self):
        if self.schedule not in ("power", "linear"):
            raise ConfigError(f"unknown schedule {self.schedule!r}; use 'power' or 'linear'")
        if self.schedule == "power":
            if not self.gamma > 0:
                raise ConfigError("gamma must be positive")
            if self.gamma < 0.5:
                warnings.warn(f"gamma={self.gamma} < 1/2 voids the regret guarantee",
                              stacklevel=3)
        self.payoffs_ = [EmpiricalPayoff() for _ in range(self.n_goods_)]
        self._cache = None

    def resolution(self, t):
        """Grid resolution used after ``t`` observations."""
        if self.schedule == "linear":
            alpha = max(int(t), 1)
        else:
            alpha = max(math.ceil(t ** self.gamma), 2)
        if self.max_resolution is not None:
            alpha = min(alpha, int(self.max_resolution))
        return alpha

    def _update(self, clearing, spot):
        for payoff, lam, pi in zip(self.payoffs_, clearing, spot):
            payoff.insert(lam, pi)

    def _bid(self):
        t = self.n_observations_
        if t == 0:
            return np.zeros(self.n_goods_)
        if self._cache is not None and self._cache[0] == t:
            return self._cache[1]
        alpha = self.resolution(t)
        grid = BudgetGrid(self._budget, alpha)
        table = np.empty((self.n_goods_, alpha + 1))
        saturations = []
        for k, payoff in enumerate(self.payoffs_):
            table[k], sat = payoff.values_on_grid(self._budget, alpha)
            saturations.append(sat)
        bids, value = solve_dp(table, grid, saturations)
        self.empirical_value_ = value
        self._cache = (t, bids)
        return bids


class UCBIDGreedyBidder(BaseBidder):
    """Greedy allocation by mean spread.

    Goods are visited in decreasing order of their sample-mean spread (ties by
    index). Each good with positive mean spread bids its sample-mean spot
    price if that is positive and fits in the remaining budget; goods that do
    not fit are skipped.
    """

    def __init__(self, budget=1.0, n_goods=None):
        self.budget = budget
        self.n_goods = n_goods

    def _init_state(self):
        self._spread_sum = np.zeros(self.n_goods_)
        self._spot_sum = np.zeros(self.n_goods_)

    def _update(self, clearing, spot):
        self._spread_sum += spot - clearing
        self._spot_sum += spot

    @property
    def spread_mean_(self):
        return self._spread_sum / max(self.n_observations_, 1)

    @property
    def spot_mean_(self):
        return self._spot_sum / max(self.n_observations_, 1)

    def _bid(self):
        bids = np.zeros(self.n_goods_)
        if self.n_observations_ == 0:
            return bids
        return greedy_allocation(self.spread_mean_, self.spot_mean_, self._budget)


def greedy_allocation(spread_mean, spot_mean, budget):
    spread_mean = np.asarray(spread_mean, dtype=float)
    spot_mean = np.asarray(spot_mean, dtype=float)
    bids = np.zeros(spread_mean.size)
    remaining = float(budget)
    for k in np.argsort(-spread_mean, kind="stable"):
        if spread_mean[k] <= 0:
            break
        cand = spot_mean[k]
        if cand <= 0 or cand > remaining:
            continue
        bids[k] = cand
        remaining -= cand
    return bids


class StochasticApproxBidder(BaseBidder):
    """Kiefer-Wolfowitz style finite-difference ascent with projection.

    After the ``n``-th observation each bid moves by
    ``a_n * spread * (1{x + c_n >= clearing} - 1{x >= clearing}) / c_n`` with
    ``a_n = a_scale / n`` and ``c_n = c_scale / n**(1/4)``, and the vector is
    projected back onto the budget set. Starts from the zero bid.
    """

    def __init__(self, budget=1.0, a_scale=5.5, c_scale=2.5, n_goods=None):
        self.budget = budget
        self.a_scale = a_scale
        self.c_scale = c_scale
        self.n_goods = n_goods

    def _init_state(self):
        if not (self.a_scale > 0 and self.c_scale > 0):
            raise ConfigError("a_scale and c_scale must be positive")
        self.bid_ = np.zeros(self.n_goods_)

    def _update(self, clearing, spot):
        n = self.n_observations_ + 1
        a = self.a_scale / n
        c = max(self.c_scale / n ** 0.25, 1e-12)
        x = self.bid_
        diff = (x + c >= clearing).astype(float) - (x >= clearing).astype(float)
        self.bid_ = project_to_feasible(x + a * (spot - clearing) * diff / c, self._budget)

    def _bid(self):
        return self.bid_


class SlidingWindowBidder(BaseBidder):
    """Exact empirical optimum over the last ``window`` periods.

    The per-good payoff step functions are rebuilt from the window and the
    multiple-choice knapsack over their breakpoints is solved exhaustively,
    so ``(window + 1) ** n_goods`` must stay below ``max_combinations``.
    """

    def __init__(self, budget=1.0, window=10, n_goods=None,
                 max_combinations=DEFAULT_MAX_COMBINATIONS):
        self.budget = budget
        self.window = window
        self.n_goods = n_goods
        self.max_combinations = max_combinations

    def _init_state(self):
        if int(self.window) != self.window or self.window < 1:
            raise ConfigError(f"window must be an integer >= 1, got {self.window!r}")
        size = (int(self.window) + 1) ** self.n_goods_
        if size > self.max_combinations:
            raise InstanceTooLargeError(
                f"window {self.window} with {self.n_goods_} goods needs {size} "
                f"combinations, above the cap of {self.max_combinations}")
        self.history_ = deque(maxlen=int(self.window))
        self._cache = None

    def _update(self, clearing, spot):
        self.history_.append((clearing.copy(), spot.copy()))

    def _bid(self):
        if not self.history_:
            return np.zeros(self.n_goods_)
        t = self.n_observations_
        if self._cache is not None and self._cache[0] == t:
            return self._cache[1]
        clearing = np.array([c for c, _ in self.history_])
        spot = np.array([s for _, s in self.history_])
        sets = window_pairs(clearing, spot)
        bids, _ = brute_force_mckp(sets, self._budget,
                                   max_combinations=self.max_combinations, prune=True)
        self._cache = (t, bids)
        return bids


def window_pairs(clearing, spot):
    """Per-good (breakpoints, average payoff) lists for a block of periods.

    Same step functions as inserting the rows into ``EmpiricalPayoff`` one by
    one, built by sorting instead.
    """
    n_periods, n_goods = clearing.shape
    order = np.argsort(clearing, axis=0, kind="stable")
    lam = np.take_along_axis(clearing, order, axis=0)
    spread = np.take_along_axis(spot - clearing, order, axis=0)
    bp = np.vstack([np.zeros((1, n_goods)), lam])
    cum = np.vstack([np.zeros((1, n_goods)), np.cumsum(spread, axis=0)])
    sets = []
    for k in range(n_goods):
        # tied prices all take the sum reached at the last copy
        last = np.searchsorted(bp[:, k], bp[:, k], side="right") - 1
        sets.append((bp[:, k], cum[last, k] / n_periods))
    return sets


class FixedBidder(BaseBidder):
    """Bids the same vector every period (zero when ``bids`` is None)."""

    def __init__(self, budget=1.0, bids=None, n_goods=None):
        self.budget = budget
        self.bids = bids
        self.n_goods = n_goods

    def _ensure_initialized(self, n_goods=None):
        if self.bids is not None and not hasattr(self, "n_goods_") and n_goods is None:
            n_goods = np.asarray(self.bids).size
        super()._ensure_initialized(n_goods)

    def _init_state(self):
        if self.bids is None:
            self._fixed = np.zeros(self.n_goods_)
        else:
            fixed = np.asarray(self.bids, dtype=float).ravel()
            if fixed.size != self.n_goods_:
                raise DimensionError(f"bids has {fixed.size} entries for {self.n_goods_} goods")
            if np.any(fixed < 0) or fixed.sum() > self._budget * (1 + 1e-12):
                raise DomainError("fixed bids must be non-negative and within budget")
            self._fixed = fixed

    def _update(self, clearing, spot):
        pass

    def _bid(self):
        return self._fixed


POLICY_TYPES = {
    "dpds": DPDSBidder,
    "ucbid_gr": UCBIDGreedyBidder,
    "sa": StochasticApproxBidder,
    "sliding_window": SlidingWindowBidder,
    "sw": SlidingWindowBidder,
    "fixed": FixedBidder,
    "zero": FixedBidder,
}


def make_bidder(kind, **params):
    """Instantiate a bidder by its short name (``dpds``, ``sa``, ``sw``, ...)."""
    try:
        cls = POLICY_TYPES[kind]
    except KeyError:
        raise ConfigError(
            f"unknown policy type {kind!r}; choose from {sorted(POLICY_TYPES)}") from None
    valid = cls._get_param_names()
    unknown = sorted(set(params) - set(valid))
    if unknown:
        raise ConfigError(f"{kind}: unknown parameters {unknown}; valid: {valid}")
    return cls(**params)
