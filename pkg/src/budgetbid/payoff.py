"""Empirical average payoff of a single good as a step function of the bid.

After ``t`` observations of (clearing price, spot price) the average payoff of
bidding ``x`` is ``(1/t) * sum_i (spot_i - clearing_i) * 1{x >= clearing_i}``.
The function only changes at observed clearing prices, so it is stored as a
sorted array of breakpoints together with the running payoff sum reached at
each breakpoint.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, DomainError

__all__ = ["MarketObservation", "EmpiricalPayoff"]


@dataclass(frozen=True)
class MarketObservation:
    """Clearing and spot prices of all goods for one auction period."""

    clearing: np.ndarray
    spot: np.ndarray

    def __post_init__(self):
        clearing = np.asarray(self.clearing, dtype=float).ravel()
        spot = np.asarray(self.spot, dtype=float).ravel()
        if clearing.shape != spot.shape:
            raise DimensionError(
                f"clearing has {clearing.size} goods but spot has {spot.size}")
        if not np.all(np.isfinite(clearing)) or not np.all(np.isfinite(spot)):
            raise DomainError("prices must be finite")
        if np.any(clearing <= 0):
            raise DomainError("clearing prices must be strictly positive")
        object.__setattr__(self, "clearing", clearing)
        object.__setattr__(self, "spot", spot)

    @property
    def n_goods(self):
        return self.clearing.size

    @property
    def spread(self):
        return self.spot - self.clearing


class EmpiricalPayoff:
    """Piecewise-constant empirical payoff of one good.

    ``breakpoints[0] == 0`` and ``cum_payoffs[0] == 0`` always hold. Entry
    ``i`` of ``cum_payoffs`` is the total payoff that a bid equal to
    ``breakpoints[i]`` would have collected over the history. Tied clearing
    prices are kept as separate breakpoints; the rightmost copy carries the
    full sum.
    """

    def __init__(self, capacity=16):
        capacity = max(int(capacity), 1) + 1
        self._bp = np.zeros(capacity)
        self._cum = np.zeros(capacity)
        self._size = 1
        self.count = 0

    @property
    def breakpoints(self):
        return self._bp[:self._size]

    @property
    def cum_payoffs(self):
        return self._cum[:self._size]

    def __len__(self):
        return self._size

    def __repr__(self):
        return (f"{type(self).__name__}(count={self.count}, "
                f"max_breakpoint={self._bp[self._size - 1]!r})")

    def _grow(self):
        capacity = 2 * self._bp.size
        bp = np.zeros(capacity)
        cum = np.zeros(capacity)
        bp[:self._size] = self._bp[:self._size]
        cum[:self._size] = self._cum[:self._size]
        self._bp, self._cum = bp, cum

    def insert(self, clearing_price, spot_price):
        """Add one observation in place and return ``self``.

        The new breakpoint goes after every breakpoint not above
        ``clearing_price``, so a repeated price lands to the right of its
        earlier copies. It starts from its left neighbour's running sum and,
        like every larger breakpoint, gains the spread
        ``spot_price - clearing_price``. Earlier copies of a tied price keep
        partial sums; only the rightmost copy is ever read.
        """
        clearing_price = float(clearing_price)
        spot_price = float(spot_price)
        if not clearing_price > 0 or not np.isfinite(clearing_price):
            raise DomainError(
                f"clearing price must be positive and finite, got {clearing_price!r}")
        if not np.isfinite(spot_price):
            raise DomainError(f"spot price must be finite, got {spot_price!r}")
        if self._size == self._bp.size:
            self._grow()
        n = self._size
        pos = int(np.searchsorted(self._bp[:n], clearing_price, side="right"))
        self._bp[pos + 1:n + 1] = self._bp[pos:n]
        self._cum[pos + 1:n + 1] = self._cum[pos:n]
        self._bp[pos] = clearing_price
        self._cum[pos] = self._cum[pos - 1]
        self._cum[pos:n + 1] += spot_price - clearing_price
        self._size = n + 1
        self.count += 1
        return self

    def evaluate(self, bid):
        """Average payoff of bidding ``bid`` over the recorded history."""
        bid = float(bid)
        if bid < 0 or np.isnan(bid):
            raise DomainError(f"bid must be non-negative, got {bid!r}")
        if self.count == 0:
            return 0.0
        i = int(np.searchsorted(self.breakpoints, bid, side="right")) - 1
        return self._cum[i] / self.count

    def values_on_grid(self, budget, resolution):
        """Evaluate the payoff at ``j * budget / resolution`` for ``j = 0..resolution``.

        Returns
        -------
        values : ndarray of shape (resolution + 1,)
        saturation : int
            Smallest grid index at or beyond the largest breakpoint; the
            function is constant from there on. ``resolution`` when the
            largest breakpoint exceeds the budget.
        """
        resolution = int(resolution)
        points = np.arange(resolution + 1) * (float(budget) / resolution)
        if self.count == 0:
            return np.zeros(resolution + 1), 0
        bp = self.breakpoints
        idx = np.searchsorted(bp, points, side="right") - 1
        values = self._cum[idx] / self.count
        passed = np.flatnonzero(idx == self._size - 1)
        saturation = int(passed[0]) if passed.size else resolution
        return values, saturation

    def pairs(self):
        """Breakpoints and the average payoff at each of them.

        This is the per-good (price, payoff) list of the multiple-choice
        knapsack formulation; tied breakpoints report the same value.
        """
        bp = self.breakpoints.copy()
        if self.count == 0:
            return bp, np.zeros_like(bp)
        idx = np.searchsorted(bp, bp, side="right") - 1
        return bp, self._cum[idx] / self.count

    def copy(self):
        other = EmpiricalPayoff.__new__(EmpiricalPayoff)
        other._bp = self._bp.copy()
        other._cum = self._cum.copy()
        other._size = self._size
        other.count = self.count
        return other

    def to_dict(self):
        return {
            "breakpoints": self.breakpoints.tolist(),
            "cum_payoffs": self.cum_payoffs.tolist(),
            "count": self.count,
        }

    @classmethod
    def from_dict(cls, data):
        bp = np.asarray(data["breakpoints"], dtype=float)
        cum = np.asarray(data["cum_payoffs"], dtype=float)
        count = int(data["count"])
        if bp.ndim != 1 or bp.shape != cum.shape:
            raise DimensionError("breakpoints and cum_payoffs must be equal-length lists")
        if bp.size != count + 1:
            raise DimensionError(
                f"expected {count + 1} breakpoints for count={count}, got {bp.size}")
        if bp[0] != 0 or cum[0] != 0:
            raise DomainError("first breakpoint and its payoff sum must be 0")
        if np.any(np.diff(bp) < 0):
            raise DomainError("breakpoints must be non-decreasing")
        if np.any(bp[1:] <= 0):
            raise DomainError("observed clearing prices must be positive")
        payoff = cls(capacity=count)
        payoff._bp[:bp.size] = bp
        payoff._cum[:cum.size] = cum
        payoff._size = bp.size
        payoff.count = count
        return payoff

    @classmethod
    def from_history(cls, clearing, spot):
        """Build by inserting the observations of one good in order."""
        clearing = np.asarray(clearing, dtype=float).ravel()
        spot = np.asarray(spot, dtype=float).ravel()
        if clearing.shape != spot.shape:
            raise DimensionError("clearing and spot histories differ in length")
        payoff = cls(capacity=clearing.size)
        for lam, pi in zip(clearing, spot):
            payoff.insert(lam, pi)
        return payoff
