"""Budget allocation across goods.

``solve_dp`` maximizes a sum of per-good payoff tables over bids restricted to
an evenly spaced budget grid. ``brute_force_mckp`` solves the continuous
problem exactly for small instances by enumerating one breakpoint per good;
it serves as the reference for the grid solver and as the solver of the
sliding-window baseline.
"""

from dataclasses import dataclass

import numba
import numpy as np

from .exceptions import DimensionError, DomainError, InstanceTooLargeError

__all__ = ["BudgetGrid", "ValueTable", "solve_dp", "brute_force_mckp",
           "DEFAULT_MAX_COMBINATIONS"]

DEFAULT_MAX_COMBINATIONS = 10_000_000


@dataclass(frozen=True)
class BudgetGrid:
    """The points ``{0, B/alpha, 2B/alpha, ..., B}``."""

    budget: float
    resolution: int

    def __post_init__(self):
        if not float(self.budget) > 0:
            raise DomainError(f"budget must be positive, got {self.budget!r}")
        if int(self.resolution) != self.resolution or self.resolution < 1:
            raise DomainError(f"resolution must be an integer >= 1, got {self.resolution!r}")
        object.__setattr__(self, "budget", float(self.budget))
        object.__setattr__(self, "resolution", int(self.resolution))

    @property
    def step(self):
        return self.budget / self.resolution

    def point(self, j):
        return j * (self.budget / self.resolution)

    def points(self):
        return np.arange(self.resolution + 1) * (self.budget / self.resolution)


@dataclass
class ValueTable:
    """Bellman values and choices.

    ``values[n, j]`` is the best total payoff from the first ``n`` goods with
    ``j`` grid units of budget; ``choices[n - 1, j]`` the grid index spent on
    good ``n`` in that optimum.
    """

    values: np.ndarray
    choices: np.ndarray

    def backtrack(self):
        n_goods, width = self.choices.shape
        remaining = width - 1
        idx = np.zeros(n_goods, dtype=np.int64)
        for k in range(n_goods - 1, -1, -1):
            idx[k] = self.choices[k, remaining]
            remaining -= idx[k]
        return idx


@numba.njit(cache=True)
def _bellman_row(r, cand, prev, cur, choice):
    # r[cand] increases with the spend and prev is non-decreasing. For the
    # incumbent value `best`, a spend i can only tie or win if
    #   r[i] + prev[j] >= best        (prunes small spends) and
    #   r[top] + prev[j - i] >= best  (prunes large spends),
    # with top the largest affordable candidate. The incumbent is seeded
    # with the previous column's choice. Equal values resolve to the smallest
    # positive spend; the zero spend keeps strict priority.
    m = cand.size
    top = -1
    for j in range(prev.size):
        while top + 1 < m and cand[top + 1] <= j:
            top += 1
        best = prev[j]
        best_i = 0
        if j > 0:
            i0 = choice[j - 1]
            if i0 > 0:
                v0 = r[i0] + prev[j - i0]
                if v0 > best:
                    best = v0
                    best_i = i0
        if top < 0:
            cur[j] = best
            choice[j] = best_i
            continue
        r_top = r[cand[top]]
        # smallest q with r_top + prev[q] >= best
        lo = 0
        hi = j + 1
        while lo < hi:
            mid = (lo + hi) // 2
            if r_top + prev[mid] >= best:
                hi = mid
            else:
                lo = mid + 1
        i_max = j - lo
        # last candidate position with cand <= i_max
        lo = 0
        hi = top + 1
        while lo < hi:
            mid = (lo + hi) // 2
            if cand[mid] <= i_max:
                lo = mid + 1
            else:
                hi = mid
        s = lo - 1
        bound_base = prev[j]
        while s >= 0:
            i = cand[s]
            ri = r[i]
            if ri + bound_base < best:
                break
            v = ri + prev[j - i]
            if v > best or (v == best and best_i != 0 and i < best_i):
                best = v
                best_i = i
            s -= 1
        cur[j] = best
        choice[j] = best_i


def _as_grid_table(grid_values, resolution):
    table = np.asarray(grid_values, dtype=float)
    if table.ndim == 1:
        table = table[None, :]
    if table.ndim != 2 or table.shape[0] < 1:
        raise DimensionError("grid_values must be a non-empty list of per-good lists")
    if table.shape[1] != resolution + 1:
        raise DimensionError(
            f"each good needs {resolution + 1} grid values, got {table.shape[1]}")
    if np.any(table[:, 0] != 0):
        raise DomainError("payoff at zero bid must be 0 for every good")
    return table


def solve_dp(grid_values, grid, saturations=None, use_cap=True, full_table=False):
    """Allocate the grid budget across goods by dynamic programming.

    Parameters
    ----------
    grid_values : array-like of shape (n_goods, resolution + 1)
        Payoff of each good at each grid point; column 0 must be zero.
    grid : BudgetGrid
    saturations : sequence of int, optional
        Per-good grid index past which the payoff is constant. Bids beyond
        it are never considered when ``use_cap`` is true.
    full_table : bool
        Keep every row of Bellman values instead of two rolling rows.

    Returns
    -------
    bids : ndarray of shape (n_goods,)
    value : float
        Optimal total payoff on the grid.
    table : ValueTable, only when ``full_table`` is true.

    Notes
    -----
    Each Bellman step keeps the incumbent "spend nothing on this good" unless
    a positive spend strictly improves it, and among equal improvements the
    smallest spend wins. Only spends at which the good's payoff reaches a new
    running maximum can be that smallest maximizer (the value function of the
    remaining goods is non-decreasing in budget), so the inner search visits
    those indices alone; the result is identical to the full scan.
    """
    alpha = grid.resolution
    table = _as_grid_table(grid_values, alpha)
    n_goods = table.shape[0]
    if saturations is None:
        saturations = [alpha] * n_goods
    if len(saturations) != n_goods:
        raise DimensionError(f"expected {n_goods} saturation indices, got {len(saturations)}")

    prev = np.zeros(alpha + 1)
    rows = [prev] if full_table else None
    choices = np.zeros((n_goods, alpha + 1), dtype=np.int64)
    for n in range(n_goods):
        r = table[n]
        cap = alpha
        if use_cap:
            cap = min(alpha, max(int(saturations[n]), 0))
        running = np.maximum.accumulate(r[:cap + 1])
        # new running maxima above the zero-spend payoff
        cand = np.flatnonzero(r[1:cap + 1] > running[:cap]) + 1
        cur = np.empty_like(prev)
        _bellman_row(r, cand, prev, cur, choices[n])
        prev = cur
        if full_table:
            rows.append(cur)

    table_out = ValueTable(np.vstack(rows) if full_table else prev[None, :], choices)
    idx = table_out.backtrack()
    bids = idx * (grid.budget / alpha)
    value = float(prev[alpha])
    if full_table:
        return bids, value, table_out
    return bids, value


def _dominance_filter(prices, values):
    """Indices surviving dominance: strictly better than every cheaper option."""
    order = np.argsort(prices, kind="stable")
    keep = []
    best = -np.inf
    for i in order:
        if values[i] > best:
            keep.append(i)
            best = values[i]
    return np.sort(np.asarray(keep, dtype=np.int64))


def brute_force_mckp(breakpoint_sets, budget, max_combinations=DEFAULT_MAX_COMBINATIONS,
                     prune=False):
    """Exact multiple-choice knapsack by exhaustive enumeration.

    Picks one breakpoint per good (bidding that price), keeping the choice
    with total price at most ``budget`` that maximizes the total payoff. Ties
    go to the smaller total bid, then to the lexicographically smaller vector
    of breakpoint indices.

    ``prune`` first drops, per good, every breakpoint whose payoff does not
    beat all cheaper breakpoints; such a choice can never be the preferred
    optimum, so the answer is unchanged while the enumeration shrinks.

    Returns ``(bids, value)``.
    """
    budget = float(budget)
    if budget < 0:
        raise DomainError(f"budget must be non-negative, got {budget!r}")
    sets = []
    for prices, values in breakpoint_sets:
        prices = np.asarray(prices, dtype=float).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if prices.shape != values.shape or prices.size == 0:
            raise DimensionError("each good needs equal-length, non-empty price and payoff lists")
        if np.any(prices < 0):
            raise DomainError("breakpoint prices must be non-negative")
        sets.append((prices, values))
    if not sets:
        raise DimensionError("at least one good is required")

    if prune:
        index_maps = [_dominance_filter(p, v) for p, v in sets]
    else:
        index_maps = [np.arange(p.size) for p, _ in sets]

    size = 1
    for m in index_maps:
        size *= m.size
    if size > max_combinations:
        raise InstanceTooLargeError(
            f"{size} combinations exceed the cap of {max_combinations}")

    cost = np.zeros(1)
    value = np.zeros(1)
    for (prices, values), m in zip(sets, index_maps):
        cost = np.add.outer(cost, prices[m]).ravel()
        value = np.add.outer(value, values[m]).ravel()

    feasible = cost <= budget
    if not feasible.any():
        raise DomainError("no feasible combination; every good needs a zero-price option")
    masked = np.where(feasible, value, -np.inf)
    best_value = masked.max()
    tied = np.flatnonzero(masked == best_value)
    tied_cost = cost[tied]
    winner = tied[np.flatnonzero(tied_cost == tied_cost.min())[0]]

    local = np.unravel_index(winner, tuple(m.size for m in index_maps))
    bids = np.array([prices[m[i]] for (prices, _), m, i in zip(sets, index_maps, local)])
    return bids, float(best_value)
