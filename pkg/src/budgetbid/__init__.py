"""Online bidding under a budget in repeated multi-good uniform-price auctions."""

from .allocator import BudgetGrid, brute_force_mckp, solve_dp
from .oracle import (ExpUniformModel, LowerBoundModel, expected_payoff, expected_payoff_lb,
                     lower_bound_instance, waterfill_optimal)
from .payoff import EmpiricalPayoff, MarketObservation
from .policies import (DPDSBidder, FixedBidder, SlidingWindowBidder, StochasticApproxBidder,
                       UCBIDGreedyBidder, project_to_feasible)

__version__ = "0.1.0"

__all__ = [
    "BudgetGrid", "brute_force_mckp", "solve_dp",
    "ExpUniformModel", "LowerBoundModel", "expected_payoff", "expected_payoff_lb",
    "lower_bound_instance", "waterfill_optimal",
    "EmpiricalPayoff", "MarketObservation",
    "DPDSBidder", "FixedBidder", "SlidingWindowBidder", "StochasticApproxBidder",
    "UCBIDGreedyBidder", "project_to_feasible",
]
