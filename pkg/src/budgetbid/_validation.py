"""Input checks shared by the bidders and drivers."""

import numpy as np
from sklearn.utils import check_array

from .exceptions import DimensionError, DomainError


def check_prices(clearing, spot, n_goods=None):
    """Validate a block of observations.

    Accepts a single period (1-d) or several periods (2-d, one row each) and
    returns two float arrays of shape ``(n_periods, n_goods)``.
    """
    clearing = np.asarray(clearing, dtype=float)
    spot = np.asarray(spot, dtype=float)
    if clearing.ndim == 1:
        clearing = clearing[None, :]
    if spot.ndim == 1:
        spot = spot[None, :]
    clearing = check_array(clearing, dtype=float, ensure_min_samples=1)
    spot = check_array(spot, dtype=float, ensure_min_samples=1)
    if clearing.shape != spot.shape:
        raise DimensionError(
            f"clearing prices have shape {clearing.shape} but spot prices {spot.shape}")
    if n_goods is not None and clearing.shape[1] != n_goods:
        raise DimensionError(f"expected {n_goods} goods, got {clearing.shape[1]}")
    if np.any(clearing <= 0):
        raise DomainError("clearing prices must be strictly positive")
    return clearing, spot


def check_budget(budget):
    budget = float(budget)
    if not np.isfinite(budget) or budget <= 0:
        raise DomainError(f"budget must be positive and finite, got {budget!r}")
    return budget


def check_bid_vector(bids, budget, atol=1e-9):
    """Raise unless ``bids`` is non-negative with total at most ``budget``."""
    bids = np.asarray(bids, dtype=float)
    if np.any(bids < 0):
        raise DomainError("bids must be non-negative")
    if bids.sum() > budget * (1 + atol) + atol:
        raise DomainError(f"bids spend {bids.sum()!r}, above the budget {budget!r}")
    return bids
