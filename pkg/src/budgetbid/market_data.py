"""Historical day-ahead / real-time price panels and the virtual-bidding backtest.

Input CSV schema (one or more files)::

    date,location,hour,da_price,rt_price
    2012-01-01,CAPITL,0,41.20,38.75

``date`` is ISO-8601, ``hour`` an integer in 0..23, prices are per MWh. Each
(location, hour) pair is traded on both sides. A sell bid at price ``y``
clears when ``y <= da`` and earns ``da - rt``; with the price cap ``p`` it is
handled as a buy bid ``p - y`` against clearing price ``p - da`` and spot
price ``p - rt``.

Goods are ordered location-major, then hour, then side (buy before sell):
good ``(loc * 24 + hour) * n_sides + side``.
"""

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import clone

from .exceptions import DataGapError, DomainError, PanelIntegrityError, PanelParseError

__all__ = ["SellTransform", "PricePanel", "BacktestResult", "load_panel", "to_goods",
           "good_labels", "backtest", "policy_bid", "write_profit_csv"]

logger = logging.getLogger(__name__)

HOURS = 24
SIDES = ("buy", "sell")
COLUMNS = ("date", "location", "hour", "da_price", "rt_price")


@dataclass(frozen=True)
class SellTransform:
    price_cap: float = 1000.0

    def __post_init__(self):
        if not self.price_cap > 0:
            raise DomainError("price cap must be positive")


@dataclass
class PricePanel:
    """Prices on a (date, location, hour) cube; missing entries are NaN."""

    dates: list
    locations: list
    da: np.ndarray
    rt: np.ndarray

    def __post_init__(self):
        shape = (len(self.dates), len(self.locations), HOURS)
        if self.da.shape != shape or self.rt.shape != shape:
            raise PanelIntegrityError(f"price arrays must have shape {shape}")
        if list(self.dates) != sorted(set(self.dates)):
            raise PanelIntegrityError("panel dates must be unique and sorted")

    @property
    def n_records(self):
        return int(np.count_nonzero(~np.isnan(self.da) & ~np.isnan(self.rt)))

    def __len__(self):
        return self.n_records

    @property
    def complete(self):
        """Per-date flag: every location and hour has both prices."""
        ok = ~np.isnan(self.da) & ~np.isnan(self.rt)
        return ok.reshape(len(self.dates), -1).all(axis=1)

    def missing_dates(self, until=None):
        """Calendar days absent between the first date and ``until`` (or the last date)."""
        if not self.dates:
            return []
        last = self.dates[-1] if until is None else until
        present = set(self.dates)
        span = (last - self.dates[0]).days
        return [self.dates[0] + dt.timedelta(days=i) for i in range(span + 1)
                if self.dates[0] + dt.timedelta(days=i) not in present]

    def truncate(self, last_date):
        """Panel restricted to dates up to and including ``last_date``."""
        keep = [i for i, d in enumerate(self.dates) if d <= last_date]
        return PricePanel([self.dates[i] for i in keep], list(self.locations),
                          self.da[keep].copy(), self.rt[keep].copy())

    def copy(self):
        return PricePanel(list(self.dates), list(self.locations), self.da.copy(), self.rt.copy())

    def index_of(self, date):
        return self.dates.index(date)


def _parse_price(text):
    text = text.strip()
    if text == "" or text.lower() in ("nan", "na", "null"):
        return math.nan
    return float(text)


def load_panel(paths):
    """Read one or more price CSV files into a validated, date-sorted panel.

    Rows with a missing price are dropped with a warning (their day becomes
    incomplete and is skipped by the backtest). Malformed rows and
    non-positive day-ahead prices raise ``PanelParseError`` naming the line;
    a repeated (date, location, hour) raises ``PanelIntegrityError``.
    """
    if isinstance(paths, (str, bytes)) or hasattr(paths, "__fspath__"):
        paths = [paths]
    records = {}
    seen = set()
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise PanelParseError("empty file", path=path)
            header = [h.strip() for h in header]
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                raise PanelParseError(f"header lacks columns {missing}", line=1, path=path)
            col = {c: header.index(c) for c in COLUMNS}
            for row in reader:
                line = reader.line_num
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) < len(header):
                    raise PanelParseError(f"expected {len(header)} fields, got {len(row)}",
                                          line=line, path=path)
                try:
                    date = dt.date.fromisoformat(row[col["date"]].strip())
                    location = row[col["location"]].strip()
                    hour = int(row[col["hour"]])
                    da = _parse_price(row[col["da_price"]])
                    rt = _parse_price(row[col["rt_price"]])
                except ValueError as exc:
                    raise PanelParseError(str(exc), line=line, path=path) from None
                if not location:
                    raise PanelParseError("empty location", line=line, path=path)
                if not 0 <= hour < HOURS:
                    raise PanelParseError(f"hour {hour} outside 0..23", line=line, path=path)
                if not (math.isnan(da) or math.isfinite(da)) or not (
                        math.isnan(rt) or math.isfinite(rt)):
                    raise PanelParseError("prices must be finite", line=line, path=path)
                if not math.isnan(da) and da <= 0:
                    raise PanelParseError(
                        f"day-ahead price must be positive, got {da}", line=line, path=path)
                key = (date, location, hour)
                if key in seen:
                    raise PanelIntegrityError(
                        f"{path}:{line}: duplicate entry for {date} {location} hour {hour}")
                seen.add(key)
                if math.isnan(da) or math.isnan(rt):
                    logger.warning("%s:%d: missing price for %s %s hour %d; row dropped",
                                   path, line, date, location, hour)
                    continue
                records[key] = (da, rt)

    dates = sorted({k[0] for k in seen})
    locations = sorted({k[1] for k in seen})
    d_index = {d: i for i, d in enumerate(dates)}
    l_index = {loc: i for i, loc in enumerate(locations)}
    da = np.full((len(dates), len(locations), HOURS), np.nan)
    rt = np.full_like(da, np.nan)
    for (date, location, hour), (p_da, p_rt) in records.items():
        i, j = d_index[date], l_index[location]
        da[i, j, hour] = p_da
        rt[i, j, hour] = p_rt
    panel = PricePanel(dates, locations, da, rt)
    incomplete = [d for d, ok in zip(dates, panel.complete) if not ok]
    if incomplete:
        logger.warning("%d incomplete day(s) excluded from scoring: %s", len(incomplete),
                       ", ".join(str(d) for d in incomplete[:10]))
    return panel


def _check_sides(sides):
    sides = tuple(sides)
    if not sides or any(s not in SIDES for s in sides) or len(set(sides)) != len(sides):
        raise DomainError(f"sides must be a non-empty subset of {SIDES}, got {sides}")
    return tuple(s for s in SIDES if s in sides)


def to_goods(panel, transform=None, sides=SIDES):
    """Clearing and spot prices per day and good, shape ``(n_days, n_goods)``.

    Buy goods carry ``(da, rt)``; sell goods ``(cap - da, cap - rt)``.
    Incomplete days hold NaN.
    """
    transform = transform or SellTransform()
    sides = _check_sides(sides)
    n_days = len(panel.dates)
    cap = transform.price_cap
    if "sell" in sides and np.nanmax(panel.da, initial=-np.inf) >= cap:
        raise DomainError(
            f"price cap {cap} must exceed every day-ahead price "
            f"(max {np.nanmax(panel.da)})")
    layers = []
    for side in sides:
        if side == "buy":
            layers.append((panel.da, panel.rt))
        else:
            layers.append((cap - panel.da, cap - panel.rt))
    clearing = np.stack([lam for lam, _ in layers], axis=-1).reshape(n_days, -1)
    spot = np.stack([pi for _, pi in layers], axis=-1).reshape(n_days, -1)
    return clearing, spot


def good_labels(panel, sides=SIDES):
    sides = _check_sides(sides)
    return [f"{loc}:{hour:02d}:{side}" for loc in panel.locations
            for hour in range(HOURS) for side in sides]


@dataclass
class BacktestResult:
    dates: list
    daily_profit: np.ndarray
    bids: np.ndarray

    @property
    def cum_profit(self):
        return np.cumsum(self.daily_profit)

    @property
    def total(self):
        return float(self.daily_profit.sum())


def _configured(policy, budget, n_goods):
    est = clone(policy)
    params = est.get_params(deep=False)
    updates = {}
    if "budget" in params:
        updates["budget"] = budget
    if "n_goods" in params:
        updates["n_goods"] = n_goods
    return est.set_params(**updates)


def _iter_bids(panel, policy, budget, lag_days, transform, sides, targets):
    """Yield ``(target_index, bids)`` for sorted day indices, respecting the lag.

    Before bidding for day index ``d`` the policy has absorbed every complete
    day with index ``<= d - lag_days``, in date order. Target indices may run
    past the end of the panel.
    """
    clearing, spot = to_goods(panel, transform, sides)
    complete = panel.complete
    est = _configured(policy, budget, clearing.shape[1])
    fed = 0
    for d in targets:
        newest = d - lag_days
        while fed <= newest and fed < len(panel.dates):
            if complete[fed]:
                est.partial_fit(clearing[fed], spot[fed])
            fed += 1
        yield d, est.predict()


def _date_range(panel, start, end):
    first = panel.dates[0]
    start = first if start is None else start
    end = panel.dates[-1] if end is None else end
    return start, end


def backtest(panel, policy, budget, lag_days=2, transform=None, start=None, end=None,
             sides=SIDES):
    """Score ``policy`` on realized profits of every complete day in ``[start, end]``.

    Days before ``start`` only train the policy. The bid for day ``t`` uses
    observations through day ``t - lag_days``; a bid clears when it is at
    least the (transformed) clearing price and then earns spot minus clearing.
    """
    if lag_days < 1:
        raise DomainError("lag_days must be >= 1")
    if not panel.dates:
        raise DataGapError([])
    start, end = _date_range(panel, start, end)
    gaps = panel.missing_dates(until=min(end, panel.dates[-1]))
    if gaps:
        raise DataGapError(gaps)
    if end > panel.dates[-1]:
        raise DataGapError([panel.dates[-1] + dt.timedelta(days=i)
                            for i in range(1, (end - panel.dates[-1]).days + 1)])
    clearing, spot = to_goods(panel, transform, sides)
    complete = panel.complete
    scored = [i for i, d in enumerate(panel.dates)
              if start <= d <= end and complete[i]]
    profits = []
    bids = []
    for d, bid in _iter_bids(panel, policy, budget, lag_days, transform, sides, scored):
        cleared = bid >= clearing[d]
        # exactly rounded, so the total does not depend on good order
        profits.append(math.fsum(spot[d][cleared] - clearing[d][cleared]))
        bids.append(bid)
    n_goods = clearing.shape[1]
    return BacktestResult(
        dates=[panel.dates[i] for i in scored],
        daily_profit=np.asarray(profits, dtype=float),
        bids=np.asarray(bids, dtype=float).reshape(len(scored), n_goods),
    )


def policy_bid(panel, policy, budget, target_date, lag_days=2, transform=None, sides=SIDES):
    """Bid for ``target_date`` from the data of ``panel`` available under the lag."""
    first = panel.dates[0]
    d = (target_date - first).days
    if d < 0:
        raise DomainError("target date precedes the panel")
    gaps = panel.missing_dates(until=min(target_date, panel.dates[-1]))
    if gaps:
        raise DataGapError(gaps)
    (_, bid), = _iter_bids(panel, policy, budget, lag_days, transform, sides, [d])
    return bid


def write_profit_csv(path, results):
    """Write ``{policy_name: BacktestResult}`` as ``date,policy,daily_profit,cum_profit``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "policy", "daily_profit", "cum_profit"])
        for name, res in results.items():
            for date, daily, cum in zip(res.dates, res.daily_profit, res.cum_profit):
                writer.writerow([date.isoformat(), name, repr(float(daily)), repr(float(cum))])
