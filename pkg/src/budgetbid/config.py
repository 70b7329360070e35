"""INI run configuration.

Example (regret simulation)::

    [experiment]
    horizon = 2000
    runs = 200
    budget = 13.845
    lag = 1
    seed = 0

    [model]
    type = exp_uniform
    lambda_bar = 4, 6, 8, 8, 4
    pi_bar = 5, 8, 8, 9, 3
    spot_halfwidth = 1

    [policy.dpds]
    type = dpds
    schedule = linear

    [policy.sw]
    type = sliding_window
    window = 10

A backtest uses a ``[backtest]`` section (``budget``, ``lag``, ``price_cap``,
``start``, ``end``, ``sides``, ``data``) plus the same ``[policy.NAME]``
sections. Every key of a policy section other than ``type`` is passed to the
bidder's constructor.
"""

import configparser
import datetime as dt

import numpy as np

from .exceptions import ConfigError
from .oracle import ExpUniformModel, LowerBoundModel, lower_bound_instance
from .policies import make_bidder
from .simulator import ExperimentConfig

__all__ = ["read_config", "parse_value", "build_policies", "build_model",
           "experiment_from_config", "backtest_settings", "config_to_dict"]

POLICY_PREFIX = "policy."


def read_config(path):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cp


def parse_value(text):
    """Best-effort scalar parsing: int, float, bool, none, comma lists, else str."""
    text = text.strip()
    low = text.lower()
    if low in ("none", "null", ""):
        return None
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in text:
        return [parse_value(part) for part in text.split(",")]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _floats(section, key):
    try:
        values = np.array([float(v) for v in section[key].split(",")], dtype=float)
    except KeyError:
        raise ConfigError(f"[{section.name}] needs '{key}'") from None
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} must be comma-separated numbers") from None
    return values


def _get(section, key, cast, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"[{section.name}] needs '{key}'")
        return default
    try:
        return cast(section[key].strip())
    except ValueError:
        raise ConfigError(f"[{section.name}] {key}={section[key]!r} is not a valid "
                          f"{cast.__name__}") from None


def build_policies(cp):
    """Ordered ``{name: bidder}`` from every ``[policy.NAME]`` section."""
    policies = {}
    for name in cp.sections():
        if not name.startswith(POLICY_PREFIX):
            continue
        section = cp[name]
        label = name[len(POLICY_PREFIX):]
        if not label:
            raise ConfigError(f"policy section [{name}] needs a name")
        kind = section.get("type", label).strip()
        params = {k: parse_value(v) for k, v in section.items() if k != "type"}
        if kind == "oracle":
            kind, params = "fixed", {**params, "bids": "optimal"}
        policies[label] = make_bidder(kind, **params)
    if not policies:
        raise ConfigError("no [policy.NAME] sections found")
    return policies


def build_model(cp, horizon=None):
    try:
        return _build_model(cp, horizon)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None


def _build_model(cp, horizon):
    if "model" not in cp:
        raise ConfigError("missing [model] section")
    section = cp["model"]
    kind = section.get("type", "exp_uniform").strip()
    if kind == "exp_uniform":
        return ExpUniformModel(
            _floats(section, "lambda_bar"), _floats(section, "pi_bar"),
            _get(section, "spot_halfwidth", float, default=1.0))
    if kind == "lower_bound":
        instance = section.get("instance", "high").strip()
        epsilon = _get(section, "epsilon", float)
        if epsilon is None:
            if horizon is None:
                raise ConfigError("[model] lower_bound needs epsilon or a horizon")
            (high, _), _ = lower_bound_instance(horizon)
            epsilon = high.epsilon
        means = {"high": 0.5 + epsilon, "low": 0.5 - epsilon, "half": 0.5}
        if instance not in means:
            raise ConfigError(f"[model] instance must be one of {sorted(means)}")
        return LowerBoundModel(epsilon, means[instance])
    raise ConfigError(f"unknown model type {kind!r}; use exp_uniform or lower_bound")


def experiment_from_config(cp, seed=None, threads=None, budget=None, lag=None,
                           horizon=None, runs=None):
    """Assemble an ``ExperimentConfig``; keyword arguments override the file."""
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    section = cp["experiment"]
    horizon = horizon if horizon is not None else _get(section, "horizon", int, required=True)
    cfg = ExperimentConfig(
        model=build_model(cp, horizon),
        policies=build_policies(cp),
        horizon=horizon,
        runs=runs if runs is not None else _get(section, "runs", int, default=1),
        budget=budget if budget is not None else _get(section, "budget", float, required=True),
        lag=lag if lag is not None else _get(section, "lag", int, default=1),
        seed=seed if seed is not None else _get(section, "seed", int, default=0),
        threads=threads if threads is not None else _get(section, "threads", int, default=1),
    )
    return cfg.validate()


def backtest_settings(cp, budget=None, lag=None):
    if "backtest" not in cp:
        raise ConfigError("missing [backtest] section")
    section = cp["backtest"]
    sides = tuple(s.strip() for s in section.get("sides", "buy, sell").split(",") if s.strip())
    data = [p.strip() for p in section.get("data", "").split(",") if p.strip()]
    settings = {
        "budget": budget if budget is not None else _get(section, "budget", float, required=True),
        "lag_days": lag if lag is not None else _get(section, "lag", int, default=2),
        "price_cap": _get(section, "price_cap", float, default=1000.0),
        "start": _get(section, "start", dt.date.fromisoformat),
        "end": _get(section, "end", dt.date.fromisoformat),
        "sides": sides,
        "data": data,
    }
    if not settings["budget"] > 0:
        raise ConfigError("budget must be positive")
    if settings["lag_days"] < 1:
        raise ConfigError("lag must be >= 1")
    return settings


def config_to_dict(cp):
    return {name: dict(cp[name]) for name in cp.sections()}
