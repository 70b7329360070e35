"""Command-line entry point.

Subcommands::

    budgetbid simulate --config sim.ini [--out-dir D] [--seed S] [--threads N]
    budgetbid backtest --config bt.ini [--data a.csv b.csv] [--out-dir D]
    budgetbid solve snapshot.json [--budget B] [--resolution A] [--exact]
    budgetbid oracle --lambda-bar 4,6,8,8,4 --pi-bar 5,8,8,9,3 --budget 13.845

``simulate`` and ``backtest`` write a CSV next to ``manifest.json``, which
records the resolved settings, package versions and SHA-256 digests of every
input and output. Exit status: 0 on success, 1 on runtime or data failures,
2 on configuration errors.
"""

import argparse
import hashlib
import json
import logging
import os
import platform
import sys

import numpy as np

from . import __version__
from ._validation import check_prices
from .allocator import BudgetGrid, brute_force_mckp, solve_dp
from .config import (backtest_settings, build_policies, config_to_dict,
                     experiment_from_config, read_config)
from .exceptions import ConfigError, DataGapError, InstanceTooLargeError
from .market_data import SellTransform, backtest, load_panel, to_goods, write_profit_csv
from .oracle import ExpUniformModel, expected_payoff, waterfill_optimal
from .payoff import EmpiricalPayoff
from .simulator import run_experiment

logger = logging.getLogger("budgetbid")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _versions():
    import joblib
    import numba
    import sklearn
    return {"budgetbid": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scikit-learn": sklearn.__version__,
            "joblib": joblib.__version__, "numba": numba.__version__}


def _write_manifest(out_dir, command, config_path, settings, inputs, outputs):
    manifest = {
        "command": command,
        "config_file": os.path.basename(config_path),
        "config": config_to_dict(read_config(config_path)),
        "resolved": settings,
        "inputs": {os.path.basename(p): _sha256(p) for p in [config_path, *inputs]},
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
        "versions": _versions(),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _policy_params(policies):
    return {name: {"type": type(p).__name__, **{k: _jsonable(v)
                                               for k, v in p.get_params().items()}}
            for name, p in policies.items()}


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _check_policies(policies, budget, n_goods):
    # build every bidder once so bad parameters fail before the long run
    from .simulator import _prepare
    for name, policy in policies.items():
        try:
            _prepare(policy, budget, n_goods, np.zeros(n_goods))._ensure_initialized(n_goods)
        except (ConfigError, InstanceTooLargeError, ValueError) as exc:
            raise ConfigError(f"policy {name!r}: {exc}") from None


def cmd_simulate(args):
    cp = read_config(args.config)
    config = experiment_from_config(cp, seed=args.seed, threads=args.threads,
                                    budget=args.budget, lag=args.lag,
                                    horizon=args.horizon, runs=args.runs)
    _check_policies(config.policies, config.budget, config.model.n_goods)
    os.makedirs(args.out_dir, exist_ok=True)
    trajectory = run_experiment(config)
    csv_path = os.path.join(args.out_dir, "regret.csv")
    trajectory.to_csv(csv_path)
    model = config.model
    settings = {
        "model": {"type": type(model).__name__,
                  **{k: _jsonable(v) for k, v in vars(model).items()}},
        "policies": _policy_params(config.policies),
        "horizon": config.horizon, "runs": config.runs, "budget": config.budget,
        "lag": config.lag, "seed": config.seed,
        "optimal_bid": trajectory.optimal_bid.tolist(),
        "optimal_value": trajectory.optimal_value,
    }
    _write_manifest(args.out_dir, "simulate", args.config, settings, [], [csv_path])
    for name in trajectory.policies:
        print(f"{name}: cumulative regret at T={trajectory.horizon}: "
              f"{trajectory.final(name):.6g}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_backtest(args):
    cp = read_config(args.config)
    settings = backtest_settings(cp, budget=args.budget, lag=args.lag)
    policies = build_policies(cp)
    data = args.data or settings["data"]
    if not data:
        raise ConfigError("no price files given (use --data or [backtest] data)")
    transform = SellTransform(settings["price_cap"])
    panel = load_panel(data)
    n_goods = to_goods(panel, transform, settings["sides"])[0].shape[1]
    _check_policies(policies, settings["budget"], n_goods)
    results = {name: backtest(panel, policy, settings["budget"],
                              lag_days=settings["lag_days"], transform=transform,
                              start=settings["start"], end=settings["end"],
                              sides=settings["sides"])
               for name, policy in policies.items()}
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "profit.csv")
    write_profit_csv(csv_path, results)
    resolved = {**settings, "data": [os.path.basename(p) for p in data],
                "start": settings["start"] and settings["start"].isoformat(),
                "end": settings["end"] and settings["end"].isoformat(),
                "sides": list(settings["sides"]),
                "policies": _policy_params(policies),
                "n_goods": n_goods, "locations": panel.locations}
    _write_manifest(args.out_dir, "backtest", args.config, resolved, data, [csv_path])
    for name, res in results.items():
        print(f"{name}: total profit over {len(res.dates)} days: {res.total:.6g}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def _load_snapshot(path):
    try:
        with open(path) as fh:
            snap = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"snapshot not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if "payoffs" in snap:
        payoffs = [EmpiricalPayoff.from_dict(p) for p in snap["payoffs"]]
    elif "clearing" in snap and "spot" in snap:
        clearing, spot = check_prices(snap["clearing"], snap["spot"])
        payoffs = [EmpiricalPayoff.from_history(clearing[:, k], spot[:, k])
                   for k in range(clearing.shape[1])]
    else:
        raise ConfigError("snapshot needs 'payoffs' or both 'clearing' and 'spot'")
    return snap, payoffs


def cmd_solve(args):
    snap, payoffs = _load_snapshot(args.snapshot)
    budget = args.budget if args.budget is not None else snap.get("budget")
    if budget is None or not float(budget) > 0:
        raise ConfigError("a positive budget is required (snapshot 'budget' or --budget)")
    budget = float(budget)
    if args.exact:
        sets = [p.pairs() for p in payoffs]
        bids, value = brute_force_mckp(sets, budget, prune=True)
        result = {"method": "exact", "budget": budget}
    else:
        resolution = args.resolution or snap.get("resolution")
        if resolution is None:
            resolution = max(max(p.count for p in payoffs), 1)
        resolution = int(resolution)
        if resolution < 1:
            raise ConfigError("resolution must be >= 1")
        table = np.empty((len(payoffs), resolution + 1))
        sats = []
        for k, p in enumerate(payoffs):
            table[k], sat = p.values_on_grid(budget, resolution)
            sats.append(sat)
        bids, value = solve_dp(table, BudgetGrid(budget, resolution), sats)
        result = {"method": "grid", "budget": budget, "resolution": resolution}
    result.update(bids=bids.tolist(), empirical_value=float(value))
    print(json.dumps(result, indent=2))
    return EXIT_OK


def _float_list(text):
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def cmd_oracle(args):
    if args.config:
        from .config import build_model
        model = build_model(read_config(args.config))
        if not isinstance(model, ExpUniformModel):
            raise ConfigError("oracle needs an exp_uniform model")
    else:
        if args.lambda_bar is None or args.pi_bar is None:
            raise ConfigError("give --config or both --lambda-bar and --pi-bar")
        try:
            model = ExpUniformModel(args.lambda_bar, args.pi_bar, args.spot_halfwidth)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if args.budget is None or not args.budget > 0:
        raise ConfigError("--budget must be positive")
    bids, gamma = waterfill_optimal(model, args.budget)
    result = {"budget": args.budget, "gamma": float(gamma), "bids": bids.tolist(),
              "expected_payoff": float(expected_payoff(model, bids))}
    print(json.dumps(result, indent=2))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="budgetbid", description="Budget-constrained repeated auction bidding.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--out-dir", default=".", help="output directory (default: .)")
        p.add_argument("--budget", type=float, help="override the per-period budget")
        p.add_argument("--lag", type=int, help="override the information lag")
        p.add_argument("--threads", type=int, help="worker cap for parallel runs")

    p = sub.add_parser("simulate", help="Monte-Carlo regret experiment")
    common(p)
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--horizon", type=int, help="override the number of periods")
    p.add_argument("--runs", type=int, help="override the number of runs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("backtest", help="historical profit backtest")
    common(p)
    p.add_argument("--data", nargs="+", help="price CSV files")
    p.add_argument("--seed", type=int, help="accepted for symmetry; the backtest is seedless")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("solve", help="one-shot allocation from a payoff snapshot")
    p.add_argument("snapshot", help="JSON with 'payoffs' or 'clearing'/'spot', "
                                    "optional 'budget' and 'resolution'")
    p.add_argument("--budget", type=float)
    p.add_argument("--resolution", type=int, help="grid resolution (default: history length)")
    p.add_argument("--exact", action="store_true",
                   help="optimize over breakpoints instead of the grid")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="known-distribution optimal bid")
    p.add_argument("--config", help="INI file with a [model] section")
    p.add_argument("--lambda-bar", type=_float_list)
    p.add_argument("--pi-bar", type=_float_list)
    p.add_argument("--spot-halfwidth", type=float, default=1.0)
    p.add_argument("--budget", type=float, required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataGapError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
