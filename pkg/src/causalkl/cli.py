"""Command-line entry point for the experiment harness.

Exit codes: 0 when the run passes its acceptance thresholds (or has none),
1 when a graded run fails them, 2 on errors such as budget exhaustion.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import config as cfg
from .config import ExperimentConfig, load_config
from .densities import (
    matched_floor,
    reference_alt_pair,
    reference_mixture_pair,
    reference_null_pair,
    reference_shift_pair,
)
from .divergence import kl_oracle, plugin_estimate, vm_estimate
from .harness import (
    run_closeness_experiment,
    run_discovery_experiment,
    run_rate_experiment,
    run_test_calibration,
)
from .kernels import make_kernel
from .quadrature import QuadratureError
from .rngstream import substream
from .scm import BudgetExceededError, SamplingOracle, make_scm


def _base_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    overrides = {}
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    return replace(config, **overrides)


def _finish(report, args: argparse.Namespace, basename: str) -> int:
    json_path, csv_path = report.write(args.output_dir or "results", basename)
    print(f"wrote {json_path} and {csv_path}")
    for key, value in sorted(report.summary.items()):
        if key != "per_n" and not isinstance(value, (dict, list)):
            print(f"  {key} = {value}")
    if report.partial:
        print("run ended with a partial report (budget exceeded)", file=sys.stderr)
        return 2
    if report.passed is None:
        return 0
    print(f"passed = {report.passed}")
    return 0 if report.passed else 1


def _cmd_rates(args: argparse.Namespace) -> int:
    config = _base_config(args)
    grid = tuple(int(n) for n in args.n_grid.split(",")) if args.n_grid else None
    report = run_rate_experiment(config, n_grid=grid or (512, 1024, 2048, 4096, 8192))
    return _finish(report, args, "rates")


def _cmd_closeness(args: argparse.Namespace) -> int:
    config = _base_config(args)
    report = run_closeness_experiment(config)
    return _finish(report, args, "closeness")


def _cmd_calibrate(args: argparse.Namespace) -> int:
    config = _base_config(args)
    report = run_test_calibration(config)
    code = _finish(report, args, "calibrate")
    if report.passed:
        print(f"calibrated kappa = {report.summary['kappa']}")
    return code


def _cmd_discover(args: argparse.Namespace) -> int:
    config = _base_config(args)
    report = run_discovery_experiment(config, success_threshold=args.success_threshold)
    return _finish(report, args, "discover")


_PAIRS = {
    "null": reference_null_pair,
    "alt": reference_alt_pair,
    "mixture": reference_mixture_pair,
}


def _cmd_estimate_kl(args: argparse.Namespace) -> int:
    config = _base_config(args)
    if args.pair == "shift":
        p, q = reference_shift_pair(args.shift)
    else:
        p, q = _PAIRS[args.pair]()
    rng = substream(config.seed, "estimate-kl", args.pair)
    xs = p.sample(rng, args.n)
    ys = q.sample(rng, args.m or args.n)
    kernel = make_kernel(config.kernel_order, 1)
    scale = (config.bandwidth_scale if config.bandwidth_scale is not None
             else cfg.REFERENCE_BANDWIDTH_SCALE)
    floor = config.floor if config.floor is not None else matched_floor(p, q)
    record = {
        "pair": args.pair,
        "n": args.n,
        "m": args.m or args.n,
        "seed": config.seed,
        "oracle": kl_oracle(p, q, tol=1e-9),
    }
    if args.estimator in ("vm", "both"):
        vm = vm_estimate(xs, ys, kernel, config.beta, p.domain,
                         floor=floor, bandwidth_scale=scale)
        record["vm"] = vm.value
        record["vm_bandwidths"] = [vm.h_p, vm.h_q]
    if args.estimator in ("plugin", "both"):
        plug = plugin_estimate(xs, ys, kernel, config.beta, p.domain,
                               floor=floor, bandwidth_scale=scale)
        record["plugin"] = plug.value
    print(json.dumps(record, sort_keys=True, indent=2))
    return 0


def _cmd_scm_dump(args: argparse.Namespace) -> int:
    config = _base_config(args)
    instance = make_scm(args.structure, dim=config.dim, strength=config.strength)
    out = Path(args.output_dir or "results")
    out.mkdir(parents=True, exist_ok=True)
    config_path = out / f"scm_{args.structure}.cfg"
    config_path.write_text(instance.to_config_text())
    print(f"wrote {config_path}")
    print(f"epsilon_star = {instance.epsilon_star:.6f}")
    print(f"d_max = {instance.d_max:.6f}")
    if args.count > 0:
        oracle = SamplingOracle(instance, config.seed)
        if args.what == "joint":
            a, b = oracle.sample_obs_joint(args.count)
            rows = np.concatenate([a, b], axis=1)
            header = [f"a{i}" for i in range(config.dim)] + [
                f"b{i}" for i in range(config.dim)
            ]
        elif args.what in ("do-a", "do-b"):
            target = "A" if args.what == "do-a" else "B"
            value = np.full(config.dim, args.value)
            rows = oracle.sample_interventional(target, value, args.count)
            other = "b" if target == "A" else "a"
            header = [f"{other}{i}" for i in range(config.dim)]
        else:
            which = "A" if args.what == "marginal-a" else "B"
            rows = oracle.sample_obs_marginal(which, args.count)
            header = [f"{which.lower()}{i}" for i in range(config.dim)]
        csv_path = out / f"scm_{args.structure}_{args.what}.csv"
        with csv_path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            writer.writerows(rows.tolist())
        print(f"wrote {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalkl",
        description="KL closeness testing and interventional causal discovery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file with defaults")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--output-dir", dest="output_dir", default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--dim", type=int, default=None)
        p.add_argument("--kappa", type=float, default=None)
        p.add_argument("--bandwidth-scale", dest="bandwidth_scale",
                       type=float, default=None)

    rates = sub.add_parser("rates", help="convergence-rate sweep on a fixed pair")
    common(rates)
    rates.add_argument("--n-grid", help="comma-separated sample sizes")
    rates.set_defaults(func=_cmd_rates)

    closeness = sub.add_parser("closeness-test", help="empirical test error rates")
    common(closeness)
    closeness.add_argument("--epsilon", type=float, default=None)
    closeness.add_argument("--delta", type=float, default=None)
    closeness.set_defaults(func=_cmd_closeness)

    calibrate = sub.add_parser("calibrate", help="search kappa meeting delta")
    common(calibrate)
    calibrate.add_argument("--epsilon", type=float, default=None)
    calibrate.add_argument("--delta", type=float, default=None)
    calibrate.set_defaults(func=_cmd_calibrate)

    discover = sub.add_parser("discover", help="structure identification trials")
    common(discover)
    discover.add_argument("--structure-under-test", dest="structure", default=None)
    discover.add_argument("--mode", choices=["with_obs", "interv_only"], default=None)
    discover.add_argument("--epsilon", type=float, default=None)
    discover.add_argument("--c", type=float, default=None)
    discover.add_argument("--replicates", type=int, default=None)
    discover.add_argument("--budget", type=int, default=None)
    discover.add_argument("--strength", type=float, default=None)
    discover.add_argument("--d-max", dest="d_max", type=float, default=None)
    discover.add_argument("--success-threshold", type=float, default=None)
    discover.set_defaults(func=_cmd_discover)

    estimate = sub.add_parser("estimate-kl", help="one KL estimate on a reference pair")
    common(estimate)
    estimate.add_argument("--pair", choices=["null", "alt", "mixture", "shift"],
                          default="alt")
    estimate.add_argument("--shift", type=float, default=0.5)
    estimate.add_argument("--n", type=int, default=4096)
    estimate.add_argument("--m", type=int, default=None)
    estimate.add_argument("--estimator", choices=["vm", "plugin", "both"],
                          default="both")
    estimate.set_defaults(func=_cmd_estimate_kl)

    dump = sub.add_parser("scm-dump", help="serialize an instance and sample dumps")
    common(dump)
    dump.add_argument("--structure", default="a_to_b")
    dump.add_argument("--strength", type=float, default=None)
    dump.add_argument("--count", type=int, default=0)
    dump.add_argument("--what", default="joint",
                      choices=["joint", "marginal-a", "marginal-b", "do-a", "do-b"])
    dump.add_argument("--value", type=float, default=0.5,
                      help="intervention value for do dumps")
    dump.set_defaults(func=_cmd_scm_dump)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (QuadratureError, ValueError, KeyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
