"""Command-line front end for single solves, sweeps, bounds, and replays.

Configuration comes from an optional JSON file (see README for the schema)
with command-line flags taking precedence. Exit codes: 0 on success, 1 on a
configuration error, 2 when the trial failure threshold is exceeded.
"""

import argparse
import json
import sys

from .baselines import run_with_restarts, upper_bound
from .channel import load_scenario, sample_scenario
from .experiments import (
    ExperimentConfig,
    ExperimentFailure,
    emit_results,
    run_experiment,
    rows_to_csv,
    rows_to_json,
)
from .fp import beamformer_to_dict
from .geometry import ConfigurationError
from .seeding import derive_seed
from .units import dbm_to_watts

__all__ = ["main"]


def _common_flags(parser):
    parser.add_argument("--config", help="JSON experiment config file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--trials", type=int, help="trials per sweep point")
    parser.add_argument("--out", help="output path (stdout when omitted)")
    parser.add_argument("--format", choices=("csv", "json"), default=None,
                        help="aggregate output format (default csv)")
    parser.add_argument("--schemes", help="comma-separated scheme tags")
    parser.add_argument("--trace", help="write per-iteration NDJSON trace here")
    parser.add_argument("--workers", type=int, help="parallel trial workers")
    parser.add_argument("--restarts", type=int, help="random restarts per solve")
    parser.add_argument("--power-dbm", type=float, dest="power_dbm")
    parser.add_argument("--noise-dbm", type=float, dest="noise_dbm")
    parser.add_argument("--users", type=int)
    parser.add_argument("--paths", type=int)
    parser.add_argument("--region-size", type=float, dest="region_size",
                        help="frame size in wavelengths")
    parser.add_argument("--gain-convention", choices=("squared", "linear"),
                        dest="gain_convention")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mabeam",
        description="Movable sub-array hybrid beamforming simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one scenario, print result JSON")
    _common_flags(p_solve)
    p_solve.add_argument("--scheme", default="ma-sub")

    p_power = sub.add_parser("sweep-power", help="sum rate versus power budget")
    _common_flags(p_power)
    p_power.add_argument("--values", help="comma-separated dBm values")

    p_region = sub.add_parser("sweep-region", help="sum rate versus region size")
    _common_flags(p_region)
    p_region.add_argument("--values", help="comma-separated D/wavelength values")

    p_bound = sub.add_parser("upper-bound", help="grid-search upper bound")
    _common_flags(p_bound)
    p_bound.add_argument("--grid-points", type=int, dest="grid_points")
    p_bound.add_argument("--grid-mode", choices=("coordinate", "joint"),
                         dest="grid_mode")
    p_bound.add_argument("--grid-budget", type=int, dest="grid_budget")

    p_replay = sub.add_parser("replay", help="run a scheme on a saved scenario")
    _common_flags(p_replay)
    p_replay.add_argument("--scenario", required=True, help="scenario JSON file")
    p_replay.add_argument("--scheme", default="ma-sub")

    return parser


def _build_config(args):
    base = (
        ExperimentConfig.from_file(args.config)
        if args.config
        else ExperimentConfig()
    )
    schemes = tuple(args.schemes.split(",")) if args.schemes else None
    return base.with_overrides(
        master_seed=args.seed,
        trials=args.trials,
        schemes=schemes,
        workers=args.workers,
        restarts=args.restarts,
        power_dbm=args.power_dbm,
        noise_dbm=args.noise_dbm,
        users=args.users,
        paths=args.paths,
        frame_size_wavelengths=args.region_size,
        gain_convention=args.gain_convention,
        grid_points=getattr(args, "grid_points", None),
        grid_mode=getattr(args, "grid_mode", None),
        grid_budget=getattr(args, "grid_budget", None),
    )


def _trace_hook(path):
    handle = open(path, "w")

    def hook(state):
        record = {
            "iteration": state.iteration,
            "surrogate_nats": state.surrogate,
            "sum_rate_bits": state.sum_rate,
            "sinrs": [float(s) for s in state.sinrs],
            "lambda": state.multiplier,
            "eta": state.penalty.eta if state.penalty else None,
            "centers": state.centers.tolist(),
        }
        handle.write(json.dumps(record) + "\n")

    return hook, handle


def _result_payload(result):
    return {
        "final_sum_rate_bps_hz": result.final_sum_rate,
        "initial_sum_rate_bps_hz": result.initial_sum_rate,
        "iterations": result.iterations,
        "termination": result.termination,
        "seconds": result.seconds,
        "sum_rate_trace": result.sum_rate_trace.tolist(),
        "surrogate_trace": result.surrogate_trace.tolist(),
        "sinrs": result.sinrs.tolist(),
        "centers": result.centers.tolist(),
        "beamformer": beamformer_to_dict(result.beamformer),
    }


def _emit(payload, args):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
        if not payload.endswith("\n"):
            sys.stdout.write("\n")


def _run_single(config, scenario, scheme, args):
    solver_seed = derive_seed(config.master_seed, "solver", 0, scheme)
    cfg = config.solver_config(
        float(dbm_to_watts(config.power_dbm)), solver_seed
    )
    hook = handle = None
    if args.trace:
        hook, handle = _trace_hook(args.trace)
    try:
        if scheme == "upper-bound":
            bound = upper_bound(scenario, config.grid_spec(), cfg)
            result = bound.best
        else:
            if hook is not None and config.restarts == 1:
                from .baselines import scheme_runner

                result = scheme_runner(scheme)(scenario, cfg, iteration_hook=hook)
            else:
                result = run_with_restarts(scheme, scenario, cfg, config.restarts)
    finally:
        if handle is not None:
            handle.close()
    _emit(json.dumps(_result_payload(result), indent=1), args)


def _run_sweep(config, args, axis, default_values):
    values = (
        tuple(float(v) for v in args.values.split(","))
        if getattr(args, "values", None)
        else (config.sweep_values or default_values)
    )
    cfg = config.with_overrides(sweep_axis=axis, sweep_values=values)
    rows, _ = run_experiment(cfg)
    fmt = args.format or "csv"
    if args.out:
        emit_results(rows, fmt, args.out)
    else:
        _emit(rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows), args)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _build_config(args)
        if args.command == "solve":
            params = config.scenario_params()
            scenario = sample_scenario(params, config.master_seed)
            _run_single(config, scenario, args.scheme, args)
        elif args.command == "replay":
            scenario = load_scenario(args.scenario)
            _run_single(config, scenario, args.scheme, args)
        elif args.command == "sweep-power":
            _run_sweep(config, args, "power_dbm", (0.0, 5.0, 10.0, 15.0))
        elif args.command == "sweep-region":
            _run_sweep(config, args, "region_size",
                       (0.5, 1.0, 1.5, 2.0, 2.5, 3.0))
        elif args.command == "upper-bound":
            schemes = config.schemes
            if "upper-bound" not in schemes:
                schemes = tuple(schemes) + ("upper-bound",)
            cfg = config.with_overrides(schemes=schemes)
            rows, _ = run_experiment(cfg)
            fmt = args.format or "csv"
            if args.out:
                emit_results(rows, fmt, args.out)
            else:
                _emit(rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows),
                      args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except ExperimentFailure as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
