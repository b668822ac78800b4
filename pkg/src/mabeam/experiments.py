"""Monte-Carlo experiment harness: paired trials, sweeps, aggregation, output.

Within a trial index every scheme consumes the same channel draws (schemes
never perturb the random content), and the draws are also shared across sweep
points, so power and region sweeps are paired end to end. Fixed-position
schemes keep the reference frame size during region sweeps, which makes their
rows identical across region values by construction. Trials are independent
work items; results are collected in task order, so output bytes do not
depend on the worker count.
"""

import csv
import io
import json
import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .baselines import (
    GridSpec,
    SCHEME_TAGS,
    run_with_restarts,
    upper_bound,
)
from .channel import ScenarioParams, sample_scenario, scenario_to_dict
from .geometry import ConfigurationError
from .seeding import derive_seed
from .solver import SolverConfig
from .units import dbm_to_watts

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "AggregateRow",
    "ExperimentFailure",
    "run_experiment",
    "sweep_power",
    "sweep_region",
    "aggregate",
    "emit_results",
    "rows_to_csv",
    "rows_to_json",
    "scenario_hash",
    "draws_hash",
    "fpa_frame_wavelengths",
]

# Schemes whose geometry follows the configured/swept region size; the
# fixed-position baselines run the conventional compact array (uniform
# half-wavelength grid) on the same channel draws, which makes their rows
# independent of the region size by construction.
_MOVABLE_SCHEMES = ("ma-sub", "upper-bound")


class ExperimentFailure(RuntimeError):
    """More than the tolerated fraction of trials failed."""

    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative experiment description (JSON-loadable, flag-overridable)."""

    # scenario
    users: int = 4
    paths: int = 6
    wavelength: float = 0.01
    n_rf_h: int = 2
    n_rf_v: int = 2
    n_h: int = 2
    n_v: int = 2
    frame_size_wavelengths: float = 2.0
    fpa_frame_size_wavelengths: float = None
    reference_gain_db: float = -40.0
    path_loss_exponent: float = 2.8
    distance_range: tuple = (20.0, 100.0)
    noise_dbm: float = -80.0
    gain_convention: str = "squared"
    # operating point and sweep
    power_dbm: float = 10.0
    sweep_axis: str = None  # None | "power_dbm" | "region_size"
    sweep_values: tuple = ()
    # execution
    schemes: tuple = ("ma-sub", "fpa-sub")
    trials: int = 100
    master_seed: int = 1
    restarts: int = 1
    workers: int = 1
    failure_tolerance: float = 0.1
    # Wall-clock timing makes output bytes depend on machine load, which
    # breaks the byte-identical re-run contract; opt in explicitly when
    # profiling instead of reproducing.
    record_wall_clock: bool = False
    # solver
    tolerance: float = 1e-3
    max_iterations: int = 200
    step_init: float = 10.0
    max_backtracks: int = 30
    inner_analog_iterations: int = 10
    penalty_scale: float = 1e-2
    penalty_growth: float = 2.0
    penalty_cap: float = 1e6
    bisection_rel_tol: float = 1e-6
    bisection_max_iter: int = 100
    # upper bound grid
    grid_points: int = 5
    grid_mode: str = "coordinate"
    grid_budget: int = 10000

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if not self.schemes:
            raise ConfigurationError("at least one scheme is required")
        for tag in self.schemes:
            if tag not in SCHEME_TAGS:
                raise ConfigurationError(
                    f"unknown scheme {tag!r}; expected one of {SCHEME_TAGS}"
                )
        if self.sweep_axis is not None:
            if self.sweep_axis not in ("power_dbm", "region_size"):
                raise ConfigurationError(
                    "sweep_axis must be 'power_dbm' or 'region_size'"
                )
            if not self.sweep_values:
                raise ConfigurationError("sweep_values must be non-empty")
        if self.workers < 1 or self.restarts < 1:
            raise ConfigurationError("workers and restarts must be at least 1")

    def scenario_params(self):
        return ScenarioParams(
            n_users=self.users,
            n_paths=self.paths,
            wavelength=self.wavelength,
            n_rf_h=self.n_rf_h,
            n_rf_v=self.n_rf_v,
            n_h=self.n_h,
            n_v=self.n_v,
            frame_size_wavelengths=self.frame_size_wavelengths,
            reference_gain_db=self.reference_gain_db,
            path_loss_exponent=self.path_loss_exponent,
            distance_range=tuple(self.distance_range),
            noise_power_dbm=self.noise_dbm,
            gain_convention=self.gain_convention,
        )

    def solver_config(self, power_w, seed, move=True):
        return SolverConfig(
            tolerance=self.tolerance,
            max_iterations=self.max_iterations,
            step_init=self.step_init,
            max_backtracks=self.max_backtracks,
            inner_analog_iterations=self.inner_analog_iterations,
            penalty_scale=self.penalty_scale,
            penalty_growth=self.penalty_growth,
            penalty_cap=self.penalty_cap,
            bisection_rel_tol=self.bisection_rel_tol,
            bisection_max_iter=self.bisection_max_iter,
            power_budget_w=power_w,
            seed=seed,
            move_antennas=move,
        )

    def grid_spec(self):
        return GridSpec(
            points_per_axis=self.grid_points,
            mode=self.grid_mode,
            budget=self.grid_budget,
        )

    @classmethod
    def from_dict(cls, doc):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        for key in ("schemes", "sweep_values", "distance_range"):
            if key in doc and doc[key] is not None:
                doc[key] = tuple(doc[key])
        return cls(**doc)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def with_overrides(self, **overrides):
        overrides = {k: v for k, v in overrides.items() if v is not None}
        for key in ("schemes", "sweep_values", "distance_range"):
            if key in overrides:
                overrides[key] = tuple(overrides[key])
        return replace(self, **overrides)


@dataclass(frozen=True)
class TrialRecord:
    """Raw outcome of one scheme on one (sweep value, trial) cell.

    ``grid`` is populated for upper-bound rows only (placement grid metadata).
    """

    scheme: str
    sweep_value: float
    trial: int
    scenario_seed: int
    sum_rate: float
    iterations: int
    seconds: float
    ok: bool = True
    error: str = ""
    grid: str = ""


@dataclass(frozen=True)
class AggregateRow:
    scheme: str
    sweep_value: float
    mean_rate_bps_hz: float
    stderr: float
    trials: int
    mean_iters: float
    mean_seconds: float


def scenario_hash(scenario):
    """Stable digest of a scenario's full content, for pairing checks."""
    doc = json.dumps(scenario_to_dict(scenario), sort_keys=True)
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


def draws_hash(scenario):
    """Digest of the random channel content only (users and seed).

    Schemes within a trial always share this, even when a fixed-position
    baseline runs its conventional compact geometry on the same draws.
    """
    doc = json.dumps(
        {"seed": scenario_to_dict(scenario)["seed"],
         "users": scenario_to_dict(scenario)["users"]},
        sort_keys=True,
    )
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


def fpa_frame_wavelengths(config):
    """Frame pitch giving the conventional fixed array: a uniform grid with
    half-wavelength spacing across sub-array seams."""
    if config.fpa_frame_size_wavelengths is not None:
        return config.fpa_frame_size_wavelengths
    return max(config.n_h, config.n_v) / 2.0


def _scheme_frame(config, tag, sweep_value):
    if tag not in _MOVABLE_SCHEMES:
        return fpa_frame_wavelengths(config)
    if config.sweep_axis == "region_size":
        return float(sweep_value)
    return config.frame_size_wavelengths


def _run_cell(config, sweep_value, trial):
    """All schemes for one (sweep value, trial) cell, sharing the draws."""
    params = config.scenario_params()
    scenario_seed = derive_seed(config.master_seed, "scenario", trial)
    power_dbm = (
        float(sweep_value)
        if config.sweep_axis == "power_dbm"
        else config.power_dbm
    )
    power_w = float(dbm_to_watts(power_dbm))

    records = []
    for tag in config.schemes:
        solver_seed = derive_seed(config.master_seed, "solver", trial, tag)
        cfg = config.solver_config(power_w, solver_seed)
        frame = _scheme_frame(config, tag, sweep_value)
        scenario = sample_scenario(
            params, scenario_seed, frame_size_wavelengths=frame
        )
        try:
            started = time.perf_counter()
            grid_note = ""
            if tag == "upper-bound":
                spec = config.grid_spec()
                result = upper_bound(scenario, spec, cfg)
                rate, iters = result.final_sum_rate, result.iterations
                grid_note = (
                    f"{spec.points_per_axis}x{spec.points_per_axis}-{spec.mode}"
                    f":{result.evaluations}evals"
                )
            else:
                result = run_with_restarts(tag, scenario, cfg, config.restarts)
                rate, iters = result.final_sum_rate, result.iterations
            elapsed = (
                time.perf_counter() - started if config.record_wall_clock else 0.0
            )
            records.append(
                TrialRecord(
                    scheme=tag,
                    sweep_value=sweep_value,
                    trial=trial,
                    scenario_seed=scenario_seed,
                    sum_rate=rate,
                    iterations=iters,
                    seconds=elapsed,
                    grid=grid_note,
                )
            )
        except Exception as exc:  # recorded, excluded from aggregates
            records.append(
                TrialRecord(
                    scheme=tag,
                    sweep_value=sweep_value,
                    trial=trial,
                    scenario_seed=scenario_seed,
                    sum_rate=float("nan"),
                    iterations=0,
                    seconds=0.0,
                    ok=False,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return records


def _cell_worker(args):
    return _run_cell(*args)


def run_experiment(config):
    """Execute the full sweep-by-trial grid; returns (rows, raw records).

    Raises ExperimentFailure when more than ``failure_tolerance`` of the
    scheme runs fail; individual failures are kept as warning records and
    excluded from the aggregates either way.
    """
    sweep_values = (
        list(config.sweep_values) if config.sweep_axis else [None]
    )
    tasks = [
        (config, value, trial)
        for value in sweep_values
        for trial in range(config.trials)
    ]

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_cell_worker, tasks))
    else:
        chunks = [_run_cell(*task) for task in tasks]

    records = [record for chunk in chunks for record in chunk]
    failures = sum(1 for r in records if not r.ok)
    if failures > config.failure_tolerance * len(records):
        raise ExperimentFailure(
            f"{failures}/{len(records)} scheme runs failed", records
        )
    return aggregate(records), records


def sweep_power(config, values=None):
    cfg = config.with_overrides(
        sweep_axis="power_dbm",
        sweep_values=tuple(values) if values else config.sweep_values or (0.0, 5.0, 10.0, 15.0),
    )
    return run_experiment(cfg)


def sweep_region(config, values=None):
    cfg = config.with_overrides(
        sweep_axis="region_size",
        sweep_values=tuple(values) if values else config.sweep_values or (0.5, 1.0, 1.5, 2.0, 2.5, 3.0),
    )
    return run_experiment(cfg)


def aggregate(records):
    """Per (scheme, sweep value) means and standard errors, stably ordered."""
    groups = {}
    for rec in records:
        if not rec.ok:
            continue
        groups.setdefault((rec.scheme, rec.sweep_value), []).append(rec)

    def sort_key(item):
        scheme, value = item
        return (scheme, -np.inf if value is None else float(value))

    rows = []
    for scheme, value in sorted(groups, key=sort_key):
        recs = groups[(scheme, value)]
        rates = np.array([r.sum_rate for r in recs])
        stderr = (
            float(np.std(rates, ddof=1) / np.sqrt(len(rates)))
            if len(rates) > 1
            else 0.0
        )
        rows.append(
            AggregateRow(
                scheme=scheme,
                sweep_value=value,
                mean_rate_bps_hz=float(np.mean(rates)),
                stderr=stderr,
                trials=len(recs),
                mean_iters=float(np.mean([r.iterations for r in recs])),
                mean_seconds=float(np.mean([r.seconds for r in recs])),
            )
        )
    return rows


def _format_value(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["scheme", "sweep_value", "mean_rate_bps_hz", "stderr", "trials",
         "mean_iters", "mean_seconds"]
    )
    for row in rows:
        writer.writerow([
            row.scheme,
            _format_value(row.sweep_value),
            repr(row.mean_rate_bps_hz),
            repr(row.stderr),
            row.trials,
            repr(row.mean_iters),
            repr(row.mean_seconds),
        ])
    return buffer.getvalue()


def rows_to_json(rows):
    return json.dumps({"rows": [asdict(row) for row in rows]}, indent=1)


def emit_results(rows, fmt, path):
    """Persist aggregate rows as CSV or JSON; refuses an empty row list."""
    if not rows:
        raise ConfigurationError("no rows to emit")
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"unknown output format {fmt!r}")
    payload = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    try:
        with open(path, "w") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path
