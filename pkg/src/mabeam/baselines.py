"""Comparison schemes: fixed-position baselines and the grid-search bound.

The fixed-position baselines reuse the same alternating machinery with
movement disabled: the sub-connected one simply pins the centers at the frame
midpoints, and the fully-connected one swaps in a dense analog network (whose
power constraint no longer decouples from the phases). The upper bound
re-optimizes the beamformers from scratch for every candidate placement of
all sub-arrays on a grid, so any grid containing a feasible placement yields
at least that placement's rate.
"""

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .geometry import ConfigurationError
from .seeding import derive_seed
from .solver import solve

__all__ = [
    "SCHEME_TAGS",
    "GridSpec",
    "UpperBoundResult",
    "solve_ma_sub",
    "solve_fpa_sub",
    "solve_fpa_full",
    "run_with_restarts",
    "upper_bound",
    "scheme_runner",
]

SCHEME_TAGS = ("ma-sub", "fpa-sub", "fpa-full", "upper-bound")


def solve_ma_sub(scenario, config, iteration_hook=None):
    """Proposed scheme: movable sub-arrays, sub-connected analog network."""
    cfg = replace(config, move_antennas=True)
    return solve(scenario, cfg, structure="sub", iteration_hook=iteration_hook)


def solve_fpa_sub(scenario, config, iteration_hook=None):
    """Sub-connected baseline with centers pinned at the frame midpoints."""
    cfg = replace(config, move_antennas=False)
    return solve(scenario, cfg, structure="sub", iteration_hook=iteration_hook)


def solve_fpa_full(scenario, config, iteration_hook=None):
    """Fully-connected fixed-array baseline under the same framework."""
    cfg = replace(config, move_antennas=False)
    return solve(scenario, cfg, structure="full", iteration_hook=iteration_hook)


_RUNNERS = {
    "ma-sub": solve_ma_sub,
    "fpa-sub": solve_fpa_sub,
    "fpa-full": solve_fpa_full,
}


def scheme_runner(tag):
    try:
        return _RUNNERS[tag]
    except KeyError:
        raise ConfigurationError(
            f"unknown scheme {tag!r}; expected one of {sorted(_RUNNERS)}"
        ) from None


def run_with_restarts(tag, scenario, config, restarts=1):
    """Best-of-R restarts from distinct random initializations.

    The gradient pieces converge to local optima, so a few restarts tighten
    the achieved rate. Restart 0 uses the configured seed unchanged.
    """
    if restarts < 1:
        raise ConfigurationError("restart count must be at least 1")
    runner = scheme_runner(tag)
    best = None
    for r in range(restarts):
        cfg = config if r == 0 else replace(
            config, seed=derive_seed(config.seed, "restart", tag, r)
        )
        result = runner(scenario, cfg)
        if best is None or result.final_sum_rate > best.final_sum_rate:
            best = result
    return best


@dataclass(frozen=True)
class GridSpec:
    """Placement grid for the exhaustive bound.

    ``points_per_axis`` grid points per axis per sub-array region;
    ``mode`` is "coordinate" (cycle per-sub-array argmax until stable) or
    "joint" (full Cartesian product, cost (points^2)**n_subarrays, refused
    above ``budget`` candidates before any work starts).
    """

    points_per_axis: int = 5
    mode: str = "coordinate"
    budget: int = 10000

    def __post_init__(self):
        if self.points_per_axis < 1:
            raise ConfigurationError("need at least one grid point per axis")
        if self.mode not in ("coordinate", "joint"):
            raise ConfigurationError("grid mode must be 'coordinate' or 'joint'")


@dataclass(frozen=True)
class UpperBoundResult:
    """Best grid placement with its re-optimized beamforming result."""

    best: object
    centers: np.ndarray
    evaluations: int
    grid: GridSpec

    @property
    def final_sum_rate(self):
        return self.best.final_sum_rate

    @property
    def iterations(self):
        return self.best.iterations

    @property
    def seconds(self):
        return self.best.seconds


def _axis_points(lo, hi, count):
    if hi <= lo:
        return np.array([lo])
    if count == 1:
        return np.array([(lo + hi) / 2.0])
    return np.linspace(lo, hi, count)


def _subarray_grid(geometry, index, points_per_axis):
    xs = _axis_points(*geometry.region_bounds[index, 0], points_per_axis)
    ys = _axis_points(*geometry.region_bounds[index, 1], points_per_axis)
    return [np.array([x, y]) for x in xs for y in ys]


def upper_bound(scenario, grid, config, injected=None):
    """Grid search over all sub-array placements, beamformers re-optimized.

    ``injected`` is an optional list of (centers, beamformer-or-None) extra
    candidates; passing a known solution with its beamformer warm-starts that
    candidate's solve so the bound provably covers it.
    """
    geometry = scenario.geometry
    n_sub = geometry.n_subarrays
    per_grid = [_subarray_grid(geometry, j, grid.points_per_axis) for j in range(n_sub)]

    if grid.mode == "joint":
        total = 1
        for g in per_grid:
            total *= len(g)
        if total > grid.budget:
            raise ConfigurationError(
                f"joint grid has {total} candidates, over the budget of {grid.budget}"
            )

    cfg = replace(config, move_antennas=False)
    cache = {}
    evaluations = 0

    def evaluate(centers, warm=None):
        nonlocal evaluations
        key = np.asarray(centers).tobytes()
        if key in cache:
            return cache[key]
        result = solve(scenario, cfg, structure="sub", centers=np.asarray(centers),
                       initial_beamformer=warm)
        evaluations += 1
        cache[key] = result
        return result

    best_centers = geometry.frame_centers.copy()
    best = None

    if injected:
        for centers, warm in injected:
            result = evaluate(np.asarray(centers, dtype=float), warm)
            if best is None or result.final_sum_rate > best.final_sum_rate:
                best, best_centers = result, np.asarray(centers, dtype=float)

    if grid.mode == "joint":
        for combo in itertools.product(*per_grid):
            centers = np.asarray(combo)
            result = evaluate(centers)
            if best is None or result.final_sum_rate > best.final_sum_rate:
                best, best_centers = result, centers
    else:
        current = best_centers.copy()
        if best is None:
            best = evaluate(current)
        improved = True
        while improved:
            improved = False
            for j in range(n_sub):
                for point in per_grid[j]:
                    candidate = current.copy()
                    candidate[j] = point
                    result = evaluate(candidate)
                    if result.final_sum_rate > best.final_sum_rate:
                        best, best_centers = result, candidate
                        current = candidate
                        improved = True

    return UpperBoundResult(
        best=best, centers=best_centers, evaluations=evaluations, grid=grid
    )
