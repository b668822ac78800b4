"""Alternating optimization: slack, digital, analog, positions, repeat.

Each outer iteration refreshes the surrogate slack variables at their
closed-form optima, solves the digital and analog subproblems, then sweeps
the movable sub-array centers. Every block is non-decreasing in the
surrogate, so the surrogate trace is monotone and the loop terminates either
on a small sum-rate change or at the iteration cap. The reported metric is
always the true sum rate of the iterate, not the surrogate.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .analog import BlockDiagonalAnalog
from .channel import all_channels, user_sinrs
from .fp import (
    FullyConnectedBeamformer,
    HybridBeamformer,
    PenaltyState,
    initial_penalty_weight,
    solve_analog,
    solve_digital,
    surrogate_value,
    update_slack,
)
from .geometry import ConfigurationError, frame_centers
from .positioning import PositionStepConfig, sweep_all_centers

__all__ = ["SolverConfig", "RunResult", "AoState", "initialize", "ao_iterate", "solve"]


@dataclass(frozen=True)
class SolverConfig:
    """All solver tolerances and schedules in one place.

    Defaults follow the reference study: step_init 10, tolerance 1e-3,
    max_iterations 200.
    """

    tolerance: float = 1e-3
    max_iterations: int = 200
    step_init: float = 10.0
    step_shrink: float = 0.5
    max_backtracks: int = 30
    inner_analog_iterations: int = 10
    penalty_scale: float = 1e-2
    # Growth 2 keeps the analog phases adaptable while the sub-arrays are
    # still moving; faster schedules freeze them mid-alignment and measurably
    # cost sum rate.
    penalty_growth: float = 2.0
    penalty_cap: float = 1e6
    bisection_rel_tol: float = 1e-6
    bisection_max_iter: int = 100
    power_budget_w: float = 0.01
    seed: int = 0
    move_antennas: bool = True

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ConfigurationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ConfigurationError("need at least one iteration")
        if self.power_budget_w <= 0:
            raise ConfigurationError("power budget must be positive")

    def position_config(self):
        return PositionStepConfig(
            step_init=self.step_init,
            shrink=self.step_shrink,
            max_backtracks=self.max_backtracks,
        )


@dataclass(frozen=True)
class RunResult:
    """Outcome of one solve: final iterate plus per-iteration traces."""

    beamformer: object
    centers: np.ndarray
    sum_rate_trace: np.ndarray
    surrogate_trace: np.ndarray
    initial_sum_rate: float
    sinrs: np.ndarray
    iterations: int
    termination: str
    seconds: float

    @property
    def final_sum_rate(self):
        return float(self.sum_rate_trace[-1])


@dataclass
class AoState:
    """Mutable state threaded through the alternating loop."""

    scenario: object
    config: SolverConfig
    centers: np.ndarray
    beamformer: object
    slack: object
    penalty: PenaltyState = None
    iteration: int = 0
    sum_rate: float = 0.0
    surrogate: float = 0.0
    multiplier: float = 0.0
    sinrs: np.ndarray = None
    _channels: np.ndarray = field(default=None, repr=False)

    def channels(self):
        if self._channels is None:
            self._channels = all_channels(self.centers, self.scenario)
        return self._channels

    def invalidate_channels(self):
        self._channels = None

    def refresh_metrics(self):
        channels = self.channels()
        noise = self.scenario.noise_powers
        self.sinrs = user_sinrs(
            channels, self.beamformer.analog(), self.beamformer.digital, noise
        )
        self.sum_rate = float(np.sum(np.log2(1.0 + self.sinrs)))
        self.surrogate = surrogate_value(
            channels, self.beamformer, self.slack, noise
        )


def initialize(scenario, config, structure="sub", centers=None,
               initial_beamformer=None):
    """Feasible starting point: frame centers, random phases, matched filter.

    The digital matrix is the matched filter on the analog-combined channels,
    scaled so the transmit power meets the budget with equality; the slack is
    refreshed once so the state is self-consistent. ``centers`` pins the
    sub-array centers elsewhere than the frame midpoints (grid search), and
    ``initial_beamformer`` warm-starts from a previous solution instead of
    the random-phase matched filter.
    """
    geometry = scenario.geometry
    if centers is None:
        centers = frame_centers(geometry)
    else:
        centers = geometry.validate_centers(centers)
    rng = np.random.default_rng(config.seed)
    channels = all_channels(centers, scenario)

    if initial_beamformer is not None:
        beamformer = initial_beamformer
    elif structure == "sub":
        phases = rng.uniform(
            0.0, 2.0 * np.pi, size=(geometry.n_subarrays, geometry.per_subarray)
        )
        analog = BlockDiagonalAnalog(phases)
        digital = analog.adjoint_matrix(channels).T
        scale_sq = np.sum(np.abs(digital) ** 2) * geometry.per_subarray
        if scale_sq > 0:
            digital = digital * np.sqrt(config.power_budget_w / scale_sq)
        beamformer = HybridBeamformer(
            analog_phases=phases,
            digital=digital,
            power_budget=config.power_budget_w,
        )
    elif structure == "full":
        phases = rng.uniform(
            0.0, 2.0 * np.pi, size=(geometry.n_antennas, geometry.n_subarrays)
        )
        matrix = np.exp(1j * phases)
        digital = (channels @ matrix.conj()).T  # columns are W_A^H h_k
        scale_sq = np.sum(np.abs(matrix @ digital) ** 2)
        if scale_sq > 0:
            digital = digital * np.sqrt(config.power_budget_w / scale_sq)
        beamformer = FullyConnectedBeamformer(
            analog_phases=phases,
            digital=digital,
            power_budget=config.power_budget_w,
        )
    else:
        raise ConfigurationError(f"unknown analog structure {structure!r}")

    slack = update_slack(channels, beamformer, scenario.noise_powers)
    state = AoState(
        scenario=scenario,
        config=config,
        centers=centers,
        beamformer=beamformer,
        slack=slack,
        _channels=channels,
    )
    state.refresh_metrics()
    return state


def ao_iterate(state):
    """One outer iteration over all blocks; returns the mutated state."""
    config = state.config
    scenario = state.scenario
    noise = scenario.noise_powers

    channels = state.channels()
    state.slack = update_slack(channels, state.beamformer, noise)

    def digital_step():
        digital, lam = solve_digital(
            channels,
            state.beamformer,
            state.slack,
            rel_tol=config.bisection_rel_tol,
            max_iter=config.bisection_max_iter,
        )
        state.beamformer = state.beamformer.with_digital(digital)
        state.multiplier = lam

    def analog_step():
        if state.penalty is None:
            eta = initial_penalty_weight(
                channels, state.beamformer, state.slack, config.penalty_scale
            )
            state.penalty = PenaltyState(eta, config.inner_analog_iterations)
        phases = solve_analog(
            channels,
            state.beamformer,
            state.slack,
            state.penalty.eta,
            state.penalty.inner_iterations,
        )
        state.beamformer = state.beamformer.with_phases(phases)

    if isinstance(state.beamformer, FullyConnectedBeamformer):
        # The coupled power ||W_A W_D||_F^2 moves with the phases, so run the
        # digital solve after the analog update: it enforces the budget under
        # the new phases and every iteration boundary stays feasible.
        analog_step()
        digital_step()
    else:
        digital_step()
        analog_step()

    movable = (
        config.move_antennas
        and isinstance(state.beamformer, HybridBeamformer)
    )
    if movable:
        state.centers = sweep_all_centers(
            state.centers,
            scenario,
            state.beamformer,
            state.slack,
            config.position_config(),
        )
        state.invalidate_channels()

    state.refresh_metrics()
    state.penalty = state.penalty.grown(config.penalty_growth, config.penalty_cap)
    state.iteration += 1
    return state


def solve(scenario, config, structure="sub", iteration_hook=None,
          centers=None, initial_beamformer=None):
    """Run the alternating loop until the sum-rate change drops below the
    tolerance or the iteration cap is hit. Deterministic for a fixed seed."""
    start = time.perf_counter()
    state = initialize(
        scenario,
        config,
        structure=structure,
        centers=centers,
        initial_beamformer=initial_beamformer,
    )
    initial_rate = state.sum_rate

    rates, surrogates = [], []
    previous = initial_rate
    termination = "max-iterations"
    for _ in range(config.max_iterations):
        state = ao_iterate(state)
        rates.append(state.sum_rate)
        surrogates.append(state.surrogate)
        if iteration_hook is not None:
            iteration_hook(state)
        if abs(state.sum_rate - previous) < config.tolerance:
            termination = "converged"
            break
        previous = state.sum_rate

    return RunResult(
        beamformer=state.beamformer,
        centers=state.centers.copy(),
        sum_rate_trace=np.asarray(rates),
        surrogate_trace=np.asarray(surrogates),
        initial_sum_rate=initial_rate,
        sinrs=np.asarray(state.sinrs),
        iterations=state.iteration,
        termination=termination,
        seconds=time.perf_counter() - start,
    )
