"""Movable sub-array hybrid beamforming simulator.

A numpy/scipy library for synthesizing field-response multipath channels and
maximizing the multi-user downlink sum rate by jointly optimizing a
sub-connected hybrid beamformer (unit-modulus analog phases plus a digital
matrix) and the positions of movable sub-arrays, with fixed-position
baselines, a grid-search upper bound, and a reproducible Monte-Carlo harness.
"""

from .analog import BlockDiagonalAnalog, FullyConnectedAnalog, apply_block_structure
from .baselines import (
    GridSpec,
    SCHEME_TAGS,
    UpperBoundResult,
    run_with_restarts,
    solve_fpa_full,
    solve_fpa_sub,
    solve_ma_sub,
    upper_bound,
)
from .channel import (
    ChannelScenario,
    PathSet,
    ScenarioParams,
    all_channels,
    field_response,
    full_channel,
    load_scenario,
    receive_response,
    sample_scenario,
    save_scenario,
    subarray_channel,
    sum_rate,
    user_sinrs,
)
from .experiments import (
    AggregateRow,
    ExperimentConfig,
    ExperimentFailure,
    emit_results,
    run_experiment,
    sweep_power,
    sweep_region,
)
from .fp import (
    FullyConnectedBeamformer,
    HybridBeamformer,
    PenaltyState,
    SlackState,
    load_beamformer,
    save_beamformer,
    solve_analog,
    solve_digital,
    surrogate_value,
    update_slack,
)
from .geometry import ArrayGeometry, ConfigurationError, default_offsets
from .positioning import (
    PositionStepConfig,
    descend_center,
    position_gradient,
    position_objective,
    sweep_all_centers,
)
from .seeding import derive_seed
from .solver import RunResult, SolverConfig, ao_iterate, initialize, solve

__version__ = "0.1.0"
