"""Shared builders for small deterministic test instances."""

import numpy as np
import pytest

from mabeam import (
    ArrayGeometry,
    ChannelScenario,
    HybridBeamformer,
    PathSet,
    ScenarioParams,
    sample_scenario,
    update_slack,
)
from mabeam.channel import all_channels


def build_geometry(n_rf_h=2, n_rf_v=2, n_h=2, n_v=2, wavelength=0.01,
                   frame_wavelengths=2.0):
    return ArrayGeometry.build(
        n_rf_h, n_rf_v, n_h, n_v,
        wavelength=wavelength,
        frame_size=frame_wavelengths * wavelength,
    )


def random_pathset(rng, n_transmit=3, n_receive=3, noise_power=1e-11,
                   gain_scale=1.0, diagonal=True):
    t_angles = np.stack([
        np.arcsin(rng.uniform(-1, 1, n_transmit)),
        rng.uniform(-np.pi / 2, np.pi / 2, n_transmit),
    ], axis=1)
    r_angles = np.stack([
        np.arcsin(rng.uniform(-1, 1, n_receive)),
        rng.uniform(-np.pi / 2, np.pi / 2, n_receive),
    ], axis=1)
    if diagonal and n_transmit == n_receive:
        diag = gain_scale * (
            rng.standard_normal(n_transmit) + 1j * rng.standard_normal(n_transmit)
        )
        response = np.diag(diag)
    else:
        response = gain_scale * (
            rng.standard_normal((n_transmit, n_receive))
            + 1j * rng.standard_normal((n_transmit, n_receive))
        )
    return PathSet(
        transmit_angles=t_angles,
        receive_angles=r_angles,
        path_response=response,
        receive_position=rng.uniform(-0.01, 0.01, 2),
        noise_power=noise_power,
    )


def random_scenario(rng, geometry, n_users=3, n_paths=3, noise_power=1e-11,
                    gain_scale=1.0):
    users = tuple(
        random_pathset(rng, n_paths, n_paths, noise_power, gain_scale)
        for _ in range(n_users)
    )
    return ChannelScenario(geometry=geometry, users=users, seed=0)


def random_beamformer(rng, geometry, n_users, power_budget=0.01):
    """Random feasible sub-connected beamformer at exactly the power budget."""
    phases = rng.uniform(0, 2 * np.pi, (geometry.n_subarrays, geometry.per_subarray))
    digital = rng.standard_normal((geometry.n_subarrays, n_users)) + 1j * \
        rng.standard_normal((geometry.n_subarrays, n_users))
    scale = np.sqrt(
        power_budget / (geometry.per_subarray * np.sum(np.abs(digital) ** 2))
    )
    return HybridBeamformer(
        analog_phases=phases,
        digital=digital * scale,
        power_budget=power_budget,
    )


def reference_state(seed, gain_convention="linear", frame_wavelengths=2.0,
                    power_budget=0.01):
    """Scenario + feasible beamformer + refreshed slack at the study defaults."""
    params = ScenarioParams(
        gain_convention=gain_convention,
        frame_size_wavelengths=frame_wavelengths,
    )
    scenario = sample_scenario(params, seed)
    rng = np.random.default_rng(seed + 10_000)
    beamformer = random_beamformer(
        rng, scenario.geometry, scenario.n_users, power_budget
    )
    channels = all_channels(scenario.geometry.frame_centers, scenario)
    slack = update_slack(channels, beamformer, scenario.noise_powers)
    return scenario, beamformer, slack, channels


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
