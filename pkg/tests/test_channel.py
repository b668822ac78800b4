"""Channel model tests: field responses, stacking, sampling, rates."""

import numpy as np
import pytest

from mabeam import (
    ChannelScenario,
    ConfigurationError,
    PathSet,
    ScenarioParams,
    sample_scenario,
)
from mabeam.channel import (
    direction_factors,
    field_response,
    full_channel,
    receive_response,
    scenario_from_dict,
    scenario_to_dict,
    subarray_channel,
    sum_rate,
)
from mabeam.analog import BlockDiagonalAnalog

from conftest import build_geometry, random_beamformer, random_pathset, random_scenario

WAVELENGTH = 0.01


def oracle_subarray_channel(center, user, geometry):
    """Straight-from-definition double loop over antennas and paths."""
    lam = geometry.wavelength
    per = geometry.per_subarray
    t_rho = direction_factors(user.transmit_angles)
    r_rho = direction_factors(user.receive_angles)
    f = np.array([
        np.exp(1j * 2 * np.pi / lam * user.receive_position @ r_rho[l])
        for l in range(r_rho.shape[0])
    ])
    h = np.zeros(per, dtype=complex)
    for p in range(per):
        t = np.asarray(center) + geometry.delta[p]
        for lt in range(t_rho.shape[0]):
            g = np.exp(1j * 2 * np.pi / lam * t @ t_rho[lt])
            for lr in range(r_rho.shape[0]):
                h[p] += np.conj(g) * user.path_response[lt, lr] * f[lr]
    return h


class TestFieldResponse:
    def test_origin_gives_all_ones(self):
        angles = np.array([[0.3, 0.1], [1.0, -0.5], [0.0, 0.0]])
        out = field_response((0.0, 0.0), angles, WAVELENGTH)
        np.testing.assert_allclose(out, np.ones(3), atol=1e-12)

    def test_half_wavelength_vertical_is_minus_one(self):
        # theta = 0 gives rho = [0, 1]; half a wavelength along y is phase pi.
        out = field_response((0.0, WAVELENGTH / 2), [[0.0, 0.0]], WAVELENGTH)
        np.testing.assert_allclose(out, [-1.0], atol=1e-12)

    def test_quarter_wavelength_horizontal_is_j(self):
        # theta = pi/2, phi = 0 gives rho = [1, 0]; quarter wavelength -> pi/2.
        out = field_response((WAVELENGTH / 4, 0.0), [[np.pi / 2, 0.0]], WAVELENGTH)
        np.testing.assert_allclose(out, [1j], atol=1e-12)

    def test_receive_response_cases(self, rng):
        user = random_pathset(rng)
        origin = PathSet(
            transmit_angles=user.transmit_angles,
            receive_angles=user.receive_angles,
            path_response=user.path_response,
            receive_position=np.zeros(2),
            noise_power=1e-11,
        )
        np.testing.assert_allclose(
            receive_response(origin, WAVELENGTH), np.ones(3), atol=1e-12
        )
        full_turn = PathSet(
            transmit_angles=[[0.0, 0.0]],
            receive_angles=[[0.0, 0.0]],
            path_response=np.eye(1),
            receive_position=np.array([0.0, WAVELENGTH]),
            noise_power=1e-11,
        )
        np.testing.assert_allclose(
            receive_response(full_turn, WAVELENGTH), [1.0], atol=1e-12
        )
        eighth = PathSet(
            transmit_angles=[[0.0, 0.0]],
            receive_angles=[[np.pi / 2, 0.0]],
            path_response=np.eye(1),
            receive_position=np.array([WAVELENGTH / 8, 0.0]),
            noise_power=1e-11,
        )
        np.testing.assert_allclose(
            receive_response(eighth, WAVELENGTH), [np.exp(1j * np.pi / 4)],
            atol=1e-12,
        )

    def test_unit_modulus(self, rng):
        for _ in range(20):
            pos = rng.uniform(-0.05, 0.05, 2)
            angles = np.stack([
                np.arcsin(rng.uniform(-1, 1, 5)),
                rng.uniform(-np.pi / 2, np.pi / 2, 5),
            ], axis=1)
            out = field_response(pos, angles, WAVELENGTH)
            np.testing.assert_allclose(np.abs(out), 1.0, atol=1e-12)

    def test_rejects_bad_wavelength(self):
        with pytest.raises(ConfigurationError):
            field_response((0, 0), [[0.0, 0.0]], 0.0)


class TestSubarrayChannel:
    def test_single_path_collapse(self):
        geometry = build_geometry(1, 1)
        user = PathSet(
            transmit_angles=[[0.4, 0.2]],
            receive_angles=[[0.1, -0.3]],
            path_response=np.eye(1),
            receive_position=np.zeros(2),
            noise_power=1e-11,
        )
        h = subarray_channel(np.zeros(2), user, geometry)
        expected = np.conj([
            field_response(geometry.delta[p], user.transmit_angles, WAVELENGTH)[0]
            for p in range(geometry.per_subarray)
        ])
        np.testing.assert_allclose(h, expected, atol=1e-12)
        np.testing.assert_allclose(np.abs(h), 1.0, atol=1e-12)

    def test_single_path_shift_preserves_magnitudes(self, rng):
        geometry = build_geometry(1, 1)
        user = random_pathset(rng, n_transmit=1, n_receive=1)
        h0 = subarray_channel(np.zeros(2), user, geometry)
        h1 = subarray_channel(rng.uniform(-0.002, 0.002, 2), user, geometry)
        np.testing.assert_allclose(np.abs(h0), np.abs(h1), rtol=1e-12)

    def test_matches_definition_oracle(self, rng):
        geometry = build_geometry(2, 2)
        for _ in range(5):
            user = random_pathset(rng, n_transmit=2, n_receive=2, diagonal=False)
            center = geometry.frame_centers[1] + rng.uniform(-1e-3, 1e-3, 2)
            got = subarray_channel(center, user, geometry)
            want = oracle_subarray_channel(center, user, geometry)
            np.testing.assert_allclose(got, want, rtol=1e-10)

    def test_linear_in_path_response(self, rng):
        geometry = build_geometry(2, 2)
        user = random_pathset(rng, diagonal=False)
        s = 0.7 - 1.9j
        scaled = PathSet(
            transmit_angles=user.transmit_angles,
            receive_angles=user.receive_angles,
            path_response=s * user.path_response,
            receive_position=user.receive_position,
            noise_power=user.noise_power,
        )
        h = full_channel(geometry.frame_centers, user, geometry)
        hs = full_channel(geometry.frame_centers, scaled, geometry)
        np.testing.assert_allclose(hs, s * h, rtol=1e-12)


class TestFullChannel:
    def test_single_subarray_degenerate(self, rng):
        geometry = build_geometry(1, 1)
        user = random_pathset(rng)
        np.testing.assert_allclose(
            full_channel(geometry.frame_centers, user, geometry),
            subarray_channel(geometry.frame_centers[0], user, geometry),
            rtol=1e-12,
        )

    def test_study_configuration_is_length_16(self, rng):
        geometry = build_geometry(2, 2, 2, 2)
        user = random_pathset(rng, n_transmit=6, n_receive=6)
        assert full_channel(geometry.frame_centers, user, geometry).shape == (16,)

    def test_stacking_consistency(self, rng):
        geometry = build_geometry(2, 2)
        user = random_pathset(rng)
        centers = geometry.frame_centers
        stacked = full_channel(centers, user, geometry)
        per = geometry.per_subarray
        for j in range(geometry.n_subarrays):
            block = subarray_channel(centers[j], user, geometry)
            np.testing.assert_allclose(
                stacked[j * per:(j + 1) * per], block, rtol=1e-12
            )


class TestSampling:
    def test_same_seed_is_bit_identical(self):
        params = ScenarioParams()
        a = sample_scenario(params, 42)
        b = sample_scenario(params, 42)
        assert scenario_to_dict(a) == scenario_to_dict(b)

    def test_different_seeds_differ(self):
        params = ScenarioParams()
        a = sample_scenario(params, 1)
        b = sample_scenario(params, 2)
        assert scenario_to_dict(a) != scenario_to_dict(b)

    def test_per_path_variance_as_printed(self):
        # Reference gain -40 dB at 1 m: linear power 1e-4, squared protocol
        # variance (1e-4)**2 / L.
        params = ScenarioParams(n_paths=6)
        assert params.path_gain_variance(1.0) == pytest.approx((1e-4) ** 2 / 6)

    def test_variance_convention_switch(self):
        squared = ScenarioParams(gain_convention="squared")
        linear = ScenarioParams(gain_convention="linear")
        d = 20.0
        g = 1e-4 * d ** -2.8
        assert squared.path_gain_variance(d) == pytest.approx(g ** 2 / 6)
        assert linear.path_gain_variance(d) == pytest.approx(g / 6)

    def test_empirical_gain_variance(self):
        params = ScenarioParams(n_users=1, n_paths=6, gain_convention="squared")
        gains = []
        variances = []
        for seed in range(400):
            scenario = sample_scenario(params, seed)
            user = scenario.users[0]
            gains.append(np.diag(user.path_response))
        gains = np.concatenate(gains)
        # Distances vary per scenario; compare against the mixture mean of the
        # per-distance variances via a coarse Monte-Carlo band.
        sample_var = np.mean(np.abs(gains) ** 2)
        rng = np.random.default_rng(0)
        d = rng.uniform(20, 100, 200_000)
        expect = np.mean((1e-4 * d ** -2.8) ** 2 / 6)
        assert sample_var == pytest.approx(expect, rel=0.25)

    def test_sine_elevation_moments(self):
        # sin(theta) is uniform on [-1, 1]: mean 0, variance 1/3.
        params = ScenarioParams(n_users=1, n_paths=500)
        sines = []
        for seed in range(200):
            scenario = sample_scenario(params, seed)
            sines.append(np.sin(scenario.users[0].transmit_angles[:, 0]))
        sines = np.concatenate(sines)
        n = sines.size
        assert n >= 1e5
        sigma = np.sqrt(1.0 / 3.0 / n)
        assert abs(np.mean(sines)) < 3 * sigma
        assert np.var(sines) == pytest.approx(1.0 / 3.0, rel=0.05)

    def test_invalid_configs_rejected(self):
        with pytest.raises(ConfigurationError):
            ScenarioParams(n_users=0)
        with pytest.raises(ConfigurationError):
            ScenarioParams(n_paths=0)
        with pytest.raises(ConfigurationError):
            ScenarioParams(distance_range=(0.0, 10.0))
        with pytest.raises(ConfigurationError):
            ScenarioParams(gain_convention="other")


class TestSumRate:
    def test_unit_sinr_gives_rate_one(self):
        geometry = build_geometry(1, 1, 1, 1)
        user = PathSet(
            transmit_angles=[[0.0, 0.0]],
            receive_angles=[[0.0, 0.0]],
            path_response=np.eye(1),
            receive_position=np.zeros(2),
            noise_power=1.0,
        )
        scenario = ChannelScenario(geometry=geometry, users=(user,))
        analog = BlockDiagonalAnalog(np.zeros((1, 1)))
        centers = geometry.frame_centers
        h = full_channel(centers, user, geometry)
        # choose w so that |h^H W_A w|^2 equals the unit noise power
        digital = np.array([[1.0 / h[0].conj()]])
        assert sum_rate(centers, analog, digital, scenario) == pytest.approx(1.0)

    def test_zero_digital_gives_zero_rate(self, rng):
        geometry = build_geometry(2, 2)
        scenario = random_scenario(rng, geometry)
        analog = BlockDiagonalAnalog(np.zeros((4, 4)))
        digital = np.zeros((4, scenario.n_users), dtype=complex)
        assert sum_rate(geometry.frame_centers, analog, digital, scenario) == 0.0

    def test_matches_scalar_expansion_oracle(self, rng):
        geometry = build_geometry(2, 2)
        scenario = random_scenario(rng, geometry, gain_scale=1e-4)
        beamformer = random_beamformer(rng, geometry, scenario.n_users)
        centers = geometry.frame_centers
        analog = beamformer.analog()
        got = sum_rate(centers, analog, beamformer.digital, scenario)

        dense = analog.dense()
        total = 0.0
        for k, user in enumerate(scenario.users):
            h = full_channel(centers, user, geometry)
            gains = [
                abs(np.vdot(h, dense @ beamformer.digital[:, kk])) ** 2
                for kk in range(scenario.n_users)
            ]
            sig = gains[k]
            interf = sum(gains) - sig
            total += np.log2(1 + sig / (interf + user.noise_power))
        assert got == pytest.approx(total, rel=1e-10)

    def test_invariant_to_column_phase_rotation(self, rng):
        geometry = build_geometry(2, 2)
        scenario = random_scenario(rng, geometry, gain_scale=1e-4)
        beamformer = random_beamformer(rng, geometry, scenario.n_users)
        centers = geometry.frame_centers
        analog = beamformer.analog()
        base = sum_rate(centers, analog, beamformer.digital, scenario)
        rotated = beamformer.digital.copy()
        rotated[:, 1] *= np.exp(1j * 0.77)
        assert sum_rate(centers, analog, rotated, scenario) == pytest.approx(
            base, rel=1e-12
        )


class TestSerialization:
    def test_round_trip(self, tmp_path, rng):
        params = ScenarioParams(n_users=2, n_paths=3)
        scenario = sample_scenario(params, 9)
        doc = scenario_to_dict(scenario)
        back = scenario_from_dict(doc)
        assert scenario_to_dict(back) == doc
        for u, v in zip(scenario.users, back.users):
            np.testing.assert_array_equal(u.path_response, v.path_response)
            np.testing.assert_array_equal(u.transmit_angles, v.transmit_angles)

    def test_file_round_trip(self, tmp_path):
        from mabeam import load_scenario, save_scenario

        scenario = sample_scenario(ScenarioParams(n_users=2, n_paths=2), 5)
        path = tmp_path / "scenario.json"
        save_scenario(scenario, path)
        restored = load_scenario(path)
        assert scenario_to_dict(restored) == scenario_to_dict(scenario)

    def test_mismatched_path_response_rejected(self):
        with pytest.raises(ConfigurationError):
            PathSet(
                transmit_angles=[[0.0, 0.0], [0.1, 0.1]],
                receive_angles=[[0.0, 0.0]],
                path_response=np.eye(3),
                receive_position=np.zeros(2),
                noise_power=1e-11,
            )
