"""Field-response multipath channel model and randomized scenario generation.

Each transmit antenna at 2-D position t contributes a unit-modulus phase
exp(j*2*pi/lambda * t . rho_l) per propagation path, with direction factor
rho = [sin(theta)cos(phi), cos(theta)]. A complex path-response matrix couples
transmit paths to receive paths; single-antenna users observe the channel
through their receive field-response vector. Moving a sub-array re-phases its
antennas' path contributions, which is the effect the position optimizer
exploits.
"""

import json
from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, ConfigurationError
from .units import db_to_linear, dbm_to_watts

__all__ = [
    "PathSet",
    "ChannelScenario",
    "ScenarioParams",
    "direction_factors",
    "field_response",
    "receive_response",
    "subarray_channel",
    "full_channel",
    "all_channels",
    "sample_scenario",
    "effective_gains",
    "user_sinrs",
    "sum_rate",
    "scenario_to_dict",
    "scenario_from_dict",
    "save_scenario",
    "load_scenario",
]


def direction_factors(angles):
    """Map (L, 2) elevation/azimuth pairs to (L, 2) direction factors."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    theta, phi = angles[:, 0], angles[:, 1]
    return np.stack([np.sin(theta) * np.cos(phi), np.cos(theta)], axis=1)


def field_response(position, angles, wavelength):
    """Unit-modulus field-response vector of a point at 2-D ``position``.

    Entry l is exp(j * 2*pi/wavelength * position . rho_l).
    """
    if wavelength <= 0:
        raise ConfigurationError("wavelength must be positive")
    rho = direction_factors(angles)
    phase = (2.0 * np.pi / wavelength) * (rho @ np.asarray(position, dtype=float))
    return np.exp(1j * phase)


@dataclass(frozen=True)
class PathSet:
    """Per-user propagation geometry: path angles, gains, and noise power.

    ``transmit_angles`` and ``receive_angles`` hold (theta, phi) rows;
    ``path_response`` is the (L_t, L_r) complex coupling between transmit and
    receive paths (diagonal in the standard sampling protocol).
    """

    transmit_angles: np.ndarray
    receive_angles: np.ndarray
    path_response: np.ndarray
    receive_position: np.ndarray
    noise_power: float

    def __post_init__(self):
        lt = np.atleast_2d(self.transmit_angles).shape[0]
        lr = np.atleast_2d(self.receive_angles).shape[0]
        if self.path_response.shape != (lt, lr):
            raise ConfigurationError(
                f"path_response shape {self.path_response.shape} does not match "
                f"({lt}, {lr}) transmit/receive paths"
            )
        if self.noise_power <= 0:
            raise ConfigurationError("noise power must be positive")

    @property
    def n_transmit_paths(self):
        return np.atleast_2d(self.transmit_angles).shape[0]


def receive_response(user, wavelength):
    """Receive field-response vector at the user's local position."""
    return field_response(user.receive_position, user.receive_angles, wavelength)


def path_weights(user, wavelength):
    """Transmit-path weights u = path_response @ receive_response.

    The channel at transmit position t is then sum_l conj(g_l(t)) * u_l, which
    is the quantity every channel evaluation below reduces to.
    """
    return user.path_response @ receive_response(user, wavelength)


def _channel_from_weights(positions, rho, weights, wavelength):
    """h_p = sum_l u_l * exp(-j*2*pi/lambda * t_p . rho_l) for each position."""
    phase = (2.0 * np.pi / wavelength) * (np.asarray(positions) @ rho.T)
    return np.exp(-1j * phase) @ weights


def subarray_channel(center, user, geometry):
    """Channel vector from one sub-array (centered at ``center``) to a user."""
    positions = np.asarray(center, dtype=float) + geometry.delta
    rho = direction_factors(user.transmit_angles)
    u = path_weights(user, geometry.wavelength)
    return _channel_from_weights(positions, rho, u, geometry.wavelength)


def full_channel(centers, user, geometry):
    """Stacked channel vector over all sub-arrays, row-major sub-array order."""
    centers = np.asarray(centers, dtype=float)
    rho = direction_factors(user.transmit_angles)
    u = path_weights(user, geometry.wavelength)
    positions = centers[:, None, :] + geometry.delta[None, :, :]
    return _channel_from_weights(
        positions.reshape(-1, 2), rho, u, geometry.wavelength
    )


def all_channels(centers, scenario):
    """(K, N) matrix of per-user channel vectors at the given centers."""
    return np.stack(
        [full_channel(centers, user, scenario.geometry) for user in scenario.users]
    )


@dataclass(frozen=True)
class ChannelScenario:
    """One multi-user channel realization over a shared array geometry."""

    geometry: ArrayGeometry
    users: tuple
    seed: int = 0

    def __post_init__(self):
        if len(self.users) < 1:
            raise ConfigurationError("scenario needs at least one user")

    @property
    def n_users(self):
        return len(self.users)

    @property
    def noise_powers(self):
        return np.array([u.noise_power for u in self.users])


@dataclass(frozen=True)
class ScenarioParams:
    """Sampling protocol for random scenarios.

    Distances are uniform on ``distance_range``; per-path gains are
    independent complex normals on the diagonal of the path-response matrix;
    elevation/azimuth angles follow the density cos(theta)/(2*pi) on
    theta in [-pi/2, pi/2], phi in [-pi/2, pi/2], realized by drawing
    sin(theta) uniformly.

    ``gain_convention`` selects the per-path variance: "squared" uses
    (g0 * d**-alpha)**2 / L with g0 the linear reference power gain, which is
    the source protocol taken literally; "linear" uses the conventional
    g0 * d**-alpha / L so that the total average channel power equals the
    path-loss law.
    """

    n_users: int = 4
    n_paths: int = 6
    wavelength: float = 0.01
    n_rf_h: int = 2
    n_rf_v: int = 2
    n_h: int = 2
    n_v: int = 2
    frame_size_wavelengths: float = 2.0
    reference_gain_db: float = -40.0
    path_loss_exponent: float = 2.8
    distance_range: tuple = (20.0, 100.0)
    noise_power_dbm: float = -80.0
    gain_convention: str = "squared"
    delta_wavelengths: tuple = None

    def __post_init__(self):
        if self.n_users < 1 or self.n_paths < 1:
            raise ConfigurationError("need at least one user and one path")
        if self.wavelength <= 0 or self.frame_size_wavelengths <= 0:
            raise ConfigurationError("wavelength and frame size must be positive")
        lo, hi = self.distance_range
        if not (0 < lo <= hi):
            raise ConfigurationError("invalid distance range")
        if self.gain_convention not in ("squared", "linear"):
            raise ConfigurationError(
                "gain_convention must be 'squared' or 'linear'"
            )

    @property
    def noise_power_w(self):
        return float(dbm_to_watts(self.noise_power_dbm))

    def geometry(self, frame_size_wavelengths=None):
        d = self.frame_size_wavelengths if frame_size_wavelengths is None \
            else frame_size_wavelengths
        delta = None
        if self.delta_wavelengths is not None:
            delta = np.asarray(self.delta_wavelengths, dtype=float) * self.wavelength
        return ArrayGeometry.build(
            self.n_rf_h, self.n_rf_v, self.n_h, self.n_v,
            wavelength=self.wavelength,
            frame_size=d * self.wavelength,
            delta=delta,
        )

    def path_gain_variance(self, distance):
        g = db_to_linear(self.reference_gain_db) * distance ** (
            -self.path_loss_exponent
        )
        if self.gain_convention == "squared":
            return g ** 2 / self.n_paths
        return g / self.n_paths


def _sample_angles(rng, count):
    theta = np.arcsin(rng.uniform(-1.0, 1.0, size=count))
    phi = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=count)
    return np.stack([theta, phi], axis=1)


def sample_scenario(params, seed, frame_size_wavelengths=None):
    """Draw one scenario; identical seeds give bit-identical scenarios.

    ``frame_size_wavelengths`` overrides the geometry's frame size without
    touching the random draws, so region sweeps share channel realizations
    across region sizes.
    """
    geometry = params.geometry(frame_size_wavelengths)
    rng = np.random.default_rng(seed)
    users = []
    for _ in range(params.n_users):
        distance = rng.uniform(*params.distance_range)
        t_angles = _sample_angles(rng, params.n_paths)
        r_angles = _sample_angles(rng, params.n_paths)
        var = params.path_gain_variance(distance)
        gains = np.sqrt(var / 2.0) * (
            rng.standard_normal(params.n_paths)
            + 1j * rng.standard_normal(params.n_paths)
        )
        users.append(
            PathSet(
                transmit_angles=t_angles,
                receive_angles=r_angles,
                path_response=np.diag(gains),
                receive_position=np.zeros(2),
                noise_power=params.noise_power_w,
            )
        )
    return ChannelScenario(geometry=geometry, users=tuple(users), seed=int(seed))


def effective_gains(channels, analog, digital):
    """(K, K) matrix with entry (k, k') = h_k^H W_A w_k'."""
    xi = analog.adjoint_matrix(channels)  # (K, n_chains)
    return xi.conj() @ digital


def user_sinrs(channels, analog, digital, noise_powers):
    gains = np.abs(effective_gains(channels, analog, digital)) ** 2
    desired = np.diag(gains)
    interference = gains.sum(axis=1) - desired
    return desired / (interference + np.asarray(noise_powers))


def sum_rate(centers, analog, digital, scenario):
    """Achievable downlink sum rate in bits/s/Hz."""
    channels = all_channels(centers, scenario)
    sinr = user_sinrs(channels, analog, digital, scenario.noise_powers)
    return float(np.sum(np.log2(1.0 + sinr)))


# ---------------------------------------------------------------------------
# Scenario serialization (replay / cross-implementation comparison)
# ---------------------------------------------------------------------------

def _complex_to_lists(a):
    a = np.asarray(a)
    return {"real": a.real.tolist(), "imag": a.imag.tolist()}


def _complex_from_lists(d):
    return np.asarray(d["real"], dtype=float) + 1j * np.asarray(
        d["imag"], dtype=float
    )


def scenario_to_dict(scenario):
    geom = scenario.geometry
    return {
        "seed": scenario.seed,
        "geometry": {
            "n_rf_h": geom.n_rf_h,
            "n_rf_v": geom.n_rf_v,
            "n_h": geom.n_h,
            "n_v": geom.n_v,
            "wavelength_m": geom.wavelength,
            "frame_size_m": geom.frame_size,
            "delta_m": geom.delta.tolist(),
        },
        "users": [
            {
                "transmit_angles": np.asarray(u.transmit_angles).tolist(),
                "receive_angles": np.asarray(u.receive_angles).tolist(),
                "path_response": _complex_to_lists(u.path_response),
                "receive_position": np.asarray(u.receive_position).tolist(),
                "noise_power_w": u.noise_power,
            }
            for u in scenario.users
        ],
    }


def scenario_from_dict(doc):
    g = doc["geometry"]
    geometry = ArrayGeometry.build(
        g["n_rf_h"], g["n_rf_v"], g["n_h"], g["n_v"],
        wavelength=g["wavelength_m"],
        frame_size=g["frame_size_m"],
        delta=np.asarray(g["delta_m"], dtype=float),
    )
    users = tuple(
        PathSet(
            transmit_angles=np.asarray(u["transmit_angles"], dtype=float),
            receive_angles=np.asarray(u["receive_angles"], dtype=float),
            path_response=_complex_from_lists(u["path_response"]),
            receive_position=np.asarray(u["receive_position"], dtype=float),
            noise_power=float(u["noise_power_w"]),
        )
        for u in doc["users"]
    )
    return ChannelScenario(geometry=geometry, users=users, seed=int(doc["seed"]))


def save_scenario(scenario, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=1)


def load_scenario(path):
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
