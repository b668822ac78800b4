"""Sub-array center optimization by projected gradient ascent.

For one sub-array with the rest of the system frozen, the surrogate reduces
to a smooth function of that sub-array's center: a coherent-combining term
plus weighted cross-gain magnitudes in which the other sub-arrays contribute
center-independent constants. The gradient is analytic (every antenna phase
is an exponential in the center coordinates). Candidate steps outside the
admissible rectangle or not improving the objective are rejected, so
feasibility and monotonicity hold by construction.
"""

from dataclasses import dataclass

import numpy as np

from .channel import all_channels, direction_factors, path_weights

__all__ = [
    "PositionStepConfig",
    "BlockPositionProblem",
    "position_objective",
    "position_gradient",
    "descend_center",
    "sweep_all_centers",
]


@dataclass(frozen=True)
class PositionStepConfig:
    """Backtracking schedule: start large, halve until accepted or exhausted."""

    step_init: float = 10.0
    shrink: float = 0.5
    max_backtracks: int = 30

    def __post_init__(self):
        if self.step_init <= 0 or not (0 < self.shrink < 1):
            raise ValueError("need step_init > 0 and shrink in (0, 1)")
        if self.max_backtracks < 1:
            raise ValueError("need at least one backtracking step")


class BlockPositionProblem:
    """Surrogate restricted to one sub-array center, constants folded in."""

    def __init__(self, index, centers, scenario, beamformer, slack):
        geometry = scenario.geometry
        self.index = index
        self.geometry = geometry
        self.delta = geometry.delta
        self.wavenumber = 2.0 * np.pi / geometry.wavelength
        per = geometry.per_subarray
        sl = slice(index * per, (index + 1) * per)

        analog = beamformer.analog()
        self.block_phase = analog.blocks[index]          # p_{m,n}, (per,)
        self.digital_row = beamformer.digital[index]     # w_{k', block}, (K,)
        self.mu = slack.weights
        # Coefficient of each user's own-block gain in the combining term:
        # the surrogate carries 2 Re{(1+gamma) conj(omega) a_k}.
        self.coef = (1.0 + slack.gamma) * np.conj(slack.omega)

        channels = all_channels(centers, scenario)
        xi = analog.adjoint_matrix(channels)
        gains = xi.conj() @ beamformer.digital           # (K, K) full h-bar
        own = channels[:, sl].conj() @ self.block_phase  # (K,) z_k at current c
        self.const = gains - np.outer(own, self.digital_row)

        self.rho = [direction_factors(u.transmit_angles) for u in scenario.users]
        self.weights = [path_weights(u, geometry.wavelength) for u in scenario.users]

    def in_region(self, center):
        return self.geometry.region_contains(self.index, center)

    def _phase_matrix(self, center, k):
        positions = np.asarray(center, dtype=float) + self.delta
        return np.exp(-1j * self.wavenumber * (positions @ self.rho[k].T))

    def _block_gains(self, center):
        """z_k = h_k(center)^H p for every user."""
        out = np.empty(len(self.mu), dtype=complex)
        for k in range(len(self.mu)):
            h = self._phase_matrix(center, k) @ self.weights[k]
            out[k] = h.conj() @ self.block_phase
        return out

    def objective(self, center):
        z = self._block_gains(center)
        cross = self.const + np.outer(z, self.digital_row)
        combine = 2.0 * np.real(self.coef * self.digital_row * z)
        return float(
            np.sum(combine) - np.sum(self.mu * np.sum(np.abs(cross) ** 2, axis=1))
        )

    def gradient(self, center):
        grad = np.zeros(2)
        for k in range(len(self.mu)):
            phases = self._phase_matrix(center, k)
            h = phases @ self.weights[k]
            z = h.conj() @ self.block_phase
            # dh_p/dc_axis = -j * wavenumber * rho_axis * (same exponential)
            jac = np.stack([
                phases @ (self.weights[k] * (-1j * self.wavenumber * self.rho[k][:, a]))
                for a in (0, 1)
            ])
            q = jac.conj() @ self.block_phase  # dz/dc per axis, (2,)
            cross = self.const[k] + z * self.digital_row
            grad += 2.0 * np.real(self.coef[k] * self.digital_row[k] * q)
            grad -= 2.0 * self.mu[k] * np.real(
                np.conj(q) * np.sum(np.conj(self.digital_row) * cross)
            )
        return grad


def position_objective(index, center, centers, scenario, beamformer, slack):
    """Block objective at a candidate center for sub-array ``index``."""
    problem = BlockPositionProblem(index, centers, scenario, beamformer, slack)
    if not problem.in_region(center):
        raise ValueError(f"candidate center {center} outside admissible region")
    return problem.objective(center)


def position_gradient(index, center, centers, scenario, beamformer, slack):
    problem = BlockPositionProblem(index, centers, scenario, beamformer, slack)
    return problem.gradient(center)


def descend_center(index, centers, scenario, beamformer, slack, config):
    """One accepted-or-rejected gradient step for sub-array ``index``.

    The gradient is evaluated once; the step is halved until the candidate is
    both inside the region and at least as good as the current center. An
    exhausted backtrack budget leaves the center unchanged.
    """
    problem = BlockPositionProblem(index, centers, scenario, beamformer, slack)
    current = np.asarray(centers[index], dtype=float)
    grad = problem.gradient(current)
    base = problem.objective(current)
    step = config.step_init
    for _ in range(config.max_backtracks):
        candidate = current + step * grad
        step *= config.shrink
        if problem.in_region(candidate) and problem.objective(candidate) >= base:
            return candidate
    return current


def sweep_all_centers(centers, scenario, beamformer, slack, config):
    """One Gauss-Seidel pass over sub-arrays in row-major order."""
    updated = np.array(centers, dtype=float, copy=True)
    for index in range(scenario.geometry.n_subarrays):
        updated[index] = descend_center(
            index, updated, scenario, beamformer, slack, config
        )
    return updated
