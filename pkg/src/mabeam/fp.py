"""Fractional-programming core: slack updates, surrogate, and beamformer solvers.

The sum-rate objective is replaced by a concave surrogate in which each user
carries two slack variables: a positive SINR-like ratio and a complex
combining weight. With both refreshed at their closed-form optima the
surrogate equals ln(2) times the sum rate, and each block update below never
decreases it, which is what makes the alternating loop monotone.

All surrogate values are in nats; rates elsewhere are in bits/s/Hz.
"""

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from .analog import BlockDiagonalAnalog, FullyConnectedAnalog
from .geometry import ConfigurationError

__all__ = [
    "SlackState",
    "HybridBeamformer",
    "FullyConnectedBeamformer",
    "PenaltyState",
    "update_slack",
    "surrogate_value",
    "solve_digital",
    "solve_analog",
    "analog_objective",
    "penalty_objective",
    "initial_penalty_weight",
    "beamformer_to_dict",
    "beamformer_from_dict",
    "save_beamformer",
    "load_beamformer",
]


@dataclass(frozen=True)
class SlackState:
    """Per-user slack variables of the quadratic-transform surrogate."""

    gamma: np.ndarray
    omega: np.ndarray

    @property
    def weights(self):
        """Quadratic coefficients mu_k = (1 + gamma_k) |omega_k|^2."""
        return (1.0 + self.gamma) * np.abs(self.omega) ** 2


@dataclass(frozen=True)
class HybridBeamformer:
    """Sub-connected hybrid beamformer: block phases plus digital matrix.

    ``analog_phases`` has shape (n_subarrays, antennas_per_subarray) and
    ``digital`` has shape (n_subarrays, n_users). The realized analog entries
    are exactly unit modulus by construction.
    """

    analog_phases: np.ndarray
    digital: np.ndarray
    power_budget: float

    def analog(self):
        return BlockDiagonalAnalog(self.analog_phases)

    @property
    def transmit_power(self):
        # Disjoint unit-modulus blocks: ||W_A W_D||_F^2 = N_h N_v ||W_D||_F^2.
        return self.analog_phases.shape[1] * float(
            np.sum(np.abs(self.digital) ** 2)
        )

    def with_digital(self, digital):
        return replace(self, digital=digital)

    def with_phases(self, phases):
        return replace(self, analog_phases=phases)


@dataclass(frozen=True)
class FullyConnectedBeamformer:
    """Fully-connected variant: every chain reaches every antenna."""

    analog_phases: np.ndarray  # (n_antennas, n_chains)
    digital: np.ndarray        # (n_chains, n_users)
    power_budget: float

    def analog(self):
        return FullyConnectedAnalog(self.analog_phases)

    @property
    def transmit_power(self):
        return float(
            np.sum(np.abs(self.analog().matrix @ self.digital) ** 2)
        )

    def with_digital(self, digital):
        return replace(self, digital=digital)

    def with_phases(self, phases):
        return replace(self, analog_phases=phases)


@dataclass
class PenaltyState:
    """Penalty weight and inner budget for the analog subproblem."""

    eta: float
    inner_iterations: int = 10

    def grown(self, factor, cap):
        return PenaltyState(min(self.eta * factor, cap), self.inner_iterations)


def _effective(channels, beamformer):
    """(K, K) effective gains: entry (k, k') = h_k^H W_A w_k'."""
    xi = beamformer.analog().adjoint_matrix(channels)
    return xi.conj() @ beamformer.digital


def update_slack(channels, beamformer, noise_powers):
    """Closed-form refresh of both slack blocks at the current beamformer."""
    e = _effective(channels, beamformer)
    power = np.abs(e) ** 2
    desired = np.diag(power)
    b = np.asarray(noise_powers) + power.sum(axis=1)
    gamma = desired / (b - desired)
    omega = np.diag(e) / b
    return SlackState(gamma=gamma, omega=omega)


def surrogate_value(channels, beamformer, slack, noise_powers):
    """Full surrogate in nats, constant slack-only terms included."""
    e = _effective(channels, beamformer)
    a = np.diag(e)
    b = np.asarray(noise_powers) + np.sum(np.abs(e) ** 2, axis=1)
    gamma, omega = slack.gamma, slack.omega
    quad = 2.0 * np.real(np.conj(omega) * a) - np.abs(omega) ** 2 * b
    return float(np.sum(np.log1p(gamma) - gamma + (1.0 + gamma) * quad))


# ---------------------------------------------------------------------------
# Digital beamformer: quadratic program with a power ball, solved by a
# Lagrange multiplier found via bisection.
# ---------------------------------------------------------------------------

def _quadratic_power_solver(xi, mu, coef, budget, metric=None,
                            rel_tol=1e-6, max_iter=100):
    """Maximize sum_k 2 Re{beta_k^H w_k} - sum_k mu_k |xi_k^H w_k'|^2 under a
    power ball, where beta_k = coef_k * xi_k.

    ``metric`` is the Hermitian PD matrix defining the power
    ||w||_B^2 = w^H B w (identity when None). Returns (W, lam) with the power
    on the feasible side of the budget and, if lam > 0, active within
    ``rel_tol`` relative.
    """
    n = xi.shape[1]
    quad = (mu[:, None] * xi).T @ xi.conj()
    if metric is None:
        d, vecs = np.linalg.eigh(quad)
    else:
        d, vecs = eigh(quad, metric)
    d = np.clip(d, 0.0, None)
    beta = xi.T * coef  # (n, K), column k = coef_k * xi_k
    c = vecs.conj().T @ beta
    csq = np.sum(np.abs(c) ** 2, axis=1)

    def power(lam):
        denom = d + lam
        if lam == 0.0:
            out = np.zeros_like(csq)
            ok = denom > 0
            out[ok] = csq[ok] / denom[ok] ** 2
            if np.any(~ok & (csq > 0)):
                return np.inf
            return float(np.sum(out))
        return float(np.sum(csq / denom ** 2))

    def solution(lam):
        denom = d + lam
        scale = np.zeros_like(denom)
        ok = denom > 0
        scale[ok] = 1.0 / denom[ok]
        return vecs @ (c * scale[:, None])

    if power(0.0) <= budget * (1.0 + 1e-12):
        return solution(0.0), 0.0

    lam_lo, lam_hi = 0.0, 1.0
    guard = 0
    while power(lam_hi) > budget:
        lam_lo = lam_hi
        lam_hi *= 2.0
        guard += 1
        if guard > 2000:
            raise FloatingPointError("failed to bracket the power multiplier")
    for _ in range(max_iter):
        if budget - power(lam_hi) <= rel_tol * budget:
            break
        mid = 0.5 * (lam_lo + lam_hi)
        if power(mid) > budget:
            lam_lo = mid
        else:
            lam_hi = mid
    return solution(lam_hi), lam_hi


def solve_digital(channels, beamformer, slack, noise_powers=None,
                  rel_tol=1e-6, max_iter=100):
    """Optimal digital matrix for fixed analog phases, centers, and slack.

    Returns (digital, lam). For the sub-connected structure the power
    constraint decouples from the analog phases; the fully-connected variant
    keeps the analog Gram matrix in the power metric.
    """
    xi = beamformer.analog().adjoint_matrix(channels)
    mu = slack.weights
    coef = (1.0 + slack.gamma) * slack.omega
    if isinstance(beamformer, FullyConnectedBeamformer):
        w_a = beamformer.analog().matrix
        metric = w_a.conj().T @ w_a
        # Random unit-modulus columns are independent almost surely, but make
        # the factorization safe anyway.
        try:
            np.linalg.cholesky(metric)
        except np.linalg.LinAlgError:
            metric = metric + 1e-12 * np.trace(metric).real * np.eye(
                metric.shape[0]
            )
        budget = beamformer.power_budget
        return _quadratic_power_solver(
            xi, mu, coef, budget, metric=metric,
            rel_tol=rel_tol, max_iter=max_iter,
        )
    budget = beamformer.power_budget / beamformer.analog_phases.shape[1]
    return _quadratic_power_solver(
        xi, mu, coef, budget, rel_tol=rel_tol, max_iter=max_iter
    )


# ---------------------------------------------------------------------------
# Analog beamformer: penalty method alternating a relaxed linear solve with
# the unit-modulus phase projection.
# ---------------------------------------------------------------------------

def _unit_projection(phi):
    """Nearest unit-modulus vector; zero entries map to 1 for determinism."""
    mag = np.abs(phi)
    out = np.ones_like(phi)
    nz = mag > 0
    out[nz] = phi[nz] / mag[nz]
    return out


def analog_objective(h_flat, weights, beta0, p):
    """Data part of the analog objective at phases p (phi = p, no penalty)."""
    cross = h_flat.conj() @ p
    return float(
        -np.sum(weights * np.abs(cross) ** 2) + 2.0 * np.real(beta0.conj() @ p)
    )


def penalty_objective(h_flat, weights, beta0, eta, phi, p):
    """Penalized analog objective for a relaxed phi and unit-modulus p."""
    cross = h_flat.conj() @ phi
    data = -np.sum(weights * np.abs(cross) ** 2) + 2.0 * np.real(
        beta0.conj() @ phi
    )
    return float(data - eta * np.sum(np.abs(phi - p) ** 2))


def _alternate_penalty(h_flat, weights, beta0, eta, p0, inner, history=None):
    dim = h_flat.shape[1]
    quad = (weights[:, None] * h_flat).T @ h_flat.conj()
    quad[np.diag_indices(dim)] += eta
    factor = cho_factor(quad)
    p = p0
    phi = p0
    for _ in range(inner):
        phi = cho_solve(factor, beta0 + eta * p)
        p = _unit_projection(phi)
        if history is not None:
            history.append((phi.copy(), p.copy()))
    return phi, p


def _analog_targets_sub(channels, digital, slack):
    n_users, n_ant = channels.shape
    n_chains = digital.shape[0]
    per = n_ant // n_chains
    resh = channels.reshape(n_users, n_chains, per)
    # Block j of h~_{k,k'} is conj(w_{k',j}) times block j of h_k, so that
    # h~_{k,k'}^H p equals h_k^H W_A w_k'.
    h_t = (
        np.conj(digital.T)[None, :, :, None] * resh[:, None, :, :]
    ).reshape(n_users, n_users, n_ant)
    coef = (1.0 + slack.gamma) * slack.omega
    beta0 = np.einsum("k,kn->n", coef, h_t[np.arange(n_users), np.arange(n_users)])
    weights = np.repeat(slack.weights, n_users)
    return h_t.reshape(n_users * n_users, n_ant), weights, beta0


def _analog_targets_full(channels, digital, slack):
    n_users, n_ant = channels.shape
    n_chains = digital.shape[0]
    # Chain-major stacking of W_A columns: block r of h~_{k,k'} is
    # conj(w_{k',r}) h_k.
    h_t = (
        np.conj(digital.T)[None, :, :, None] * channels[:, None, None, :]
    ).reshape(n_users, n_users, n_chains * n_ant)
    coef = (1.0 + slack.gamma) * slack.omega
    beta0 = np.einsum("k,kn->n", coef, h_t[np.arange(n_users), np.arange(n_users)])
    weights = np.repeat(slack.weights, n_users)
    return h_t.reshape(n_users * n_users, n_chains * n_ant), weights, beta0


def initial_penalty_weight(channels, beamformer, slack, scale=1e-2):
    """Scale-relative starting penalty so the quadratic data term is not
    swamped before the schedule grows it."""
    if isinstance(beamformer, FullyConnectedBeamformer):
        h_flat, weights, _ = _analog_targets_full(
            channels, beamformer.digital, slack
        )
    else:
        h_flat, weights, _ = _analog_targets_sub(
            channels, beamformer.digital, slack
        )
    n_users = len(slack.gamma)
    diag_idx = np.arange(n_users) * n_users + np.arange(n_users)
    own = np.sum(
        slack.weights * np.sum(np.abs(h_flat[diag_idx]) ** 2, axis=1)
    )
    eta = scale * own / h_flat.shape[1]
    return float(eta) if eta > 0 else 1e-12


def solve_analog(channels, beamformer, slack, eta, inner_iterations=10,
                 history=None):
    """Penalty-method analog update; returns phases, never worse than the
    current ones under the analog block objective.

    The relaxed vector and the unit-modulus projection are alternated for the
    configured budget; the penalized objective is non-decreasing across those
    alternations. The final candidate is kept only if the unpenalized block
    objective did not decrease, which preserves the monotonicity of the outer
    loop.
    """
    if eta <= 0:
        raise ConfigurationError("penalty weight must be positive")
    full = isinstance(beamformer, FullyConnectedBeamformer)
    if full:
        h_flat, weights, beta0 = _analog_targets_full(
            channels, beamformer.digital, slack
        )
        p0 = np.exp(1j * beamformer.analog_phases).T.ravel()
    else:
        h_flat, weights, beta0 = _analog_targets_sub(
            channels, beamformer.digital, slack
        )
        p0 = np.exp(1j * beamformer.analog_phases).ravel()
    _, p = _alternate_penalty(
        h_flat, weights, beta0, eta, p0, inner_iterations, history=history
    )
    if analog_objective(h_flat, weights, beta0, p) < analog_objective(
        h_flat, weights, beta0, p0
    ):
        return beamformer.analog_phases
    new_phases = np.mod(np.angle(p), 2.0 * np.pi)
    if full:
        return new_phases.reshape(beamformer.analog_phases.shape[::-1]).T
    return new_phases.reshape(beamformer.analog_phases.shape)


# ---------------------------------------------------------------------------
# Beamformer snapshot serialization
# ---------------------------------------------------------------------------

def beamformer_to_dict(beamformer):
    structure = (
        "fully-connected"
        if isinstance(beamformer, FullyConnectedBeamformer)
        else "sub-connected"
    )
    return {
        "structure": structure,
        "analog_shape": list(np.asarray(beamformer.analog_phases).shape),
        "analog_phases": np.asarray(beamformer.analog_phases).tolist(),
        "digital_shape": list(beamformer.digital.shape),
        "digital": {
            "real": beamformer.digital.real.tolist(),
            "imag": beamformer.digital.imag.tolist(),
        },
        "power_budget_w": beamformer.power_budget,
    }


def beamformer_from_dict(doc):
    digital = np.asarray(doc["digital"]["real"], dtype=float) + 1j * np.asarray(
        doc["digital"]["imag"], dtype=float
    )
    phases = np.asarray(doc["analog_phases"], dtype=float)
    cls = (
        FullyConnectedBeamformer
        if doc["structure"] == "fully-connected"
        else HybridBeamformer
    )
    return cls(
        analog_phases=phases,
        digital=digital,
        power_budget=float(doc["power_budget_w"]),
    )


def save_beamformer(beamformer, path):
    with open(path, "w") as fh:
        json.dump(beamformer_to_dict(beamformer), fh, indent=1)


def load_beamformer(path):
    with open(path) as fh:
        return beamformer_from_dict(json.load(fh))
