"""Analog beamforming operators built from phase-shifter phases.

The sub-connected network maps each RF chain to one sub-array, giving a
block-diagonal tall matrix whose blocks are the per-sub-array unit-modulus
vectors; products are evaluated without materializing the (N x n_chains)
matrix. The fully-connected variant keeps an explicit dense matrix with every
entry unit modulus.
"""

import numpy as np

__all__ = ["BlockDiagonalAnalog", "FullyConnectedAnalog", "apply_block_structure"]


class BlockDiagonalAnalog:
    """Sub-connected analog operator from per-sub-array phases.

    ``phases`` has shape (n_subarrays, per_subarray); entry order within a
    block follows the antenna offset convention (second index fastest).
    """

    def __init__(self, phases):
        phases = np.asarray(phases, dtype=float)
        if phases.ndim != 2:
            raise ValueError("phases must be (n_subarrays, per_subarray)")
        self.phases = phases
        self.blocks = np.exp(1j * phases)
        self.n_subarrays, self.per_subarray = phases.shape
        self.n_chains = self.n_subarrays
        self.n_antennas = phases.size

    def apply(self, x):
        """W_A @ x for a digital-domain vector or (n_chains, K) matrix."""
        x = np.asarray(x)
        if x.ndim == 1:
            return (self.blocks * x[:, None]).ravel()
        return (self.blocks[:, :, None] * x[:, None, :]).reshape(
            self.n_antennas, -1
        )

    def adjoint(self, y):
        """W_A^H @ y for an antenna-domain vector."""
        y = np.asarray(y).reshape(self.n_subarrays, self.per_subarray)
        return np.sum(self.blocks.conj() * y, axis=1)

    def adjoint_matrix(self, rows):
        """Apply the adjoint to each row of a (K, N) matrix, returning (K, n_chains)."""
        r = np.asarray(rows).reshape(-1, self.n_subarrays, self.per_subarray)
        return np.sum(self.blocks.conj()[None] * r, axis=2)

    def dense(self):
        out = np.zeros((self.n_antennas, self.n_chains), dtype=complex)
        p = self.per_subarray
        for j in range(self.n_subarrays):
            out[j * p:(j + 1) * p, j] = self.blocks[j]
        return out

    def flat(self):
        """Stacked unit-modulus entries, one per antenna."""
        return self.blocks.ravel()


class FullyConnectedAnalog:
    """Dense analog operator: every chain reaches every antenna."""

    def __init__(self, phases):
        phases = np.asarray(phases, dtype=float)
        if phases.ndim != 2:
            raise ValueError("phases must be (n_antennas, n_chains)")
        self.phases = phases
        self.matrix = np.exp(1j * phases)
        self.n_antennas, self.n_chains = phases.shape

    def apply(self, x):
        return self.matrix @ np.asarray(x)

    def adjoint(self, y):
        return self.matrix.conj().T @ np.asarray(y)

    def adjoint_matrix(self, rows):
        return np.asarray(rows) @ self.matrix.conj()

    def dense(self):
        return self.matrix.copy()


def apply_block_structure(phases, geometry):
    """Sub-connected analog operator for ``phases`` laid out per sub-array."""
    phases = np.asarray(phases, dtype=float).reshape(
        geometry.n_subarrays, geometry.per_subarray
    )
    return BlockDiagonalAnalog(phases)
