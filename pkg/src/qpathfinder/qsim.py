"""Statevector QAOA for diagonal cost Hamiltonians with the transverse-field mixer.

Basis index bit k is qubit k (same convention as :mod:`qpathfinder.encode`).
Parameter vectors are laid out as ``(gamma_1..gamma_p, beta_1..beta_p)``.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .ansatz import QaoaAnsatz
from .encode import IsingModel, ising_energies

MAX_QUBITS = 24


class SimulationError(ValueError):
    pass


def energy_table(im: IsingModel) -> np.ndarray:
    """Diagonal energies of an Ising model, one entry per basis state."""
    return ising_energies(im)


def initial_state(n: int, qubit_cap: int = 20) -> np.ndarray:
    if not 1 <= n <= min(qubit_cap, MAX_QUBITS):
        raise SimulationError(f"qubit count {n} outside [1, {qubit_cap}]")
    dim = 1 << n
    return np.full(dim, dim ** -0.5, dtype=complex)


def _check_dims(state, table):
    if state.shape[0] != len(table):
        raise SimulationError(f"state dimension {state.shape[0]} != table size {len(table)}")


def apply_cost_phase(state: np.ndarray, table, gamma: float) -> np.ndarray:
    _check_dims(state, table)
    return state * np.exp(-1j * gamma * np.asarray(table))


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    """exp(-i beta X) on every qubit."""
    dim = state.shape[0]
    n = dim.bit_length() - 1
    c, s = np.cos(beta), -1j * np.sin(beta)
    psi = state.copy()
    for k in range(n):
        v = psi.reshape(-1, 2, 1 << k)
        a0 = v[:, 0, :].copy()
        a1 = v[:, 1, :]
        v[:, 0, :] = c * a0 + s * a1
        v[:, 1, :] = s * a0 + c * a1
    return psi


def split_params(params, p: int) -> tuple[np.ndarray, np.ndarray]:
    params = np.asarray(params, dtype=float).ravel()
    if params.shape[0] != 2 * p:
        raise SimulationError(f"expected {2 * p} parameters for p={p}, got {params.shape[0]}")
    return params[:p], params[p:]


def qaoa_state(ansatz: QaoaAnsatz, params, table=None) -> np.ndarray:
    if table is None:
        table = energy_table(ansatz.ising)
    gammas, betas = split_params(params, ansatz.p)
    psi = initial_state(ansatz.n, qubit_cap=MAX_QUBITS)
    for g, b in zip(gammas, betas):
        psi = apply_cost_phase(psi, table, g)
        psi = apply_mixer(psi, b)
    return psi


def probabilities(state: np.ndarray) -> np.ndarray:
    return state.real ** 2 + state.imag ** 2


def expectation(state: np.ndarray, table) -> float:
    _check_dims(state, table)
    return float(probabilities(state) @ np.asarray(table))


def sample(state: np.ndarray, shots: int, seed: Optional[int] = None) -> dict[int, int]:
    if shots < 1:
        raise SimulationError(f"shots must be >= 1, got {shots}")
    probs = probabilities(state)
    probs = probs / probs.sum()
    counts = np.random.default_rng(seed).multinomial(shots, probs)
    nz = np.flatnonzero(counts)
    return {int(i): int(counts[i]) for i in nz}


def feasible_probability(state: np.ndarray, decoder: Callable[[int], object]) -> float:
    """Probability mass on basis states the decoder accepts (returns non-None)."""
    probs = probabilities(state)
    return float(sum(probs[z] for z in range(len(probs)) if decoder(z) is not None))


def mass_on(state: np.ndarray, indices) -> float:
    """Probability mass on an explicit index set; fast path for known feasible sets."""
    idx = np.asarray(indices, dtype=np.int64)
    return float(probabilities(state)[idx].sum()) if idx.size else 0.0


class QaoaEnergy:
    """Callable θ -> ⟨H⟩ with the energy table computed once."""

    def __init__(self, ansatz: QaoaAnsatz):
        self.ansatz = ansatz
        self.table = energy_table(ansatz.ising)

    def state(self, params) -> np.ndarray:
        return qaoa_state(self.ansatz, params, self.table)

    def __call__(self, params) -> float:
        return expectation(self.state(params), self.table)
