"""
Operator bases, structure constants, states and channel primitives
"""
import logging
from itertools import combinations
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import expm
from scipy.stats import unitary_group

from exceptions import DimensionMismatchError
from models import (
    BasisName, DensityState, KrausChannel, Operator, OperatorBasis, StructureTensors
)
from tomography_config import tomography_config

logger = logging.getLogger(__name__)

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_AXES = {'x': SIGMA_X, 'y': SIGMA_Y, 'z': SIGMA_Z}

SeedLike = Union[None, int, np.random.Generator]


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# Bases

def pauli_basis() -> OperatorBasis:
    """{1, σx, σy, σz}/√2, orthonormal under the trace inner product"""
    elements = [Operator.hermitian_from(m / np.sqrt(2.0)) for m in (IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z)]
    return OperatorBasis(dim=2, elements=elements, name=BasisName.PAULI.value)


def gell_mann_matrices(dim: int) -> List[np.ndarray]:
    """Unnormalised generalised Gell-Mann matrices, identity first.

    Order: identity, then for each pair k<l the symmetric and antisymmetric
    off-diagonal matrices, then the diagonal ones. For dim=2 this is
    (1, σx, σy, σz).
    """
    if dim < 2:
        raise ValueError(f"Gell-Mann basis needs dimension >= 2, got {dim}")
    matrices = [np.eye(dim, dtype=complex)]
    for k, l in combinations(range(dim), 2):
        symmetric = np.zeros((dim, dim), dtype=complex)
        symmetric[k, l] = symmetric[l, k] = 1.0
        antisymmetric = np.zeros((dim, dim), dtype=complex)
        antisymmetric[k, l] = -1j
        antisymmetric[l, k] = 1j
        matrices.extend([symmetric, antisymmetric])
    for j in range(1, dim):
        diagonal = np.zeros(dim, dtype=complex)
        diagonal[:j] = 1.0
        diagonal[j] = -j
        matrices.append(np.sqrt(2.0 / (j * (j + 1))) * np.diag(diagonal))
    return matrices


def gell_mann_basis(dim: int) -> OperatorBasis:
    """Gell-Mann basis scaled to Tr(B_a B_b) = δ_ab, so B_0 = 1/√D"""
    matrices = gell_mann_matrices(dim)
    elements = [Operator.hermitian_from(matrices[0] / np.sqrt(dim))]
    elements += [Operator.hermitian_from(m / np.sqrt(2.0)) for m in matrices[1:]]
    return OperatorBasis(dim=dim, elements=elements, name=BasisName.GELL_MANN.value)


def basis_for(name: BasisName, dim: int) -> OperatorBasis:
    if name == BasisName.PAULI:
        if dim != 2:
            raise DimensionMismatchError(f"Pauli basis is only defined for D=2, got D={dim}")
        return pauli_basis()
    return gell_mann_basis(dim)


def structure_tensors(basis: OperatorBasis) -> StructureTensors:
    """f_abc = −(i/c)Tr([B_a,B_b]B_c), g_abc = (1/c)Tr({B_a,B_b}B_c)"""
    stack = basis.matrices
    # triple[a,b,c] = Tr(B_a B_b B_c)
    triple = np.einsum('aij,bjk,cki->abc', stack, stack, stack)
    commutator = triple - triple.transpose(1, 0, 2)
    anticommutator = triple + triple.transpose(1, 0, 2)
    f = -1j * commutator / basis.normalization
    g = anticommutator / basis.normalization
    leak = max(float(np.max(np.abs(f.imag))), float(np.max(np.abs(g.imag))))
    if leak > tomography_config.structure_tol:
        raise ValueError(f"Structure constants have imaginary parts up to {leak:.3e}")
    return StructureTensors(f=f.real, g=g.real)


def basis_coefficients(basis: OperatorBasis, matrix: np.ndarray) -> np.ndarray:
    """Complex coefficients c_a = Tr(B_a A)/c of A in the basis"""
    return np.einsum('aij,ji->a', basis.matrices, matrix) / basis.normalization


def from_coefficients(basis: OperatorBasis, coefficients: np.ndarray) -> np.ndarray:
    return np.einsum('a,aij->ij', coefficients, basis.matrices)


# Expectations

def expectation(state: DensityState, matrix: np.ndarray) -> float:
    """Re Tr(ρ A)"""
    return float(np.real(np.trace(state.matrix @ matrix)))


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


# Channel application

def _check_dims(ch: KrausChannel, dim: int, what: str) -> None:
    if ch.dim != dim:
        raise DimensionMismatchError(f"Channel acts on D={ch.dim} but {what} has D={dim}")


def channel_action(ch: KrausChannel, matrix: np.ndarray) -> np.ndarray:
    """Σ K A K† on an arbitrary matrix, without state validation"""
    kraus = ch.matrices
    return np.einsum('kij,jl,kml->im', kraus, matrix, kraus.conj())


def heisenberg_action(ch: KrausChannel, matrix: np.ndarray) -> np.ndarray:
    """Σ K† A K on an arbitrary matrix"""
    kraus = ch.matrices
    return np.einsum('kji,jl,klm->im', kraus.conj(), matrix, kraus)


def apply_channel(ch: KrausChannel, rho: DensityState) -> DensityState:
    """Schrödinger picture: ρ' = Σ K ρ K†"""
    _check_dims(ch, rho.dim, "state")
    output = channel_action(ch, rho.matrix)
    return DensityState.from_matrix(0.5 * (output + output.conj().T))


def heisenberg_apply(ch: KrausChannel, obs: Operator) -> Operator:
    """Heisenberg picture: O(t) = Σ K† O K"""
    _check_dims(ch, obs.dim, "observable")
    output = heisenberg_action(ch, obs.entries)
    if obs.hermitian:
        output = 0.5 * (output + output.conj().T)
    return Operator(entries=output, hermitian=obs.hermitian)


def channel_action_error(a: KrausChannel, b: KrausChannel) -> float:
    """Largest ‖Λa(E_kl) − Λb(E_kl)‖ over the matrix units E_kl"""
    _check_dims(a, b.dim, "reference channel")
    dim = a.dim
    worst = 0.0
    for k in range(dim):
        for l in range(dim):
            unit = np.zeros((dim, dim), dtype=complex)
            unit[k, l] = 1.0
            diff = channel_action(a, unit) - channel_action(b, unit)
            worst = max(worst, float(np.linalg.norm(diff, ord=2)))
    return worst


# Channel factory

def unitary_channel(unitary: np.ndarray) -> KrausChannel:
    unitary = np.asarray(unitary, dtype=complex)
    return KrausChannel.from_matrices([unitary])


def identity_channel(dim: int) -> KrausChannel:
    return unitary_channel(np.eye(dim))


def phase_damping(p: float) -> KrausChannel:
    """Qubit dephasing: coherences scale by 1 − p"""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Phase damping p must lie in [0, 1], got {p}")
    return KrausChannel.from_matrices([
        np.sqrt(1.0 - p / 2.0) * IDENTITY_2,
        np.sqrt(p / 2.0) * SIGMA_Z,
    ])


def amplitude_damping(gamma: float) -> KrausChannel:
    """Qubit decay |1⟩ → |0⟩ with probability γ"""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"Amplitude damping γ must lie in [0, 1], got {gamma}")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return KrausChannel.from_matrices([k0, k1])


def depolarizing(p: float, dim: int = 2) -> KrausChannel:
    """ρ → (1 − p)ρ + p·1/D"""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Depolarizing p must lie in [0, 1], got {p}")
    basis = gell_mann_basis(dim)
    matrices = [np.sqrt(1.0 - p + p / dim ** 2) * np.eye(dim, dtype=complex)]
    matrices += [np.sqrt(p / dim) * element.entries for element in basis.observables]
    return KrausChannel.from_matrices(matrices)


def rotation_channel(axis: str, angle: float) -> KrausChannel:
    """Unitary exp(−i·angle/2·σ_axis)"""
    if axis not in PAULI_AXES:
        raise ValueError(f"Rotation axis must be one of x, y, z, got {axis!r}")
    return unitary_channel(expm(-0.5j * angle * PAULI_AXES[axis]))


def random_channel(dim: int, seed: SeedLike = None, env_dim: Optional[int] = None) -> KrausChannel:
    """Haar-random unitary on system⊗environment, environment traced out"""
    env = dim if env_dim is None else env_dim
    rng = _rng(seed)
    unitary = unitary_group.rvs(dim * env, random_state=rng)
    blocks = unitary.reshape(dim, env, dim, env)
    return KrausChannel.from_matrices([blocks[:, k, :, 0] for k in range(env)])


# State factory

def maximally_mixed(dim: int) -> DensityState:
    return DensityState.from_matrix(np.eye(dim) / dim)


def pure_state(ket: Sequence[complex]) -> DensityState:
    vector = np.asarray(ket, dtype=complex)
    vector = vector / np.linalg.norm(vector)
    return DensityState.from_matrix(np.outer(vector, vector.conj()))


def thermal_state(beta: float, dim: int = 2, omega: float = 1.0) -> DensityState:
    """exp(−βH)/Z with H = ω/2·σz for qubits, H = ω·diag(0…D−1) otherwise"""
    if dim == 2:
        energies = np.array([0.5 * omega, -0.5 * omega])
    else:
        energies = omega * np.arange(dim, dtype=float)
    weights = np.exp(-beta * (energies - energies.min()))
    return DensityState.from_matrix(np.diag(weights / weights.sum()))


def random_state(dim: int, seed: SeedLike = None, floor: float = 0.05) -> DensityState:
    """Random full-rank state with every eigenvalue at least floor"""
    if floor * dim >= 1.0:
        raise ValueError(f"Eigenvalue floor {floor} is too large for D={dim}")
    rng = _rng(seed)
    weights = rng.dirichlet(np.ones(dim))
    eigenvalues = floor + (1.0 - floor * dim) * weights
    unitary = unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.eye(1)
    return DensityState.from_matrix(unitary @ np.diag(eigenvalues) @ unitary.conj().T)


def random_singular_state(dim: int, seed: SeedLike = None, rank: Optional[int] = None) -> DensityState:
    """Random state with at least one zero eigenvalue"""
    rng = _rng(seed)
    r = dim - 1 if rank is None else rank
    if not 1 <= r < dim:
        raise ValueError(f"Singular state rank must lie in [1, {dim - 1}], got {r}")
    eigenvalues = np.zeros(dim)
    eigenvalues[:r] = rng.dirichlet(np.ones(r))
    unitary = unitary_group.rvs(dim, random_state=rng)
    return DensityState.from_matrix(unitary @ np.diag(eigenvalues) @ unitary.conj().T)


def parse_state_matrix(text: str) -> DensityState:
    """Parse 'a,b;c,d' (Python complex literals allowed) into a state"""
    try:
        rows = [[complex(item.strip().replace(' ', '')) for item in row.split(',')] for row in text.split(';')]
        return DensityState.from_matrix(np.array(rows, dtype=complex))
    except ValueError as e:
        logger.error(f"[STATE] Could not parse state matrix {text!r}: {e}")
        raise
