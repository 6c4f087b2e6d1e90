"""
Two-pointer and single-pointer weak-measurement simulation.

System ordering is system ⊗ pointer1 ⊗ pointer2. Pointers start in |↑x⟩
and are read out in the σz basis, index 0 being s = +1.
"""
import logging
from typing import Dict, Sequence, Tuple

import numpy as np

from models import (
    OUTCOME_PRODUCTS, DensityState, KrausChannel, Operator, OutcomeDistribution, PointerConfig, ProtocolRun
)
from operator_core import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, anticommutator, expectation, heisenberg_action

logger = logging.getLogger(__name__)

# Pointer observables (σ1, σ2) of the two single-pointer configurations
SINGLE_POINTER_CONFIGS: Dict[str, Tuple[np.ndarray, np.ndarray]] = {
    'A': ((SIGMA_Z - SIGMA_X) / np.sqrt(2.0), (SIGMA_Z + SIGMA_X) / np.sqrt(2.0)),
    'B': ((SIGMA_Z + SIGMA_X) / np.sqrt(2.0), (-SIGMA_Z + SIGMA_X) / np.sqrt(2.0)),
}


def _functions_of(matrix: np.ndarray, angle: float) -> Tuple[np.ndarray, np.ndarray]:
    """cos(angle·A) and sin(angle·A) for Hermitian A via its eigendecomposition"""
    values, vectors = np.linalg.eigh(matrix)
    cos = (vectors * np.cos(angle * values)) @ vectors.conj().T
    sin = (vectors * np.sin(angle * values)) @ vectors.conj().T
    return cos, sin


def _coupling(matrix: np.ndarray, angle: float, pointer_obs: np.ndarray) -> np.ndarray:
    """exp(−i·angle·A⊗P) for an involutory pointer observable P"""
    cos, sin = _functions_of(matrix, angle)
    return np.kron(cos, np.eye(pointer_obs.shape[0])) - 1j * np.kron(sin, pointer_obs)


def coupling_unitary(obs: Operator, config: PointerConfig) -> Operator:
    """exp(−i(ε/2)·B⊗σy) on system ⊗ pointer"""
    if not obs.hermitian:
        raise ValueError("Pointer coupling requires a Hermitian observable")
    return Operator(entries=_coupling(obs.entries, config.epsilon / 2.0, SIGMA_Y))


def _pointer_state(config: PointerConfig, count: int) -> np.ndarray:
    state = np.ones((1, 1), dtype=complex)
    for _ in range(count):
        state = np.kron(state, config.pointer_init)
    return state


def _evolve_system(channel: KrausChannel, joint: np.ndarray, ancilla_dim: int) -> np.ndarray:
    """(Λ ⊗ id) on a system ⊗ ancilla density matrix"""
    extended = np.stack([np.kron(k, np.eye(ancilla_dim)) for k in channel.matrices])
    return np.einsum('kij,jl,kml->im', extended, joint, extended.conj())


def run_two_pointer(run: ProtocolRun) -> OutcomeDistribution:
    """Exact joint distribution of the two pointer readouts"""
    dim = run.dim
    eps = run.config.epsilon
    joint = np.kron(run.state.matrix, _pointer_state(run.config, 2))

    first = np.kron(_coupling(run.obs_early.entries, eps / 2.0, SIGMA_Y), IDENTITY_2)
    joint = first @ joint @ first.conj().T

    joint = _evolve_system(run.channel, joint, 4)

    second = _coupling(run.obs_late.entries, eps / 2.0, np.kron(IDENTITY_2, SIGMA_Y))
    joint = second @ joint @ second.conj().T

    tensor = joint.reshape(dim, 2, 2, dim, 2, 2)
    probs = np.real(np.einsum('sabsab->ab', tensor)).reshape(4)
    marginal = np.einsum('sabtab->st', tensor)
    post_state = DensityState.from_matrix(0.5 * (marginal + marginal.conj().T))
    return OutcomeDistribution(probs=probs, post_state=post_state)


def product_expectation(dist: OutcomeDistribution) -> float:
    """⟨s1·s2⟩"""
    return float(np.dot(dist.probs, OUTCOME_PRODUCTS))


def product_variance(dist: OutcomeDistribution) -> float:
    """Var(s1·s2)"""
    mean = product_expectation(dist)
    return float(np.dot(dist.probs, OUTCOME_PRODUCTS ** 2) - mean ** 2)


def sample_products(dist: OutcomeDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n readout products s1·s2 from an exact distribution"""
    if n < 1:
        raise ValueError(f"Number of trials must be at least 1, got {n}")
    outcomes = rng.choice(4, size=n, p=dist.sampling_probs)
    return OUTCOME_PRODUCTS[outcomes].astype(np.int8)


def sample_trials(run: ProtocolRun, n: int, seed: int) -> np.ndarray:
    """n independent s1·s2 products, each from a fresh copy of the state"""
    if n < 1:
        raise ValueError(f"Number of trials must be at least 1, got {n}")
    return sample_products(run_two_pointer(run), n, np.random.default_rng(seed))


def back_action(run: ProtocolRun) -> float:
    """Trace distance between ρ and the system state after the first coupling"""
    cos, sin = _functions_of(run.obs_early.entries, run.config.epsilon / 2.0)
    rho = run.state.matrix
    disturbed = cos @ rho @ cos + sin @ rho @ sin
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(disturbed - rho))))


def anticommutator_expectation(run: ProtocolRun) -> float:
    """Tr(ρ{B_i(t1), B_j(t2)})"""
    late = heisenberg_action(run.channel, run.obs_late.entries)
    early = run.obs_early.entries
    return expectation(run.state, anticommutator(early, late))


def systematic_f(run: ProtocolRun) -> float:
    """Signed ε⁴ coefficient of ⟨s1·s2⟩"""
    rho = run.state.matrix
    b = run.obs_early.entries
    b2 = b @ b
    b3 = b2 @ b
    late = heisenberg_action(run.channel, run.obs_late.entries)
    late_cubed = heisenberg_action(run.channel, np.linalg.matrix_power(run.obs_late.entries, 3))

    def tr(matrix: np.ndarray) -> float:
        return float(np.real(np.trace(rho @ matrix)))

    bracket = (
        tr(b3 @ late + late @ b3) / 48.0
        + tr(b @ late_cubed + late_cubed @ b) / 12.0
        + tr(b2 @ late @ b + b @ late @ b2) / 16.0
    )
    return -bracket


def single_pointer_expectation(run: ProtocolRun, configuration: str) -> float:
    """⟨σz⟩ of one pointer coupled to B_i at t1 and to B_j at t2"""
    sigma_1, sigma_2 = SINGLE_POINTER_CONFIGS[configuration]
    eps = run.config.epsilon
    joint = np.kron(run.state.matrix, run.config.pointer_init)

    first = _coupling(run.obs_early.entries, -eps, sigma_2)
    joint = first @ joint @ first.conj().T
    joint = _evolve_system(run.channel, joint, 2)
    second = _coupling(run.obs_late.entries, eps, sigma_1)
    joint = second @ joint @ second.conj().T

    pointer = np.einsum('sasb->ab', joint.reshape(run.dim, 2, run.dim, 2))
    return float(np.real(np.trace(pointer @ SIGMA_Z)))


def single_pointer_expectations(run: ProtocolRun) -> Tuple[float, float]:
    """(E1, E2) of the two single-pointer configurations"""
    return single_pointer_expectation(run, 'A'), single_pointer_expectation(run, 'B')


def sample_single_pointer(expectations: Sequence[float], n: int,
                          rngs: Sequence[np.random.Generator]) -> Tuple[np.ndarray, np.ndarray]:
    """n ±1 readouts for each configuration, each ensemble drawn from its own stream"""
    if n < 1:
        raise ValueError(f"Number of trials must be at least 1, got {n}")
    draws = []
    for value, rng in zip(expectations, rngs):
        p_plus = float(np.clip((1.0 + value) / 2.0, 0.0, 1.0))
        draws.append(np.where(rng.random(n) < p_plus, 1, -1).astype(np.int8))
    return draws[0], draws[1]
