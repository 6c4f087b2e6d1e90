"""
Channel reconstruction from temporal covariances.

Pipeline: σ(t,t0), σ(t0,t0) → M → χ → gram matrix U → Kraus operators.
Bases are assumed orthonormal (Tr(B_a B_b) = δ_ab) with B_0 = 1/√D.
"""
import logging
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from covariance_estimator import CovariancePair, exact_covariances, sampled_covariances
from exceptions import DimensionMismatchError, NotCompletelyPositiveError, ReconstructionError, SingularStateError
from models import (
    AffineDynamics, Budget, DensityState, GramMatrix, KrausChannel, MeasurementMode, OperatorBasis,
    ProvenanceKind, ReconstructionDiagnostics, ReconstructionResult, SolverKind, StructureTensors,
    TemporalCovariance
)
from operator_core import (
    basis_coefficients, channel_action_error, from_coefficients, heisenberg_action, pauli_basis, structure_tensors
)
from tomography_config import tomography_config

logger = logging.getLogger(__name__)

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_j, _i, _k] = -1.0


def affine_dynamics(channel, basis: OperatorBasis) -> AffineDynamics:
    """Exact (M, χ) of a channel: M_ij = Tr(B_j Λ†(B_i)), χ_i = Tr(Λ†(B_i))/D"""
    if channel.dim != basis.dim:
        raise DimensionMismatchError(f"Channel (D={channel.dim}) and basis (D={basis.dim}) disagree")
    ops = basis.matrices[1:]
    evolved = np.stack([heisenberg_action(channel, b) for b in ops])
    coefficients = np.real(np.array([basis_coefficients(basis, e) for e in evolved]))
    # Tr(B_0 A) = Tr(A)/√D
    return AffineDynamics(M=coefficients[:, 1:], chi=coefficients[:, 0] / np.sqrt(basis.dim))


def min_singular_value(cov: TemporalCovariance) -> float:
    return float(np.linalg.svd(cov.sigma, compute_uv=False)[-1])


def check_invertibility(cov: TemporalCovariance, tol: Optional[float] = None) -> bool:
    """True iff the smallest singular value of σ(t0,t0) exceeds tol"""
    if tol is None:
        exact = cov.provenance.kind == ProvenanceKind.EXACT
        tol = tomography_config.invertibility_tol if exact else tomography_config.sampled_invertibility_tol
    return min_singular_value(cov) > tol


def recover_M(cov_t: TemporalCovariance, cov_0: TemporalCovariance, tol: Optional[float] = None) -> np.ndarray:
    """M = σ(t,t0)·σ(t0,t0)⁻¹ via a linear solve"""
    if cov_t.dim_ops != cov_0.dim_ops:
        raise DimensionMismatchError(f"Covariances have sizes {cov_t.dim_ops} and {cov_0.dim_ops}")
    if not check_invertibility(cov_0, tol):
        smallest = min_singular_value(cov_0)
        logger.error(f"[RECON] Equal-time covariance is singular (σ_min={smallest:.3e})")
        raise SingularStateError(
            f"Equal-time covariance is singular (smallest singular value {smallest:.3e}): the state is "
            f"singular, it does not sample the whole Hilbert space and the evolution cannot be fully determined",
            min_singular_value=smallest,
        )
    late_early = cov_t.late_early
    # M σ00 = σ(t,t0)  ⇔  σ00ᵀ Mᵀ = σ(t,t0)ᵀ
    return linalg.solve(cov_0.sigma.T, late_early.T).T


def recover_chi(M: np.ndarray, mean_early: np.ndarray, mean_late: np.ndarray) -> np.ndarray:
    """χ = ⟨B(t)⟩ − M·⟨B(t0)⟩"""
    M = np.asarray(M, dtype=float)
    if M.shape != (len(mean_early), len(mean_early)) or len(mean_late) != len(mean_early):
        raise DimensionMismatchError(f"M shape {M.shape} does not match mean vectors")
    return np.asarray(mean_late, dtype=float) - M @ np.asarray(mean_early, dtype=float)


# Gram matrix

def _is_pauli(tensors: StructureTensors) -> bool:
    if tensors.size != 4:
        return False
    reference = structure_tensors(pauli_basis())
    tol = tomography_config.structure_tol
    return bool(np.max(np.abs(tensors.f - reference.f)) < tol and np.max(np.abs(tensors.g - reference.g)) < tol)


def qubit_gram(dyn: AffineDynamics) -> np.ndarray:
    """Closed-form gram matrix for the scaled Pauli basis"""
    M, chi = dyn.M, dyn.chi
    trace = np.trace(M)
    U = np.zeros((4, 4), dtype=complex)
    U[0, 0] = (1.0 + trace) / 2.0
    U[0, 1:] = chi / np.sqrt(2.0) + 0.5j * np.einsum('ijk,ij->k', LEVI_CIVITA, M)
    U[1:, 0] = U[0, 1:].conj()
    U[1:, 1:] = (
        0.5 * (M + M.T)
        - 0.5 * (trace - 1.0) * np.eye(3)
        + (1j / np.sqrt(2.0)) * np.einsum('klm,m->kl', LEVI_CIVITA, chi)
    )
    return U


def _hermitian_design(weights: np.ndarray) -> np.ndarray:
    """Columns of Re Σ W ⊙ H_k over a real basis H_k of Hermitian matrices"""
    n = weights.shape[1]
    columns = [weights[:, b, b].real for b in range(n)]
    for b in range(n):
        for c in range(b + 1, n):
            columns.append((weights[:, b, c] + weights[:, c, b]).real)
            columns.append(-(weights[:, b, c] - weights[:, c, b]).imag)
    return np.stack(columns, axis=1)


def _hermitian_from(x: np.ndarray, n: int) -> np.ndarray:
    U = np.zeros((n, n), dtype=complex)
    U[np.diag_indices(n)] = x[:n]
    position = n
    for b in range(n):
        for c in range(b + 1, n):
            U[b, c] = x[position] + 1j * x[position + 1]
            U[c, b] = x[position] - 1j * x[position + 1]
            position += 2
    return U


def general_gram(dyn: AffineDynamics, tensors: StructureTensors) -> Tuple[np.ndarray, float]:
    """Solve the D⁴ real linear system for U; returns (U, residual)"""
    n = tensors.size
    dim = tensors.dim
    if dyn.size != n - 1:
        raise DimensionMismatchError(f"Dynamics of size {dyn.size} do not match a basis of {n} elements")
    P = tensors.product
    # T[b,i,c,e] = Tr(B_e B_b B_i B_c)
    T = np.einsum('bid,dce->bice', P, P)
    k = n - 1
    m_weights = T[:, 1:, :, 1:].transpose(1, 3, 0, 2).reshape(k * k, n, n)
    chi_weights = T[:, 1:, :, 0].transpose(1, 0, 2) / np.sqrt(dim)
    completeness_weights = P.transpose(2, 0, 1)
    weights = np.concatenate([m_weights, chi_weights, completeness_weights])
    rhs = np.concatenate([dyn.M.reshape(-1), dyn.chi, np.sqrt(dim) * np.eye(n)[0]])

    design = _hermitian_design(weights)
    solution, _, rank, _ = linalg.lstsq(design, rhs)
    residual = float(np.linalg.norm(design @ solution - rhs))
    if rank < design.shape[1]:
        logger.error(f"[RECON] Gram system is rank deficient (rank {rank} of {design.shape[1]})")
        raise ReconstructionError(
            f"Gram linear system is rank deficient (rank {rank} of {design.shape[1]}, residual {residual:.3e})",
            residual=residual,
        )
    return _hermitian_from(solution, n), residual


def solve_gram(dyn: AffineDynamics, tensors: StructureTensors,
               solver: Optional[SolverKind] = None) -> Tuple[GramMatrix, SolverKind, float]:
    """Gram matrix U from (M, χ); the qubit closed form is used for the Pauli basis"""
    if solver is None:
        solver = SolverKind.QUBIT_CLOSED_FORM if _is_pauli(tensors) else SolverKind.LINEAR_SYSTEM
    if solver == SolverKind.QUBIT_CLOSED_FORM:
        if not _is_pauli(tensors):
            raise ReconstructionError("The qubit closed form requires the scaled Pauli basis")
        U, residual = qubit_gram(dyn), 0.0
    else:
        U, residual = general_gram(dyn, tensors)
    deviation = float(np.max(np.abs(U - U.conj().T)))
    if deviation > tomography_config.structure_tol:
        raise ReconstructionError(f"Gram matrix is not Hermitian (deviation {deviation:.3e})", residual=residual)
    return GramMatrix(U=U), solver, residual


def project_trace_preserving(matrices: np.ndarray) -> np.ndarray:
    """K_μ ← K_μ·S^(-1/2) with S = Σ K†K, the nearest rescaling with Σ K†K = 1"""
    completeness = np.einsum('mji,mjk->ik', matrices.conj(), matrices)
    values, vectors = linalg.eigh(completeness)
    if values[0] <= 1e-12 * max(1.0, float(values[-1])):
        logger.error(f"[RECON] Σ K†K is singular (λ_min={values[0]:.3e}); cannot restore trace preservation")
        raise ReconstructionError(f"Kraus completeness operator is singular (λ_min={values[0]:.3e})")
    inverse_root = (vectors / np.sqrt(values)) @ vectors.conj().T
    return matrices @ inverse_root


def kraus_from_gram(gram: GramMatrix, basis: OperatorBasis, clamp_tol: Optional[float] = None,
                    channel_tol: Optional[float] = None) -> Tuple[KrausChannel, int]:
    """
    K_μ = Σ_a u_aμ B_a with u_μ = √λ_μ·conj(v_μ); returns (channel, clamped count).

    Clamping negative eigenvalues breaks Σ K†K = 1, so a clamped set is rescaled back
    onto a trace-preserving map before validation.
    """
    clamp = tomography_config.clamp_tol if clamp_tol is None else clamp_tol
    tolerance = tomography_config.reconstructed_channel_tol if channel_tol is None else channel_tol
    values = gram.eigenvalues
    if values[-1] < -clamp:
        logger.error(f"[RECON] Gram eigenvalue {values[-1]:.3e} below clamp tolerance {clamp:.1e}")
        raise NotCompletelyPositiveError(float(values[-1]), clamp)
    negative = values < 0
    clamped = int(np.sum(negative))
    if clamped:
        mass = float(-np.sum(values[negative]))
        logger.warning(f"[RECON] Clamped {clamped} negative gram eigenvalue(s), smallest {values[-1]:.3e}, "
                       f"clamped mass {mass:.3e}")
    values = np.clip(values, 0.0, None)
    keep = values > 1e-12 * max(1.0, float(values[0]))
    coefficients = np.sqrt(values[keep]) * gram.eigenvectors[:, keep].conj()
    matrices = np.stack([from_coefficients(basis, column) for column in coefficients.T])
    completeness = np.einsum('mji,mjk->ik', matrices.conj(), matrices)
    defect = float(np.linalg.norm(completeness - np.eye(basis.dim), ord=2))
    if clamped or defect > tolerance:
        matrices = project_trace_preserving(matrices)
        logger.info(f"[RECON] Restored trace preservation (defect {defect:.3e} before rescaling)")
    return KrausChannel.from_matrices(matrices, tolerance=tolerance), clamped


# Pipeline

def reconstruct_from_covariances(cov_t: TemporalCovariance, cov_0: TemporalCovariance, basis: OperatorBasis,
                                 tensors: Optional[StructureTensors] = None, delta: Optional[float] = None,
                                 truth: Optional[KrausChannel] = None,
                                 m_true: Optional[np.ndarray] = None) -> ReconstructionResult:
    """Covariances → (M, χ) → gram → Kraus, with diagnostics"""
    exact = cov_t.provenance.kind == ProvenanceKind.EXACT
    tensors = structure_tensors(basis) if tensors is None else tensors
    clamp_tol = tomography_config.clamp_tol if exact else tomography_config.sampled_clamp_tol(delta)
    invertibility_tol = None if exact else tomography_config.sampled_invertibility_tol

    M = recover_M(cov_t, cov_0, invertibility_tol)
    chi = recover_chi(M, cov_t.mean_early, cov_t.mean_late)
    dynamics = AffineDynamics(M=M, chi=chi)
    gram, solver, residual = solve_gram(dynamics, tensors)
    channel, clamped = kraus_from_gram(gram, basis, clamp_tol)

    if m_true is None and truth is not None:
        m_true = affine_dynamics(truth, basis).M
    delta_spectral = delta_max = action_error = None
    if m_true is not None:
        difference = M - m_true
        delta_spectral = float(np.linalg.norm(difference, ord=2))
        delta_max = float(np.max(np.abs(difference)))
    if truth is not None:
        action_error = channel_action_error(channel, truth)

    diagnostics = ReconstructionDiagnostics(
        mode=cov_t.provenance.mode,
        solver=solver,
        min_singular_value=min_singular_value(cov_0),
        gram_eigenvalues=[float(v) for v in gram.eigenvalues],
        clamped_eigenvalues=clamped,
        completeness_defect=channel.completeness_defect,
        gram_residual=residual,
        delta_m_spectral=delta_spectral,
        delta_m_max=delta_max,
        action_error=action_error,
    )
    logger.debug(f"[RECON] Reconstructed rank-{channel.rank} channel, ΔM={delta_spectral}")
    return ReconstructionResult(dynamics=dynamics, channel=channel, diagnostics=diagnostics, m_true=m_true)


def reconstruct_channel(state: DensityState, channel_truth: KrausChannel, basis: OperatorBasis,
                        mode: MeasurementMode = MeasurementMode.EXACT, budget: Optional[Budget] = None,
                        seed: Optional[int] = None) -> ReconstructionResult:
    """End-to-end estimate of a channel from temporal correlations in the given state"""
    logger.info(f"[RECON] Reconstructing D={basis.dim} channel in {mode.value} mode")
    if mode == MeasurementMode.EXACT:
        covariances: CovariancePair = exact_covariances(state, channel_truth, basis)
        delta = None
    else:
        if budget is None or seed is None:
            raise ValueError("Sampled reconstruction needs a budget and a seed")
        covariances = sampled_covariances(state, channel_truth, basis, budget, seed, mode)
        delta = budget.delta
    cov_t, cov_0 = covariances
    return reconstruct_from_covariances(cov_t, cov_0, basis, delta=delta, truth=channel_truth)
