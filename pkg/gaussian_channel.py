"""
Gaussian channels: affine quadrature dynamics recovered from two-time moments.

Quadratures are ordered (x1, p1, x2, p2, …); the vacuum covariance is 1/2.
"""
import logging
from typing import Dict, List, Tuple, Union

import numpy as np
from scipy import linalg

from exceptions import DimensionMismatchError, InvalidGaussianStateError
from models import (
    AffineDynamics, GaussianChannelTruth, GaussianState, MeasurementMode, Provenance, ProvenanceKind,
    TemporalCovariance
)
from tomography_config import tomography_config

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.Generator]


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def symplectic_form(n_modes: int) -> np.ndarray:
    """Ω = ⊕ [[0, 1], [−1, 0]]"""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(cov: np.ndarray) -> List[float]:
    """Williamson values of a symmetric covariance: moduli of eig(iΩσ), one per mode, descending"""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise ValueError(f"Covariance must be 2n×2n, got shape {cov.shape}")
    if np.max(np.abs(cov - cov.T)) > tomography_config.symplectic_tol:
        raise ValueError("Covariance matrix must be symmetric")
    omega = symplectic_form(cov.shape[0] // 2)
    moduli = np.sort(np.abs(np.linalg.eigvals(1j * omega @ cov)))[::-1]
    return [float(v) for v in moduli[::2]]


def validate_covariance(cov: np.ndarray) -> None:
    """Raise unless every symplectic eigenvalue is at least 1/2"""
    values = symplectic_eigenvalues(cov)
    smallest = values[-1]
    if smallest < 0.5 - tomography_config.symplectic_tol:
        raise InvalidGaussianStateError(
            f"Covariance violates the uncertainty bound: smallest symplectic eigenvalue {smallest:.6f} < 1/2",
            min_symplectic_eigenvalue=smallest,
        )


def _check_dims(state: GaussianState, ch: GaussianChannelTruth) -> None:
    if state.n_modes != ch.n_modes:
        raise DimensionMismatchError(f"State has {state.n_modes} modes, channel acts on {ch.n_modes}")


def propagate(state: GaussianState, ch: GaussianChannelTruth) -> GaussianState:
    """η(t) = M η(t0) + χ; σ(t,t) = M σ Mᵀ + noise"""
    _check_dims(state, ch)
    cov = ch.M @ state.cov @ ch.M.T + ch.noise
    return GaussianState(n_modes=state.n_modes, mean=ch.M @ state.mean + ch.chi, cov=0.5 * (cov + cov.T))


def gaussian_covariances(state: GaussianState, ch: GaussianChannelTruth) -> Tuple[TemporalCovariance, TemporalCovariance]:
    """(two-time, equal-time) moments; the two-time matrix is stored early index first"""
    _check_dims(state, ch)
    size = 2 * state.n_modes
    late_mean = ch.M @ state.mean + ch.chi
    provenance = Provenance(kind=ProvenanceKind.EXACT, mode=MeasurementMode.EXACT)
    cov_t = TemporalCovariance(dim_ops=size, sigma=(ch.M @ state.cov).T, mean_early=state.mean,
                               mean_late=late_mean, provenance=provenance)
    cov_0 = TemporalCovariance(dim_ops=size, sigma=state.cov, mean_early=state.mean,
                               mean_late=state.mean, provenance=provenance, equal_time=True)
    return cov_t, cov_0


def temporal_covariance_gaussian(state: GaussianState, ch: GaussianChannelTruth) -> TemporalCovariance:
    """σ(t,t0) = M σ(t0,t0); added noise is uncorrelated with time-t0 quadratures"""
    return gaussian_covariances(state, ch)[0]


def recover_affine_gaussian(cov_t: TemporalCovariance, cov_0: TemporalCovariance) -> AffineDynamics:
    """M = σ(t,t0) σ(t0,t0)⁻¹, χ = ⟨η(t)⟩ − M⟨η(t0)⟩; valid states are always invertible"""
    if cov_t.dim_ops != cov_0.dim_ops or cov_t.dim_ops % 2:
        raise DimensionMismatchError(f"Moment sizes {cov_t.dim_ops} and {cov_0.dim_ops} are not a matching 2n")
    try:
        validate_covariance(cov_0.sigma)
    except InvalidGaussianStateError as e:
        logger.error(f"[GAUSSIAN] Invalid input state: {e}")
        raise
    M = linalg.solve(cov_0.sigma.T, cov_t.sigma).T
    chi = cov_t.mean_late - M @ cov_t.mean_early
    return AffineDynamics(M=M, chi=chi)


def check_channel_validity(ch: GaussianChannelTruth) -> bool:
    """noise + (i/2)(Ω − MΩMᵀ) ≥ 0"""
    omega = symplectic_form(ch.n_modes)
    condition = ch.noise + 0.5j * (omega - ch.M @ omega @ ch.M.T)
    return bool(np.linalg.eigvalsh(condition)[0] >= -tomography_config.symplectic_tol)


# States and channels

def vacuum_state(n_modes: int = 1) -> GaussianState:
    return thermal_state(n_modes, 0.0)


def thermal_state(n_modes: int = 1, mean_photons: float = 0.0) -> GaussianState:
    """σ = (n̄ + 1/2)·1"""
    if mean_photons < 0:
        raise ValueError(f"Mean photon number must be nonnegative, got {mean_photons}")
    size = 2 * n_modes
    return GaussianState(n_modes=n_modes, mean=np.zeros(size), cov=(mean_photons + 0.5) * np.eye(size))


def squeezing(n_modes: int, r: float) -> np.ndarray:
    """diag(e^{−r}, e^{r}) on every mode"""
    return np.kron(np.eye(n_modes), np.diag([np.exp(-r), np.exp(r)]))


def rotation(n_modes: int, theta: float) -> np.ndarray:
    block = np.array([[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]])
    return np.kron(np.eye(n_modes), block)


def squeezed_state(n_modes: int = 1, r: float = 0.5, mean_photons: float = 0.0) -> GaussianState:
    """Squeezed thermal state S σ_th Sᵀ"""
    S = squeezing(n_modes, r)
    thermal = thermal_state(n_modes, mean_photons)
    return GaussianState(n_modes=n_modes, mean=np.zeros(2 * n_modes), cov=S @ thermal.cov @ S.T)


def random_symplectic(n_modes: int, seed: SeedLike = None, scale: float = 0.5) -> np.ndarray:
    """exp(ΩH) for a random symmetric H"""
    rng = _rng(seed)
    size = 2 * n_modes
    G = rng.normal(scale=scale, size=(size, size))
    return linalg.expm(symplectic_form(n_modes) @ (0.5 * (G + G.T)))


def random_gaussian_state(n_modes: int = 1, seed: SeedLike = None, max_photons: float = 2.0) -> GaussianState:
    """S·diag(ν)·Sᵀ with Williamson values ν ≥ 1/2 and a random displacement"""
    rng = _rng(seed)
    nu = 0.5 + rng.uniform(0.0, max_photons, size=n_modes)
    S = random_symplectic(n_modes, rng)
    cov = S @ np.diag(np.repeat(nu, 2)) @ S.T
    return GaussianState(n_modes=n_modes, mean=rng.normal(size=2 * n_modes), cov=0.5 * (cov + cov.T))


def random_gaussian_channel(n_modes: int = 1, seed: SeedLike = None, noise_scale: float = 0.2) -> GaussianChannelTruth:
    """Symplectic M, random displacement and PSD noise"""
    rng = _rng(seed)
    size = 2 * n_modes
    M = random_symplectic(n_modes, rng)
    A = rng.normal(scale=noise_scale, size=(size, size))
    return GaussianChannelTruth(M=M, chi=rng.normal(size=size), noise=A @ A.T)


def lossy_channel(n_modes: int, transmissivity: float, mean_photons: float = 0.0) -> GaussianChannelTruth:
    """Beam splitter of transmissivity η onto a thermal environment"""
    if not 0.0 <= transmissivity <= 1.0:
        raise ValueError(f"Transmissivity must lie in [0, 1], got {transmissivity}")
    size = 2 * n_modes
    noise = (1.0 - transmissivity) * (mean_photons + 0.5) * np.eye(size)
    return GaussianChannelTruth(M=np.sqrt(transmissivity) * np.eye(size), chi=np.zeros(size), noise=noise)


# Estimation noise

def moment_noise_std(epsilon: float, trials: int) -> float:
    """2/(ε²√N), the statistical error of one weakly measured moment"""
    return 2.0 / (epsilon ** 2 * np.sqrt(trials))


def noisy_moments(cov_t: TemporalCovariance, epsilon: float, trials: int, seed: SeedLike = None) -> TemporalCovariance:
    """Two-time moments with zero-mean Gaussian noise of std 2/(ε²√N) per entry"""
    rng = _rng(seed)
    std = moment_noise_std(epsilon, trials)
    noisy = cov_t.sigma + rng.normal(scale=std, size=cov_t.sigma.shape)
    provenance = Provenance(kind=ProvenanceKind.SAMPLED, mode=MeasurementMode.TWO_POINTER,
                            trials_per_correlation=trials, epsilon=epsilon,
                            seed=seed if isinstance(seed, int) else None,
                            correlation_experiments=cov_t.dim_ops ** 2)
    return TemporalCovariance(dim_ops=cov_t.dim_ops, sigma=noisy, mean_early=cov_t.mean_early,
                              mean_late=cov_t.mean_late, provenance=provenance)


def gaussian_accounting(n_modes: int) -> Dict[str, int]:
    """Settings needed to estimate an n-mode Gaussian channel"""
    size = 2 * n_modes
    return {
        'correlation_experiments': size * size,
        'mean_experiments': 2 * size,
        'equal_time_experiments': size * (size + 1) // 2,
    }


def recovery_error(estimate: AffineDynamics, truth: GaussianChannelTruth) -> float:
    """max(‖M_est − M‖₂, ‖χ_est − χ‖)"""
    return float(max(np.linalg.norm(estimate.M - truth.M, ord=2), np.linalg.norm(estimate.chi - truth.chi)))
