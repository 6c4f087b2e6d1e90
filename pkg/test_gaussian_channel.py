"""
Tests for Gaussian states, channels and affine recovery
"""
import numpy as np
import pytest

from exceptions import DimensionMismatchError, InvalidGaussianStateError
from gaussian_channel import (
    check_channel_validity, gaussian_accounting, gaussian_covariances, lossy_channel, moment_noise_std,
    noisy_moments, propagate, random_gaussian_channel, random_gaussian_state, random_symplectic,
    recover_affine_gaussian, recovery_error, rotation, squeezed_state, squeezing, symplectic_eigenvalues,
    symplectic_form, temporal_covariance_gaussian, thermal_state, vacuum_state, validate_covariance
)
from models import GaussianChannelTruth, ProvenanceKind


def test_symplectic_form():
    omega = symplectic_form(2)
    np.testing.assert_allclose(omega @ omega, -np.eye(4))
    np.testing.assert_allclose(omega[:2, :2], [[0.0, 1.0], [-1.0, 0.0]])


def test_symplectic_eigenvalues_of_thermal_states():
    assert symplectic_eigenvalues(vacuum_state(1).cov) == pytest.approx([0.5])
    assert symplectic_eigenvalues(thermal_state(2, 1.0).cov) == pytest.approx([1.5, 1.5])


def test_squeezing_preserves_symplectic_eigenvalues():
    state = squeezed_state(2, r=0.8, mean_photons=0.3)
    assert symplectic_eigenvalues(state.cov) == pytest.approx([0.8, 0.8])
    assert state.cov[0, 0] == pytest.approx(0.8 * np.exp(-1.6))


def test_symplectic_eigenvalues_reject_bad_shapes():
    with pytest.raises(ValueError):
        symplectic_eigenvalues(np.eye(3))
    with pytest.raises(ValueError):
        symplectic_eigenvalues(np.array([[1.0, 0.3], [0.0, 1.0]]))


def test_validate_covariance():
    validate_covariance(0.5 * np.eye(2))
    with pytest.raises(InvalidGaussianStateError) as info:
        validate_covariance(0.4 * np.eye(2))
    assert info.value.min_symplectic_eigenvalue == pytest.approx(0.4)


@pytest.mark.parametrize("n_modes", [1, 2, 3])
def test_random_symplectic_preserves_form(n_modes):
    S = random_symplectic(n_modes, 4)
    omega = symplectic_form(n_modes)
    np.testing.assert_allclose(S @ omega @ S.T, omega, atol=1e-10)
    for matrix in (squeezing(n_modes, 0.4), rotation(n_modes, 0.9)):
        np.testing.assert_allclose(matrix @ omega @ matrix.T, omega, atol=1e-12)


def test_lossy_channel_on_thermal_state():
    # η = 1/2 onto an environment with n̄ = 1/2 keeps σ = 1
    state = thermal_state(1, 0.5)
    output = propagate(state, lossy_channel(1, 0.5, 0.5))
    np.testing.assert_allclose(output.cov, np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        lossy_channel(1, 1.5)


def test_channel_validity():
    assert check_channel_validity(lossy_channel(2, 0.3, 0.0))
    unitary = GaussianChannelTruth(M=random_symplectic(2, 1), chi=np.zeros(4), noise=np.zeros((4, 4)))
    assert check_channel_validity(unitary)
    amplifier = GaussianChannelTruth(M=2.0 * np.eye(2), chi=np.zeros(2), noise=np.zeros((2, 2)))
    assert not check_channel_validity(amplifier)


def test_gaussian_covariances_storage():
    state = random_gaussian_state(1, 3)
    channel = random_gaussian_channel(1, 3)
    cov_t, cov_0 = gaussian_covariances(state, channel)
    np.testing.assert_allclose(cov_t.late_early, channel.M @ state.cov, atol=1e-12)
    np.testing.assert_allclose(cov_0.sigma, state.cov)
    assert cov_0.equal_time
    np.testing.assert_allclose(temporal_covariance_gaussian(state, channel).sigma, cov_t.sigma)


@pytest.mark.parametrize("n_modes", [1, 2, 3])
def test_exact_recovery(n_modes):
    rng = np.random.default_rng(n_modes)
    for state in (vacuum_state(n_modes), thermal_state(n_modes, 0.7), squeezed_state(n_modes, 0.6),
                  random_gaussian_state(n_modes, rng)):
        channel = random_gaussian_channel(n_modes, rng)
        estimate = recover_affine_gaussian(*gaussian_covariances(state, channel))
        assert recovery_error(estimate, channel) < 1e-10


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        propagate(vacuum_state(1), random_gaussian_channel(2, 0))


def test_noisy_moments():
    state, channel = thermal_state(1, 0.5), random_gaussian_channel(1, 9)
    cov_t, cov_0 = gaussian_covariances(state, channel)
    noisy = noisy_moments(cov_t, 0.5, 1000, seed=2)
    np.testing.assert_array_equal(noisy.sigma, noisy_moments(cov_t, 0.5, 1000, seed=2).sigma)
    assert noisy.provenance.kind == ProvenanceKind.SAMPLED
    assert noisy.provenance.trials_per_correlation == 1000
    assert moment_noise_std(0.5, 1000) == pytest.approx(2.0 / (0.25 * np.sqrt(1000)))
    assert np.max(np.abs(noisy.sigma - cov_t.sigma)) < 5 * moment_noise_std(0.5, 1000)


def test_noisy_recovery_error_shrinks_as_inverse_root_n():
    state, channel = thermal_state(2, 0.5), random_gaussian_channel(2, 11)
    cov_t, cov_0 = gaussian_covariances(state, channel)
    trials = np.array([100, 1600, 25600])
    errors = [
        np.mean([recovery_error(recover_affine_gaussian(noisy_moments(cov_t, 0.5, int(n), seed=s), cov_0), channel)
                 for s in range(30)])
        for n in trials
    ]
    slope = np.polyfit(np.log(trials), np.log(errors), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_gaussian_accounting():
    assert gaussian_accounting(1) == {
        'correlation_experiments': 4, 'mean_experiments': 4, 'equal_time_experiments': 3,
    }
