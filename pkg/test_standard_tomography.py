"""
Tests for the prepare-and-measure baseline
"""
import numpy as np
import pytest

from channel_reconstruction import affine_dynamics
from exceptions import DimensionMismatchError
from operator_core import identity_channel, pauli_basis, phase_damping, random_channel
from standard_tomography import baseline_settings, exact_bloch_vectors, standard_estimate, standard_exact


def test_baseline_settings():
    assert baseline_settings() == 12


def test_exact_bloch_vectors_of_identity():
    np.testing.assert_allclose(exact_bloch_vectors(identity_channel(2)), [
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
    ], atol=1e-12)


@pytest.mark.parametrize("channel", [phase_damping(0.5), random_channel(2, 1), random_channel(2, 2)])
def test_standard_exact_matches_affine_dynamics(channel):
    truth = affine_dynamics(channel, pauli_basis())
    baseline = standard_exact(channel)
    np.testing.assert_allclose(baseline.M, truth.M, atol=1e-12)
    np.testing.assert_allclose(baseline.chi, truth.chi, atol=1e-12)


def test_standard_estimate_is_seeded_and_converges():
    channel = phase_damping(0.5)
    a = standard_estimate(channel, 200, seed=3)
    np.testing.assert_array_equal(a.M, standard_estimate(channel, 200, seed=3).M)
    precise = standard_estimate(channel, 200000, seed=3)
    np.testing.assert_allclose(precise.M, np.diag([0.5, 0.5, 1.0]), atol=0.02)


def test_standard_estimate_validation():
    with pytest.raises(ValueError):
        standard_estimate(phase_damping(0.5), 0, seed=1)
    with pytest.raises(DimensionMismatchError):
        standard_estimate(identity_channel(3), 10, seed=1)
