"""
Tests for exact, sampled and limit temporal covariances and the trial budget
"""
import logging

import numpy as np
import pytest

from channel_reconstruction import recover_M
from covariance_estimator import (
    SamplingPlan, bias_limited_epsilon2, exact_covariance, exact_covariances, exact_equal_time_covariance,
    limit_covariance, measurement_accounting, optimal_epsilon, required_trials, sampled_covariance,
    sampled_covariances, trial_requirement
)
from exceptions import ConfigError, DimensionMismatchError
from models import Budget, MeasurementMode, PointerConfig, ProvenanceKind
from operator_core import (
    gell_mann_basis, identity_channel, maximally_mixed, pauli_basis, phase_damping, random_channel, random_state
)

EPSILON = 2.0 / 3.0


@pytest.fixture(scope="module")
def plan():
    return SamplingPlan(maximally_mixed(2), phase_damping(0.5), pauli_basis(), PointerConfig(epsilon=EPSILON))


def test_exact_covariance_phase_damping():
    cov = exact_covariance(maximally_mixed(2), phase_damping(0.5), pauli_basis())
    np.testing.assert_allclose(cov.sigma, np.diag([0.5, 0.5, 1.0]), atol=1e-12)
    assert cov.provenance.kind == ProvenanceKind.EXACT
    equal_time = exact_equal_time_covariance(maximally_mixed(2), pauli_basis())
    np.testing.assert_allclose(equal_time.sigma, np.eye(3), atol=1e-12)


def test_exact_equal_time_covariance_is_symmetric():
    state = random_state(3, 8)
    cov = exact_equal_time_covariance(state, gell_mann_basis(3))
    np.testing.assert_allclose(cov.sigma, cov.sigma.T, atol=1e-12)
    assert cov.equal_time


def test_exact_covariance_means():
    rng = np.random.default_rng(2)
    state, channel = random_state(2, rng), random_channel(2, rng)
    cov_t, cov_0 = exact_covariances(state, channel, pauli_basis())
    np.testing.assert_allclose(cov_t.mean_early, cov_0.mean_early)
    bloch = [np.real(np.trace(state.matrix @ b)) for b in pauli_basis().matrices[1:]]
    np.testing.assert_allclose(cov_t.mean_early, bloch, atol=1e-12)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        exact_covariance(maximally_mixed(3), identity_channel(3), pauli_basis())


def test_sampling_plan_rejects_exact_mode():
    with pytest.raises(ConfigError):
        SamplingPlan(maximally_mixed(2), identity_channel(2), pauli_basis(), PointerConfig(epsilon=0.5),
                     MeasurementMode.EXACT)


def test_sample_is_reproducible(plan):
    budget = Budget(delta=0.1, epsilon=EPSILON, trials_per_correlation=300)
    a_t, a_0 = plan.sample(17, budget)
    b_t, b_0 = plan.sample(17, budget)
    np.testing.assert_array_equal(a_t.sigma, b_t.sigma)
    np.testing.assert_array_equal(a_0.sigma, b_0.sigma)
    assert not np.array_equal(a_t.sigma, plan.sample(18, budget)[0].sigma)


def test_sample_provenance(plan):
    budget = Budget(delta=0.1, epsilon=EPSILON, trials_per_correlation=300, mean_trials=50)
    cov_t, cov_0 = plan.sample(3, budget)
    provenance = cov_t.provenance
    assert provenance.kind == ProvenanceKind.SAMPLED
    assert provenance.trials_per_correlation == 300
    assert provenance.mean_trials == 50
    assert provenance.correlation_experiments == 9
    assert provenance.mean_experiments == 6
    assert provenance.equal_time_experiments == 6
    assert cov_0.equal_time


def test_sample_rejects_mismatched_coupling(plan):
    with pytest.raises(ConfigError):
        plan.sample(1, Budget(delta=0.1, epsilon=0.3, trials_per_correlation=10))


def test_running_covariances_end_at_full_sample(plan):
    runs = plan.running_covariances(5, [100, 25, 50])
    assert [n for n, _, _ in runs] == [25, 50, 100]
    _, cov_t, cov_0 = runs[-1]
    full_t, full_0 = plan.sample(5, Budget(delta=0.1, epsilon=EPSILON, trials_per_correlation=100))
    np.testing.assert_allclose(cov_t.sigma, full_t.sigma)
    np.testing.assert_allclose(cov_0.sigma, full_0.sigma)


def test_running_covariances_reject_empty_checkpoints(plan):
    with pytest.raises(ConfigError):
        plan.running_covariances(5, [])
    with pytest.raises(ConfigError):
        plan.running_covariances(5, [0, 10])


def test_sampled_estimate_is_unbiased_up_to_systematic_error():
    state, channel, basis = maximally_mixed(2), phase_damping(0.5), pauli_basis()
    budget = Budget(delta=0.1, epsilon=0.3, trials_per_correlation=200000)
    cov = sampled_covariance(state, channel, basis, budget, seed=4)
    limit_t, _ = limit_covariance(state, channel, basis, 0.3)
    # std of each entry is (2/ε²)/√N ≈ 0.05
    np.testing.assert_allclose(cov.sigma, limit_t.sigma, atol=0.25)


def test_limit_covariance_systematic_bias():
    state, channel, basis = maximally_mixed(2), phase_damping(0.5), pauli_basis()
    M = recover_M(*limit_covariance(state, channel, basis, EPSILON))
    # (2/ε²)·sin²(ε/√2) for the z entry
    assert M[2, 2] == pytest.approx(4.5 * np.sin(EPSILON / np.sqrt(2.0)) ** 2, abs=1e-9)
    assert 0.4 < M[0, 0] < 0.5
    corrected = recover_M(*limit_covariance(state, channel, basis, EPSILON, correct_systematic=True))
    assert abs(corrected[2, 2] - 1.0) < abs(M[2, 2] - 1.0)
    assert abs(corrected[0, 0] - 0.5) < abs(M[0, 0] - 0.5)


def test_weak_limit_approaches_exact():
    state, channel, basis = random_state(2, 6), random_channel(2, 6), pauli_basis()
    exact = recover_M(*exact_covariances(state, channel, basis))
    weak = recover_M(*limit_covariance(state, channel, basis, 0.05))
    np.testing.assert_allclose(weak, exact, atol=1e-2)


def test_single_pointer_limit_and_correction_warning(caplog):
    state, channel, basis = maximally_mixed(2), phase_damping(0.5), pauli_basis()
    with caplog.at_level(logging.WARNING):
        cov_t, _ = limit_covariance(state, channel, basis, 0.05, MeasurementMode.SINGLE_POINTER,
                                    correct_systematic=True)
    assert "only defined for the two-pointer protocol" in caplog.text
    assert not cov_t.provenance.corrected
    np.testing.assert_allclose(cov_t.sigma, np.diag([0.5, 0.5, 1.0]), atol=0.02)


def test_single_pointer_sampling():
    budget = Budget(delta=0.1, epsilon=0.5, trials_per_correlation=100)
    cov_t, _ = sampled_covariances(maximally_mixed(2), identity_channel(2), pauli_basis(), budget, 2,
                                   MeasurementMode.SINGLE_POINTER)
    assert cov_t.provenance.mode == MeasurementMode.SINGLE_POINTER
    assert cov_t.sigma.shape == (3, 3)


@pytest.mark.slow
def test_sampled_error_falls_as_inverse_root_of_trials():
    state, channel, basis = maximally_mixed(2), phase_damping(0.5), pauli_basis()
    plan = SamplingPlan(state, channel, basis, PointerConfig(epsilon=EPSILON))
    limit_t, _ = limit_covariance(state, channel, basis, EPSILON)
    counts = [1000, 10000, 100000, 1000000]
    squared = np.zeros(len(counts))
    seeds = range(6)
    for seed in seeds:
        for position, (_, cov_t, _) in enumerate(plan.running_covariances(seed, counts)):
            squared[position] += np.mean((cov_t.sigma - limit_t.sigma) ** 2)
    rms = np.sqrt(squared / len(seeds))
    slope = np.polyfit(np.log(counts), np.log(rms), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_required_trials():
    assert required_trials(0.1, 1.0 / 12.0) == 278
    assert required_trials(0.05, 1.0 / 12.0) == 4445
    with pytest.raises(ConfigError):
        required_trials(0.0, 0.1)
    with pytest.raises(ConfigError):
        required_trials(0.1, 0.0)


def test_trial_requirement_bound_at_pauli_norm():
    requirement = trial_requirement(0.1, 1.0 / 12.0, basis_norm=1.0 / np.sqrt(2.0))
    assert requirement.trials == 278
    assert requirement.bound_trials == 278


def test_optimal_epsilon():
    assert optimal_epsilon(0.01, 1.0 / 12.0) == pytest.approx(np.sqrt(0.12))
    assert optimal_epsilon(0.04, 1.0 / 12.0) == pytest.approx(2.0 * np.sqrt(0.12))


def test_optimal_epsilon_warnings(caplog):
    with caplog.at_level(logging.WARNING):
        optimal_epsilon(0.2, 0.1)
    assert "not weak" in caplog.text
    caplog.clear()
    with caplog.at_level(logging.WARNING):
        optimal_epsilon(0.05, 1.0 / 12.0, basis_norm=1.0 / np.sqrt(2.0))
    assert "not much smaller" in caplog.text


def test_measurement_accounting():
    assert measurement_accounting(2) == {
        'correlation_experiments': 9, 'mean_experiments': 6, 'equal_time_experiments': 6,
    }
    assert measurement_accounting(3)['correlation_experiments'] == 64


def test_bias_limited_epsilon2():
    assert bias_limited_epsilon2(0.1, 1.0 / 12.0) == pytest.approx(0.3)
    assert bias_limited_epsilon2(0.05, 1.0 / 12.0) == pytest.approx(0.15)
    # capped at the weak-regime edge, so PointerConfig accepts it
    assert bias_limited_epsilon2(1.0, 1.0 / 12.0) == pytest.approx(0.81)
    PointerConfig.from_epsilon_squared(bias_limited_epsilon2(1.0, 1.0 / 12.0))
    with pytest.raises(ConfigError):
        bias_limited_epsilon2(0.1, 0.0)


def test_readout_std_matches_sampled_spread(plan):
    budget = Budget(delta=0.1, epsilon=EPSILON, trials_per_correlation=400)
    sigmas = np.array([plan.sample(seed, budget)[0].sigma for seed in range(300)])
    predicted = plan.readout_std(400)
    np.testing.assert_allclose(sigmas.std(axis=0, ddof=1), predicted, rtol=0.15)
    np.testing.assert_allclose(plan.readout_std(1600), predicted / 2.0)


def test_single_pointer_readout_std():
    plan = SamplingPlan(maximally_mixed(2), identity_channel(2), pauli_basis(), PointerConfig(epsilon=0.5),
                        MeasurementMode.SINGLE_POINTER)
    first, second = plan.single_pointer_means[0, 0]
    expected = np.sqrt((2.0 - first ** 2 - second ** 2) / 4.0 / 100) / 0.25
    assert plan.readout_std(100)[0, 0] == pytest.approx(expected)
    with pytest.raises(ValueError):
        plan.readout_std(0)
