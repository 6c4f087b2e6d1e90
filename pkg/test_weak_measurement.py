"""
Tests for the pointer protocols
"""
import numpy as np
import pytest

from models import Operator, PointerConfig, ProtocolRun
from operator_core import (
    SIGMA_X, SIGMA_Z, amplitude_damping, identity_channel, maximally_mixed, pauli_basis, phase_damping,
    pure_state, random_channel, random_state
)
from weak_measurement import (
    anticommutator_expectation, back_action, coupling_unitary, product_expectation, product_variance,
    run_two_pointer, sample_products, sample_single_pointer, sample_trials, single_pointer_expectation,
    single_pointer_expectations, systematic_f
)

BZ = Operator.hermitian_from(SIGMA_Z / np.sqrt(2.0))
BX = Operator.hermitian_from(SIGMA_X / np.sqrt(2.0))


def make_run(channel=None, early=BZ, late=BZ, state=None, epsilon=0.5):
    return ProtocolRun(
        channel=channel or identity_channel(2),
        obs_early=early,
        obs_late=late,
        state=state or maximally_mixed(2),
        config=PointerConfig(epsilon=epsilon),
    )


def random_runs(count, epsilon, seed=0):
    rng = np.random.default_rng(seed)
    observables = pauli_basis().observables
    for _ in range(count):
        i, j = rng.integers(0, 3, size=2)
        yield make_run(random_channel(2, rng), observables[i], observables[j], random_state(2, rng), epsilon)


def test_coupling_unitary_is_unitary():
    U = coupling_unitary(BX, PointerConfig(epsilon=0.7)).entries
    np.testing.assert_allclose(U @ U.conj().T, np.eye(4), atol=1e-12)


def test_coupling_requires_hermitian_observable():
    with pytest.raises(ValueError):
        coupling_unitary(Operator(entries=np.array([[0, 1], [0, 0]])), PointerConfig(epsilon=0.5))


def test_two_pointer_distribution_is_normalized():
    dist = run_two_pointer(make_run(phase_damping(0.5), BX, BX))
    assert dist.probs.sum() == pytest.approx(1.0)
    assert dist.post_state is not None
    assert np.trace(dist.post_state.matrix) == pytest.approx(1.0)


@pytest.mark.parametrize("epsilon", [0.1, 0.5, 2.0 / 3.0])
def test_product_expectation_for_commuting_identity_run(epsilon):
    # Each pointer reads −sin(ε·b) for the eigenvalue b = ±1/√2 of σz/√2
    run = make_run(epsilon=epsilon)
    assert product_expectation(run_two_pointer(run)) == pytest.approx(np.sin(epsilon / np.sqrt(2.0)) ** 2)


def test_product_variance():
    dist = run_two_pointer(make_run(epsilon=0.5))
    mean = product_expectation(dist)
    assert product_variance(dist) == pytest.approx(1.0 - mean ** 2)


def test_product_variance_is_one_up_to_fourth_order():
    for epsilon in (0.05, 0.1, 0.2, 0.3):
        for run in random_runs(10, epsilon, seed=7):
            deviation = abs(product_variance(run_two_pointer(run)) - 1.0)
            assert deviation <= 1.2 * epsilon ** 4 / 4.0
    couplings = np.array([0.05, 0.1, 0.2])
    deviations = [abs(product_variance(run_two_pointer(make_run(epsilon=e))) - 1.0) for e in couplings]
    assert np.polyfit(np.log(couplings), np.log(deviations), 1)[0] == pytest.approx(4.0, abs=0.05)


def test_systematic_f_for_identity_channel():
    assert systematic_f(make_run()) == pytest.approx(-1.0 / 12.0)


def test_systematic_f_bounded_for_pauli_basis():
    for run in random_runs(30, 0.3, seed=1):
        assert abs(systematic_f(run)) <= 1.0 / 12.0 + 1e-12


def test_product_expectation_expansion():
    for run in random_runs(20, 0.1, seed=2):
        eps = run.config.epsilon
        expected = 0.5 * eps ** 2 * anticommutator_expectation(run) + eps ** 4 * systematic_f(run)
        assert product_expectation(run_two_pointer(run)) == pytest.approx(expected, abs=5e-6)


def test_residual_after_systematic_term_scales_as_epsilon_to_the_sixth():
    epsilons = np.array([0.1, 0.14, 0.2, 0.28])
    rng = np.random.default_rng(5)
    slopes = []
    for _ in range(10):
        channel, state = random_channel(2, rng), random_state(2, rng)
        residuals = []
        for eps in epsilons:
            run = make_run(channel, BX, BZ, state, float(eps))
            residuals.append(abs(product_expectation(run_two_pointer(run))
                                 - 0.5 * eps ** 2 * anticommutator_expectation(run) - eps ** 4 * systematic_f(run)))
        slopes.append(np.polyfit(np.log(epsilons), np.log(residuals), 1)[0])
    assert np.median(slopes) == pytest.approx(6.0, abs=0.5)


def test_anticommutator_expectation_phase_damping():
    # Λ†(Bx) = (1 − p)·Bx, Tr(ρ{Bx, Bx}) = 1 at ρ = 1/2
    run = make_run(phase_damping(0.5), BX, BX)
    assert anticommutator_expectation(run) == pytest.approx(0.5)


def test_sample_trials_is_seeded():
    run = make_run(epsilon=0.6)
    a = sample_trials(run, 500, seed=9)
    np.testing.assert_array_equal(a, sample_trials(run, 500, seed=9))
    assert set(np.unique(a)) <= {-1, 1}
    with pytest.raises(ValueError):
        sample_trials(run, 0, seed=9)


def test_sample_products_mean_converges():
    dist = run_two_pointer(make_run(epsilon=0.6))
    products = sample_products(dist, 200000, np.random.default_rng(0))
    assert products.mean() == pytest.approx(product_expectation(dist), abs=0.01)


def test_back_action_vanishes_for_commuting_state():
    assert back_action(make_run(epsilon=0.8)) == pytest.approx(0.0, abs=1e-12)


def test_back_action_grows_with_coupling():
    plus = pure_state([1.0, 1.0])
    weak = back_action(make_run(state=plus, epsilon=0.1))
    strong = back_action(make_run(state=plus, epsilon=0.5))
    assert 0.0 < weak < strong


def test_back_action_is_quadratic_in_coupling():
    plus = pure_state([1.0, 1.0])
    ratio = back_action(make_run(state=plus, epsilon=0.15)) / back_action(make_run(state=plus, epsilon=0.3))
    assert ratio == pytest.approx(0.25, abs=0.01)


def test_single_pointer_average_matches_anticommutator():
    for run in random_runs(20, 0.05, seed=3):
        e1, e2 = single_pointer_expectations(run)
        eps = run.config.epsilon
        assert 0.5 * (e1 + e2) == pytest.approx(eps ** 2 * anticommutator_expectation(run), abs=2e-5)


def test_single_pointer_configurations_are_distinct():
    run = make_run(amplitude_damping(0.3), BX, BZ, random_state(2, 4), epsilon=0.3)
    assert single_pointer_expectation(run, 'A') != pytest.approx(single_pointer_expectation(run, 'B'))
    with pytest.raises(KeyError):
        single_pointer_expectation(run, 'C')


def test_sample_single_pointer_shapes():
    expectations = single_pointer_expectations(make_run(epsilon=0.4))
    rngs = (np.random.default_rng(1), np.random.default_rng(2))
    first, second = sample_single_pointer(expectations, 100, rngs)
    assert first.shape == second.shape == (100,)
    assert set(np.unique(np.concatenate([first, second]))) <= {-1, 1}
    with pytest.raises(ValueError):
        sample_single_pointer(expectations, 0, rngs)


def test_sample_single_pointer_means():
    expectations = (0.6, -0.2)
    first, second = sample_single_pointer(expectations, 40000, (np.random.default_rng(3), np.random.default_rng(4)))
    assert first.mean() == pytest.approx(0.6, abs=0.02)
    assert second.mean() == pytest.approx(-0.2, abs=0.02)
