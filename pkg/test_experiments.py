"""
Tests for the experiment services behind the CLI verbs
"""
import numpy as np
import pytest

import experiments
from exceptions import ConfigError, SearchExhaustedError
from models import ExperimentConfig, MeasurementMode
from operator_core import phase_damping


def make_config(tmp_path, **overrides):
    values = dict(channel='phase-damping', channel_param=0.5, epsilon2=4.0 / 9.0, trials=400,
                  seed=2024, output_dir=str(tmp_path))
    values.update(overrides)
    return ExperimentConfig(**values)


def test_derive_seed_is_deterministic():
    assert experiments.derive_seed(1, 0) == experiments.derive_seed(1, 0)
    assert experiments.derive_seed(1, 0) != experiments.derive_seed(1, 1)
    assert experiments.derive_seed(1, 0) != experiments.derive_seed(2, 0)


def test_geometric_grid():
    grid = experiments.geometric_grid(100, 1000)
    assert grid[0] == 100
    assert grid[-1] >= 1000
    assert grid == sorted(set(grid))


def test_entry_labels():
    labels = experiments.entry_labels(3)
    assert labels[0] == 'M_11' and labels[-1] == 'M_33' and len(labels) == 9


def test_builders(tmp_path):
    explicit = make_config(tmp_path, state='explicit', state_matrix='0.7,0;0,0.3')
    assert experiments.build_state(explicit).eigen_floor == pytest.approx(0.3)
    thermal = make_config(tmp_path, state='thermal', beta=2.0)
    assert experiments.build_state(thermal).dim == 2
    qutrit = make_config(tmp_path, channel='random', dimension=3, state='random')
    assert experiments.build_channel(qutrit).dim == 3
    assert experiments.build_basis(qutrit).size == 9
    rotation = make_config(tmp_path, channel='rotation', channel_param=0.4, channel_axis='x')
    assert experiments.build_channel(rotation).rank == 1


def test_explicit_state_dimension_must_match(tmp_path):
    config = make_config(tmp_path, channel='identity', dimension=3, state='explicit', state_matrix='0.5,0;0,0.5')
    with pytest.raises(ValueError):
        experiments.build_state(config)


def test_experiment_exact_mode(tmp_path):
    experiment = experiments.Experiment(make_config(tmp_path, mode='exact'))
    assert not experiment.sampled
    np.testing.assert_allclose(experiment.m_theory, np.diag([0.5, 0.5, 1.0]), atol=1e-12)
    with pytest.raises(ConfigError):
        experiment.plan()
    assert 0.0 < experiment.max_systematic_f() <= 1.0 / 12.0 + 1e-12


def test_run_estimate_exact(tmp_path):
    record = experiments.run_estimate(make_config(tmp_path, mode='exact'))
    assert record.delta_m_spectral < 1e-8
    assert record.entries_within_delta == 9
    for name in ('m_matrix.csv', 'kraus.csv', 'diagnostics.csv', 'run_record.json'):
        assert (tmp_path / name).exists()
    header = (tmp_path / 'm_matrix.csv').read_text().splitlines()[1].split(',')
    assert header == experiments.entry_labels(3)


def test_run_estimate_is_bit_reproducible(tmp_path):
    first = make_config(tmp_path / "a", repetitions=3)
    second = make_config(tmp_path / "b", repetitions=3, workers=2)
    experiments.run_estimate(first)
    experiments.run_estimate(second)
    for name in ('m_matrix.csv', 'kraus.csv', 'm_repetitions.csv'):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_fig1_sampled(tmp_path):
    rows = experiments.run_fig1(make_config(tmp_path), checkpoints=(25, 100, 400))
    assert [row[0] for row in rows] == [25, 100, 400]
    lines = (tmp_path / 'fig1.csv').read_text().splitlines()
    assert lines[0].startswith('# config_hash=')
    assert lines[1].split(',')[0] == 'N'
    assert len(lines) == 5


def test_run_fig1_exact_is_flat(tmp_path):
    rows = np.array(experiments.run_fig1(make_config(tmp_path, mode='exact'), checkpoints=(25, 50)))
    np.testing.assert_allclose(rows[0, 1:], rows[1, 1:])


def test_run_fig2_small(tmp_path):
    summary = experiments.run_fig2(make_config(tmp_path), trials_list=(100, 400), repetitions=20)
    assert set(summary) == {100, 400}
    assert set(summary[100]) == {'M_12', 'M_11', 'M_33'}
    assert summary[400]['M_33'][1] < summary[100]['M_33'][1]
    for name in ('fig2_samples.csv', 'fig2_histogram.csv', 'fig2_summary.csv'):
        assert (tmp_path / name).exists()


def test_run_fig3_orderings(tmp_path):
    couplings = (2.0 / 9.0, 6.0 / 9.0)
    curves = experiments.run_fig3(make_config(tmp_path), couplings=couplings, seeds=4, checkpoints=(25, 50))
    weak, strong = curves[couplings[0]], curves[couplings[1]]
    assert strong['delta_m_spectral'][0] < weak['delta_m_spectral'][0]
    assert strong['plateau'][0] > weak['plateau'][0]


def test_run_fig3_exact_plateau(tmp_path):
    curves = experiments.run_fig3(make_config(tmp_path, mode='exact'), seeds=2, checkpoints=(25,))
    for curve in curves.values():
        assert curve['plateau'][0] == 0.0
        assert curve['delta_m_spectral'][0] < 1e-8


def test_meets_target_allows_one_miss():
    reference = np.zeros(9)
    estimates = np.zeros((5, 9))
    estimates[:, 0] = 1.0
    assert experiments.meets_target(estimates, reference, 0.1)
    estimates[:, 1] = 1.0
    assert not experiments.meets_target(estimates, reference, 0.1)


def test_scaling_exponent():
    deltas = [0.1, 0.05, 0.025]
    assert experiments.scaling_exponent(deltas, [d ** -4 for d in deltas]) == pytest.approx(-4.0)


def test_search_baseline_shots():
    channel = phase_damping(0.5)
    shots = experiments.search_baseline_shots(channel, np.diag([0.5, 0.5, 1.0]), 0.1, seeds=10, master_seed=1)
    assert shots is not None
    assert 20 <= shots <= 1000


def test_compare_standard_fits_simulated_temporal_totals(tmp_path, monkeypatch):
    couplings = {}

    def fake_search(config, delta, seeds, grid=None, epsilon2=None):
        if epsilon2 is None:
            return 2500
        couplings[delta] = epsilon2
        return int(round(10.0 / delta ** 3))

    monkeypatch.setattr(experiments, 'search_temporal_trials', fake_search)
    config = make_config(tmp_path, repetitions=5)
    f_abs = experiments.Experiment(config).max_systematic_f()
    result = experiments.run_compare_standard(config)
    assert result['temporal_exponent'] == pytest.approx(-3.0, abs=0.01)
    assert result['temporal_total'] == 2500 * 9
    assert couplings[0.05] == pytest.approx(0.05 / (4.0 * f_abs))
    assert couplings[0.1] == pytest.approx(2.0 * couplings[0.05])
    assert max(couplings.values()) < 1.0
    lines = (tmp_path / 'compare_standard.csv').read_text().splitlines()
    assert lines[1] == 'method,delta,epsilon2,per_setting,settings,total'
    assert sum(line.startswith('temporal-scaling') for line in lines) == 3


def test_compare_standard_reports_exhausted_baseline(tmp_path, monkeypatch):
    monkeypatch.setattr(experiments, 'search_temporal_trials', lambda *args, **kwargs: 100)
    monkeypatch.setattr(experiments, 'search_baseline_shots', lambda *args, **kwargs: None)
    with pytest.raises(SearchExhaustedError) as info:
        experiments.run_compare_standard(make_config(tmp_path, repetitions=5))
    assert info.value.exit_code == 5
    assert info.value.largest_tried == experiments.BASELINE_GRID[-1]


def test_compare_standard_needs_sampling(tmp_path):
    with pytest.raises(ConfigError):
        experiments.run_compare_standard(make_config(tmp_path, mode='exact'))


def test_run_gaussian_demo(tmp_path):
    config = ExperimentConfig(output_dir=str(tmp_path), modes=1, squeezing=0.3, repetitions=30)
    summary = experiments.run_gaussian_demo(config, trials_list=(100, 1600, 25600))
    assert summary['exact_error'] < 1e-10
    assert summary['noisy_slope'] == pytest.approx(-0.5, abs=0.15)
    assert summary['min_symplectic_eigenvalue'] >= 0.5
    assert (tmp_path / 'gaussian.csv').exists()


def test_gaussian_builders_follow_config(tmp_path):
    lossy = ExperimentConfig(output_dir=str(tmp_path), channel='amplitude-damping', channel_param=0.75, beta=50.0)
    channel = experiments.build_gaussian_channel(lossy)
    np.testing.assert_allclose(channel.M, 0.5 * np.eye(2), atol=1e-12)
    np.testing.assert_allclose(channel.noise, 0.375 * np.eye(2), atol=1e-12)
    assert experiments.build_gaussian_channel(ExperimentConfig(channel='random', modes=2)).n_modes == 2
    random_state = ExperimentConfig(state='random', modes=2)
    first = experiments.build_gaussian_state(random_state)
    assert first.n_modes == 2
    np.testing.assert_array_equal(first.cov, experiments.build_gaussian_state(random_state).cov)
    assert experiments.build_gaussian_state(ExperimentConfig(squeezing=1.0)).cov[0, 0] < 0.5


def test_run_gaussian_demo_on_loss_channel(tmp_path):
    config = ExperimentConfig(output_dir=str(tmp_path), channel='amplitude-damping', channel_param=0.5,
                              state='random', repetitions=5)
    summary = experiments.run_gaussian_demo(config, trials_list=(100, 400))
    assert summary['exact_error'] < 1e-10
    assert summary['channel_valid'] == 1.0


@pytest.mark.slow
def test_fig2_reproduction(tmp_path):
    summary = experiments.run_fig2(make_config(tmp_path, workers=4), trials_list=(400, 3000), repetitions=1000)
    targets = {400: (0.00, 0.47, 0.90), 3000: (0.00, 0.48, 0.92)}
    for trials, means in targets.items():
        for label, mean in zip(('M_12', 'M_11', 'M_33'), means):
            assert summary[trials][label][0] == pytest.approx(mean, abs=0.03)
    for label in ('M_12', 'M_11', 'M_33'):
        ratio = summary[400][label][1] / summary[3000][label][1]
        assert ratio == pytest.approx(np.sqrt(3000 / 400), abs=0.4)


@pytest.mark.slow
def test_compare_standard_totals(tmp_path):
    result = experiments.run_compare_standard(make_config(tmp_path, trials=2500, workers=4))
    assert 500 <= result['standard_total'] <= 2000
    assert 22500 / 2 <= result['temporal_total'] <= 22500 * 2
    assert result['temporal_exponent'] == pytest.approx(-4.0, abs=0.5)
    assert result['standard_exponent'] == pytest.approx(-2.0, abs=0.5)


def test_mode_accepts_cli_spelling(tmp_path):
    assert make_config(tmp_path, mode='single-pointer').mode == MeasurementMode.SINGLE_POINTER


def test_m_readout_std_follows_the_late_early_layout(tmp_path):
    experiment = experiments.Experiment(make_config(tmp_path))
    predicted = experiment.m_readout_std(400)
    np.testing.assert_allclose(predicted, experiment.plan().readout_std(400).T, rtol=1e-10)
    assert 0.15 < predicted[2, 2] < 0.3


def test_fig2_summary_carries_model_std(tmp_path):
    experiments.run_fig2(make_config(tmp_path), trials_list=(100,), repetitions=5)
    lines = (tmp_path / 'fig2_summary.csv').read_text().splitlines()
    assert lines[1] == 'N,entry,theory,mean,std,model_std,epsilon2'
    assert all(float(line.split(',')[5]) > 0.0 for line in lines[2:])


def test_run_budget_at_the_qubit_bound(tmp_path):
    requirements = experiments.run_budget(make_config(tmp_path), deltas=(0.1, 0.01), f_abs=1.0 / 12.0)
    assert [r.trials for r in requirements][0] == 278
    assert requirements[0].bound_trials == 278
    lines = (tmp_path / 'budget.csv').read_text().splitlines()
    assert lines[1].split(',')[5] == 'optimal_epsilon'
    assert float(lines[3].split(',')[5]) == pytest.approx(np.sqrt(0.12), rel=1e-6)


def test_run_budget_defaults_to_worst_correlation(tmp_path):
    config = make_config(tmp_path)
    requirement, = experiments.run_budget(config, deltas=(0.1,))
    assert requirement.f_abs == pytest.approx(experiments.Experiment(config).max_systematic_f())


def test_random_singular_state_builder(tmp_path):
    state = experiments.build_state(make_config(tmp_path, state='random-singular', channel_seed=4))
    assert state.singular()
    assert not experiments.build_state(make_config(tmp_path, state='random', channel_seed=4)).singular()


def test_run_pointer_laws(tmp_path):
    summary = experiments.run_pointer_laws(make_config(tmp_path), runs=30)
    assert summary['two_pointer_exponent'] == pytest.approx(6.0, abs=0.5)
    assert summary['single_pointer_exponent'] == pytest.approx(4.0, abs=0.5)
    assert summary['max_abs_f'] <= 1.0 / 12.0 + 1e-12
    assert len((tmp_path / 'pointer_laws.csv').read_text().splitlines()) == 32
