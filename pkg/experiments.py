"""
Experiment services behind the CLI verbs.

Each service takes a validated ExperimentConfig, runs the simulation and
writes its CSV artifacts through ArtifactRepository.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from artifact_repository import ArtifactRepository
from channel_reconstruction import affine_dynamics, reconstruct_from_covariances, recover_M
from covariance_estimator import (
    CovariancePair, SamplingPlan, bias_limited_epsilon2, exact_covariances, optimal_epsilon, required_trials,
    trial_requirement
)
from exceptions import ConfigError, DimensionMismatchError, SearchExhaustedError
from gaussian_channel import (
    check_channel_validity, gaussian_accounting, gaussian_covariances, lossy_channel, noisy_moments,
    random_gaussian_channel, random_gaussian_state, recover_affine_gaussian, recovery_error, squeezed_state,
    symplectic_eigenvalues, thermal_state
)
from models import (
    Budget, ChannelName, DensityState, ExperimentConfig, GaussianChannelTruth, GaussianState, KrausChannel,
    MeasurementMode, Operator, OperatorBasis, PointerConfig, ProtocolRun, ReconstructionResult, RunRecord, StateKind,
    TrialRequirement
)
from operator_core import (
    amplitude_damping, basis_for, depolarizing, identity_channel, maximally_mixed, parse_state_matrix,
    phase_damping, random_channel, random_singular_state, random_state, rotation_channel, structure_tensors,
    thermal_state as thermal_density
)
from standard_tomography import baseline_settings, standard_estimate
from tomography_config import __version__
from weak_measurement import (
    anticommutator_expectation, product_expectation, run_two_pointer, single_pointer_expectations, systematic_f
)

logger = logging.getLogger(__name__)

CHECKPOINTS = (25, 50, 100, 200, 400, 800, 1600, 3200, 6400, 10000)
FIG2_TRIALS = (400, 3000)
FIG2_REPETITIONS = 1000
FIG2_ENTRIES = (('M_12', 0, 1), ('M_11', 0, 0), ('M_33', 2, 2))
FIG3_COUPLINGS = (2.0 / 9.0, 4.0 / 9.0, 6.0 / 9.0)
FIG3_SEEDS = 20
COMPARE_DELTAS = (0.2, 0.1, 0.05)
COMPARE_SEEDS = 20
GAUSSIAN_TRIALS = (100, 400, 1600, 6400, 25600)
BUDGET_DELTAS = (0.1, 0.05, 0.025, 0.01)
POINTER_LAW_COUPLINGS = (0.1, 0.14, 0.2, 0.28)
SINGLE_POINTER_COUPLINGS = (0.05, 0.1, 0.2, 0.3)
POINTER_LAW_RUNS = 100
HISTOGRAM_BINS = 30


def derive_seed(master_seed: int, index: int) -> int:
    """Per-repetition seed, independent of scheduling"""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def geometric_grid(start: int, stop: int, factor: float = 1.25) -> List[int]:
    count = int(np.ceil(np.log(stop / start) / np.log(factor))) + 1
    return sorted({int(round(start * factor ** k)) for k in range(count)})


SCALING_GRID = tuple(geometric_grid(25, 250000))
BASELINE_GRID = tuple(geometric_grid(5, 40000))


def entry_labels(size: int) -> List[str]:
    return [f"M_{i + 1}{j + 1}" if size < 10 else f"M_{i + 1}_{j + 1}" for i in range(size) for j in range(size)]


def _map(function: Callable, tasks: Sequence, workers: int) -> List:
    """Map over tasks in order, on a process pool when workers > 1"""
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(function, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [function(task) for task in tasks]


# Builders

def build_channel(config: ExperimentConfig) -> KrausChannel:
    name = config.channel
    if name == ChannelName.IDENTITY:
        return identity_channel(config.dimension)
    if name == ChannelName.PHASE_DAMPING:
        return phase_damping(config.channel_param)
    if name == ChannelName.AMPLITUDE_DAMPING:
        return amplitude_damping(config.channel_param)
    if name == ChannelName.DEPOLARIZING:
        return depolarizing(config.channel_param, config.dimension)
    if name == ChannelName.ROTATION:
        return rotation_channel(config.channel_axis, config.channel_param)
    return random_channel(config.dimension, config.channel_seed)


def build_state(config: ExperimentConfig) -> DensityState:
    if config.state == StateKind.MAXIMALLY_MIXED:
        return maximally_mixed(config.dimension)
    if config.state == StateKind.THERMAL:
        return thermal_density(config.beta, config.dimension, config.omega)
    if config.state == StateKind.EXPLICIT:
        state = parse_state_matrix(config.state_matrix or "")
        if state.dim != config.dimension:
            raise DimensionMismatchError(f"state_matrix has dimension {state.dim}, config says {config.dimension}")
        return state
    if config.state == StateKind.RANDOM_SINGULAR:
        return random_singular_state(config.dimension, config.channel_seed + 1)
    return random_state(config.dimension, config.channel_seed + 1)


def build_basis(config: ExperimentConfig) -> OperatorBasis:
    return basis_for(config.resolved_basis, config.dimension)


class Experiment:
    """State, channel, basis and exact reference for one configuration"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.state = build_state(config)
        self.channel = build_channel(config)
        self.basis = build_basis(config)
        self.tensors = structure_tensors(self.basis)
        self.truth = affine_dynamics(self.channel, self.basis)
        self._plans: Dict[float, SamplingPlan] = {}
        logger.info(
            f"[EXPERIMENT] {config.channel.value}({config.channel_param}) on {config.state.value} state, "
            f"D={config.dimension}, mode={config.mode.value}"
        )

    @property
    def m_theory(self) -> np.ndarray:
        return self.truth.M

    @property
    def sampled(self) -> bool:
        return self.config.mode != MeasurementMode.EXACT

    def plan(self, epsilon2: Optional[float] = None) -> SamplingPlan:
        eps2 = self.config.epsilon2 if epsilon2 is None else epsilon2
        if eps2 not in self._plans:
            self._plans[eps2] = SamplingPlan(self.state, self.channel, self.basis,
                                             PointerConfig.from_epsilon_squared(eps2), self.config.mode)
        return self._plans[eps2]

    def budget(self, trials: Optional[int] = None, epsilon2: Optional[float] = None) -> Budget:
        eps2 = self.config.epsilon2 if epsilon2 is None else epsilon2
        return Budget(
            delta=self.config.delta,
            epsilon=float(np.sqrt(eps2)),
            trials_per_correlation=self.config.trials if trials is None else trials,
            mean_trials=self.config.mean_trials,
            correct_systematic=self.config.correct_systematic,
        )

    def covariances(self, seed: int, trials: Optional[int] = None, epsilon2: Optional[float] = None) -> CovariancePair:
        if not self.sampled:
            return exact_covariances(self.state, self.channel, self.basis)
        return self.plan(epsilon2).sample(seed, self.budget(trials, epsilon2))

    def running(self, seed: int, checkpoints: Sequence[int],
                epsilon2: Optional[float] = None) -> List[Tuple[int, np.ndarray]]:
        """(n, M estimate) at each checkpoint"""
        if not self.sampled:
            M = recover_M(*exact_covariances(self.state, self.channel, self.basis))
            return [(n, M) for n in sorted(checkpoints)]
        runs = self.plan(epsilon2).running_covariances(seed, checkpoints, self.config.mean_trials,
                                                       self.config.correct_systematic)
        return [(n, recover_M(cov_t, cov_0)) for n, cov_t, cov_0 in runs]

    def m_readout_std(self, trials: int, epsilon2: Optional[float] = None) -> np.ndarray:
        """Predicted spread of each M entry at N trials, from the correlation readout noise only"""
        plan = self.plan(epsilon2)
        _, cov_0 = plan.limit_covariances(self.config.correct_systematic)
        weights = np.linalg.inv(cov_0.sigma)
        # M_ij = Σ_k σ_t[k, i]·(σ00⁻¹)[k, j]
        return np.sqrt((plan.readout_std(trials).T ** 2) @ (weights ** 2))

    def reconstruct(self, seed: int) -> ReconstructionResult:
        cov_t, cov_0 = self.covariances(seed)
        return reconstruct_from_covariances(cov_t, cov_0, self.basis, self.tensors,
                                            delta=self.config.delta if self.sampled else None,
                                            truth=self.channel, m_true=self.m_theory)

    def max_systematic_f(self) -> float:
        """Largest |f| over all correlations of the basis"""
        pointer = PointerConfig.from_epsilon_squared(self.config.epsilon2)
        observables = [Operator.hermitian_from(m) for m in self.basis.matrices[1:]]
        return float(max(
            abs(systematic_f(ProtocolRun(channel=self.channel, obs_early=bi, obs_late=bj,
                                         state=self.state, config=pointer)))
            for bi in observables for bj in observables
        ))


@lru_cache(maxsize=4)
def _experiment_for(config_json: str) -> Experiment:
    return Experiment(ExperimentConfig.model_validate_json(config_json))


def delta_norms(M: np.ndarray, reference: np.ndarray) -> Tuple[float, float]:
    """(spectral, max-entry) norms of M − reference"""
    difference = M - reference
    return float(np.linalg.norm(difference, ord=2)), float(np.max(np.abs(difference)))


# estimate

def estimate_once(experiment: Experiment, seed: int) -> Tuple[RunRecord, ReconstructionResult]:
    started = time.perf_counter()
    result = experiment.reconstruct(seed)
    elapsed = time.perf_counter() - started
    spectral, max_entry = delta_norms(result.dynamics.M, experiment.m_theory)
    within = int(np.sum(np.abs(result.dynamics.M - experiment.m_theory) < experiment.config.delta))
    record = RunRecord(
        config=experiment.config,
        seed=seed,
        m_estimate=result.dynamics.M.tolist(),
        m_theory=experiment.m_theory.tolist(),
        chi_estimate=result.dynamics.chi.tolist(),
        delta_m_spectral=spectral,
        delta_m_max=max_entry,
        entries_within_delta=within,
        kraus_rank=result.channel.rank,
        wall_time_s=elapsed,
        version=__version__,
    )
    return record, result


def _estimate_task(task: Tuple[str, int]) -> List[float]:
    config_json, seed = task
    experiment = _experiment_for(config_json)
    return recover_M(*experiment.covariances(seed)).reshape(-1).tolist()


def run_estimate(config: ExperimentConfig) -> RunRecord:
    """Reconstruct the channel once and write m_matrix, kraus and diagnostics CSVs"""
    experiment = Experiment(config)
    record, result = estimate_once(experiment, config.seed)
    repository = ArtifactRepository(config.output_dir, config)
    size = experiment.basis.size - 1

    repository.write_csv('m_matrix.csv', entry_labels(size), [result.dynamics.M.reshape(-1).tolist()])
    kraus_rows = [
        [mu, r, c, float(K[r, c].real), float(K[r, c].imag)]
        for mu, K in enumerate(result.channel.matrices)
        for r in range(K.shape[0]) for c in range(K.shape[1])
    ]
    repository.write_csv('kraus.csv', ['kraus', 'row', 'col', 'real', 'imag'], kraus_rows)

    diagnostics = result.diagnostics
    metrics = [
        ['delta_m_spectral', record.delta_m_spectral],
        ['delta_m_max', record.delta_m_max],
        ['entries_within_delta', record.entries_within_delta],
        ['min_singular_value', diagnostics.min_singular_value],
        ['completeness_defect', diagnostics.completeness_defect],
        ['clamped_eigenvalues', diagnostics.clamped_eigenvalues],
        ['gram_residual', diagnostics.gram_residual],
        ['action_error', diagnostics.action_error],
        ['solver', diagnostics.solver.value],
        ['kraus_rank', record.kraus_rank],
    ]
    metrics += [[f'gram_eigenvalue_{k}', value] for k, value in enumerate(diagnostics.gram_eigenvalues)]
    metrics += [[f'chi_{k + 1}', value] for k, value in enumerate(record.chi_estimate)]
    repository.write_csv('diagnostics.csv', ['metric', 'value'], metrics)
    repository.write_json('run_record.json', record)

    if config.repetitions > 1:
        seeds = [derive_seed(config.seed, rep) for rep in range(config.repetitions)]
        estimates = _map(_estimate_task, [(config.model_dump_json(), seed) for seed in seeds], config.workers)
        rows = [[rep, seed] + values for rep, (seed, values) in enumerate(zip(seeds, estimates))]
        repository.write_csv('m_repetitions.csv', ['repetition', 'seed'] + entry_labels(size), rows)

    logger.info(f"[ESTIMATE] ΔM={record.delta_m_spectral:.4f}, {record.entries_within_delta}/{size * size} "
                f"entries within δ={config.delta}")
    return record


# fig1

def run_fig1(config: ExperimentConfig, checkpoints: Sequence[int] = CHECKPOINTS) -> List[List[float]]:
    """Running M estimates against cumulative trials per correlation"""
    experiment = Experiment(config)
    size = experiment.basis.size - 1
    rows = []
    for n, M in experiment.running(config.seed, checkpoints):
        spectral, max_entry = delta_norms(M, experiment.m_theory)
        rows.append([n] + M.reshape(-1).tolist() + [spectral, max_entry])
    ArtifactRepository(config.output_dir, config).write_csv(
        'fig1.csv', ['N'] + entry_labels(size) + ['delta_m_spectral', 'delta_m_max'], rows
    )
    return rows


# fig2

def _fig2_task(task: Tuple[str, int, int]) -> List[float]:
    config_json, trials, seed = task
    experiment = _experiment_for(config_json)
    M = recover_M(*experiment.covariances(seed, trials))
    return [float(M[i, j]) for _, i, j in FIG2_ENTRIES]


def run_fig2(config: ExperimentConfig, trials_list: Sequence[int] = FIG2_TRIALS,
             repetitions: Optional[int] = None) -> Dict[int, Dict[str, Tuple[float, float]]]:
    """Histograms of M_12, M_11, M_33 over R independent repetitions"""
    reps = repetitions or (config.repetitions if config.repetitions > 1 else FIG2_REPETITIONS)
    logger.info(f"[FIG2] R={reps}, N∈{list(trials_list)}, ε²={config.epsilon2:.4f}")
    config_json = config.model_dump_json()
    experiment = _experiment_for(config_json)
    if experiment.basis.size - 1 < 3:
        raise ConfigError("Histogram entries need at least three basis observables")

    samples, histogram, summary = [], [], {}
    summary_rows = []
    for trials in trials_list:
        seeds = [derive_seed(config.seed, rep) for rep in range(reps)]
        values = np.array(_map(_fig2_task, [(config_json, trials, seed) for seed in seeds], config.workers))
        samples += [[trials, rep, seed] + list(row) for rep, (seed, row) in enumerate(zip(seeds, values))]
        summary[trials] = {}
        model_std = experiment.m_readout_std(trials)
        for column, (label, i, j) in enumerate(FIG2_ENTRIES):
            entry = values[:, column]
            mean = float(entry.mean())
            std = float(entry.std(ddof=1)) if reps > 1 else 0.0
            summary[trials][label] = (mean, std)
            summary_rows.append([trials, label, experiment.m_theory[i, j], mean, std, model_std[i, j],
                                 config.epsilon2])
            counts, edges = np.histogram(entry, bins=HISTOGRAM_BINS)
            histogram += [[trials, label, edges[k], edges[k + 1], int(counts[k])] for k in range(len(counts))]
            logger.info(f"[FIG2] N={trials} {label} = {mean:.3f} ± {std:.3f} (readout model {model_std[i, j]:.3f})")

    repository = ArtifactRepository(config.output_dir, config)
    repository.write_csv('fig2_samples.csv', ['N', 'repetition', 'seed'] + [e[0] for e in FIG2_ENTRIES], samples)
    repository.write_csv('fig2_histogram.csv', ['N', 'entry', 'bin_low', 'bin_high', 'count'], histogram)
    summary_header = ['N', 'entry', 'theory', 'mean', 'std', 'model_std', 'epsilon2']
    repository.write_csv('fig2_summary.csv', summary_header, summary_rows)
    return summary


# fig3

def _fig3_task(task: Tuple[str, float, int, Tuple[int, ...]]) -> List[Tuple[float, float]]:
    config_json, epsilon2, seed, checkpoints = task
    experiment = _experiment_for(config_json)
    return [delta_norms(M, experiment.m_theory) for _, M in experiment.running(seed, checkpoints, epsilon2)]


def run_fig3(config: ExperimentConfig, couplings: Sequence[float] = FIG3_COUPLINGS, seeds: int = FIG3_SEEDS,
             checkpoints: Sequence[int] = CHECKPOINTS) -> Dict[float, Dict[str, List[float]]]:
    """Seed-averaged ΔM against N for several couplings, plus the N → ∞ plateau"""
    config_json = config.model_dump_json()
    experiment = _experiment_for(config_json)
    counts = tuple(sorted(checkpoints))
    rows, plateau_rows, curves = [], [], {}
    for epsilon2 in couplings:
        tasks = [(config_json, epsilon2, derive_seed(config.seed, s), counts) for s in range(seeds)]
        norms = np.array(_map(_fig3_task, tasks, config.workers))  # (seeds, checkpoints, 2)
        spectral_mean = norms[:, :, 0].mean(axis=0)
        spectral_std = norms[:, :, 0].std(axis=0)
        max_mean = norms[:, :, 1].mean(axis=0)
        for k, n in enumerate(counts):
            rows.append([epsilon2, n, spectral_mean[k], spectral_std[k], max_mean[k]])

        if experiment.sampled:
            cov_t, cov_0 = experiment.plan(epsilon2).limit_covariances(config.correct_systematic)
            plateau = delta_norms(recover_M(cov_t, cov_0), experiment.m_theory)
        else:
            plateau = (0.0, 0.0)
        plateau_rows.append([epsilon2, plateau[0], plateau[1]])
        curves[epsilon2] = {'delta_m_spectral': spectral_mean.tolist(), 'plateau': [plateau[0]]}
        logger.info(f"[FIG3] ε²={epsilon2:.4f}: ΔM(N={counts[0]})={spectral_mean[0]:.3f}, "
                    f"ΔM(N={counts[-1]})={spectral_mean[-1]:.3f}, plateau={plateau[0]:.3f}")

    repository = ArtifactRepository(config.output_dir, config)
    repository.write_csv('fig3.csv', ['epsilon2', 'N', 'delta_m_spectral', 'delta_m_spectral_std', 'delta_m_max'],
                         rows)
    repository.write_csv('fig3_plateau.csv', ['epsilon2', 'delta_m_spectral', 'delta_m_max'], plateau_rows)
    return curves


# budget

def run_budget(config: ExperimentConfig, deltas: Sequence[float] = BUDGET_DELTAS,
               f_abs: Optional[float] = None) -> List[TrialRequirement]:
    """Trial counts and couplings for each δ; |f| defaults to the worst correlation of the configured run"""
    experiment = Experiment(config)
    f = experiment.max_systematic_f() if f_abs is None else f_abs
    norm = experiment.basis.max_norm
    requirements, rows = [], []
    for delta in deltas:
        requirement = trial_requirement(delta, f, norm)
        requirements.append(requirement)
        rows.append([delta, f, requirement.trials, requirement.bound_trials, norm,
                     optimal_epsilon(delta, f, norm), bias_limited_epsilon2(delta, f)])
        logger.info(f"[BUDGET] δ={delta}: N={requirement.trials} (bound {requirement.bound_trials}) at |f|={f:.4f}")
    ArtifactRepository(config.output_dir, config).write_csv(
        'budget.csv',
        ['delta', 'f_abs', 'trials', 'bound_trials', 'basis_norm', 'optimal_epsilon', 'bias_limited_epsilon2'],
        rows,
    )
    return requirements


# pointer-laws

def _log_slope(couplings: Sequence[float], residuals: Sequence[float]) -> float:
    if min(residuals) <= 1e-14:
        return float('nan')
    return float(np.polyfit(np.log(couplings), np.log(residuals), 1)[0])


def run_pointer_laws(config: ExperimentConfig, runs: int = POINTER_LAW_RUNS) -> Dict[str, float]:
    """Residual exponents of the two-pointer expansion and the single-pointer average on random runs"""
    rng = np.random.default_rng(config.seed)
    observables = [Operator.hermitian_from(m) for m in build_basis(config).matrices[1:]]
    logger.info(f"[POINTER] {runs} random runs at D={config.dimension}")

    def run_at(channel, state, early, late, epsilon):
        return ProtocolRun(channel=channel, obs_early=early, obs_late=late, state=state,
                           config=PointerConfig(epsilon=float(epsilon)))

    rows = []
    for index in range(runs):
        channel, state = random_channel(config.dimension, rng), random_state(config.dimension, rng)
        i, j = rng.integers(0, len(observables), size=2)
        early, late = observables[i], observables[j]
        two_pointer, worst_f = [], 0.0
        for epsilon in POINTER_LAW_COUPLINGS:
            run = run_at(channel, state, early, late, epsilon)
            f = systematic_f(run)
            worst_f = max(worst_f, abs(f))
            two_pointer.append(abs(product_expectation(run_two_pointer(run))
                                   - 0.5 * epsilon ** 2 * anticommutator_expectation(run) - epsilon ** 4 * f))
        single_pointer = []
        for epsilon in SINGLE_POINTER_COUPLINGS:
            run = run_at(channel, state, early, late, epsilon)
            average = float(np.mean(single_pointer_expectations(run)))
            single_pointer.append(abs(average - epsilon ** 2 * anticommutator_expectation(run)))
        rows.append([index, int(i) + 1, int(j) + 1, _log_slope(POINTER_LAW_COUPLINGS, two_pointer), worst_f,
                     _log_slope(SINGLE_POINTER_COUPLINGS, single_pointer)])

    table = np.array([row[3:] for row in rows], dtype=float)
    summary = {
        'two_pointer_exponent': float(np.nanmedian(table[:, 0])),
        'max_abs_f': float(table[:, 1].max()),
        'single_pointer_exponent': float(np.nanmedian(table[:, 2])),
    }
    repository = ArtifactRepository(config.output_dir, config)
    repository.write_csv('pointer_laws.csv', ['run', 'early', 'late', 'two_pointer_exponent', 'max_abs_f',
                                              'single_pointer_exponent'], rows)
    repository.write_csv('pointer_laws_summary.csv', ['metric', 'value'], [[k, v] for k, v in summary.items()])
    logger.info(f"[POINTER] exponents {summary['two_pointer_exponent']:.2f} (two-pointer), "
                f"{summary['single_pointer_exponent']:.2f} (single-pointer), max |f|={summary['max_abs_f']:.4f}")
    return summary


# compare-standard

def meets_target(estimates: np.ndarray, reference: np.ndarray, delta: float) -> bool:
    """At least all-but-one entries have RMS error below δ over the repetitions"""
    rms = np.sqrt(np.mean((estimates - reference) ** 2, axis=0))
    return int(np.sum(rms < delta)) >= rms.size - 1


def _temporal_search_task(task: Tuple[str, int, Tuple[int, ...], Optional[float]]) -> List[List[float]]:
    config_json, seed, grid, epsilon2 = task
    experiment = _experiment_for(config_json)
    return [M.reshape(-1).tolist() for _, M in experiment.running(seed, grid, epsilon2)]


def search_temporal_trials(config: ExperimentConfig, delta: float, seeds: int,
                           grid: Optional[Sequence[int]] = None, epsilon2: Optional[float] = None) -> Optional[int]:
    """Smallest N on the grid meeting the target at the given (default: configured) coupling"""
    config_json = config.model_dump_json()
    experiment = _experiment_for(config_json)
    counts = tuple(grid or geometric_grid(100, 40000))
    tasks = [(config_json, derive_seed(config.seed, s), counts, epsilon2) for s in range(seeds)]
    estimates = np.array(_map(_temporal_search_task, tasks, config.workers))  # (seeds, grid, K²)
    reference = experiment.m_theory.reshape(-1)
    for k, n in enumerate(counts):
        if meets_target(estimates[:, k, :], reference, delta):
            return n
    return None


def search_baseline_shots(channel: KrausChannel, reference: np.ndarray, delta: float, seeds: int, master_seed: int,
                          grid: Optional[Iterable[int]] = None) -> Optional[int]:
    """Smallest shots per setting meeting the target"""
    for shots in grid or geometric_grid(5, 40000):
        estimates = np.array([standard_estimate(channel, shots, derive_seed(master_seed, s)).M.reshape(-1)
                              for s in range(seeds)])
        if meets_target(estimates, reference.reshape(-1), delta):
            return shots
    return None


def scaling_exponent(deltas: Sequence[float], totals: Sequence[float]) -> float:
    """Slope of log(total) against log(δ)"""
    return float(np.polyfit(np.log(deltas), np.log(totals), 1)[0])


def run_compare_standard(config: ExperimentConfig, deltas: Sequence[float] = COMPARE_DELTAS) -> Dict[str, float]:
    """
    Total measurements to reach the δ target: temporal correlations vs prepare-and-measure.

    Both δ-scaling exponents are fitted to simulated search results. The temporal
    search at each δ runs at the coupling from bias_limited_epsilon2, so the
    systematic readout bias shrinks along with δ.
    """
    experiment = _experiment_for(config.model_dump_json())
    if experiment.basis.dim != 2:
        raise ConfigError("The standard tomography baseline is defined for qubits")
    if not experiment.sampled:
        raise ConfigError("compare-standard needs a sampled measurement mode")
    seeds = config.repetitions if config.repetitions > 1 else COMPARE_SEEDS
    correlations = (experiment.basis.size - 1) ** 2
    settings = baseline_settings()
    rows = []

    temporal_n = search_temporal_trials(config, config.delta, seeds)
    if temporal_n is None:
        logger.warning(f"[COMPARE] Temporal method never reached δ={config.delta} at ε²={config.epsilon2:.4f}")
    else:
        rows.append(['temporal-search', config.delta, config.epsilon2, temporal_n, correlations,
                     temporal_n * correlations])

    f_abs = experiment.max_systematic_f()
    temporal_totals = []
    for delta in deltas:
        epsilon2 = bias_limited_epsilon2(delta, f_abs)
        n = search_temporal_trials(config, delta, seeds, SCALING_GRID, epsilon2)
        if n is None:
            raise SearchExhaustedError(f"Temporal method never reached δ={delta} at ε²={epsilon2:.4f}",
                                       delta=delta, largest_tried=SCALING_GRID[-1])
        temporal_totals.append(n * correlations)
        rows.append(['temporal-scaling', delta, epsilon2, n, correlations, n * correlations])
        budget = required_trials(delta, f_abs)
        rows.append(['temporal-budget', delta, float('nan'), budget, correlations, budget * correlations])
        logger.info(f"[COMPARE] δ={delta}: temporal needs N={n} at ε²={epsilon2:.4f} (budget formula {budget})")

    baseline_shots = {}
    for delta in sorted(set(deltas) | {config.delta}, reverse=True):
        shots = search_baseline_shots(experiment.channel, experiment.m_theory, delta, seeds, config.seed,
                                      BASELINE_GRID)
        if shots is None:
            raise SearchExhaustedError(f"Baseline never reached δ={delta} on the search grid",
                                       delta=delta, largest_tried=BASELINE_GRID[-1])
        baseline_shots[delta] = shots
        rows.append(['standard', delta, float('nan'), shots, settings, shots * settings])
        logger.info(f"[COMPARE] δ={delta}: baseline needs {shots} shots per setting")

    result = {
        'temporal_total': float(temporal_n * correlations) if temporal_n else float('nan'),
        'standard_total': float(baseline_shots[config.delta] * settings),
        'temporal_exponent': scaling_exponent(deltas, temporal_totals),
        'standard_exponent': scaling_exponent(deltas, [baseline_shots[d] * settings for d in deltas]),
    }
    repository = ArtifactRepository(config.output_dir, config)
    repository.write_csv('compare_standard.csv',
                         ['method', 'delta', 'epsilon2', 'per_setting', 'settings', 'total'], rows)
    repository.write_csv('compare_scaling.csv', ['method', 'exponent'], [
        ['temporal', result['temporal_exponent']],
        ['standard', result['standard_exponent']],
    ])
    return result


# gaussian-demo

def build_gaussian_state(config: ExperimentConfig) -> GaussianState:
    mean_photons = 1.0 / np.expm1(config.beta * config.omega)
    if config.state == StateKind.RANDOM:
        return random_gaussian_state(config.modes, config.channel_seed + 1)
    if config.squeezing > 0:
        return squeezed_state(config.modes, config.squeezing, mean_photons)
    return thermal_state(config.modes, mean_photons)


def build_gaussian_channel(config: ExperimentConfig) -> GaussianChannelTruth:
    """amplitude-damping maps to the bosonic loss channel with η = 1 − γ; anything else is random"""
    if config.channel == ChannelName.AMPLITUDE_DAMPING:
        mean_photons = 1.0 / np.expm1(config.beta * config.omega)
        return lossy_channel(config.modes, 1.0 - config.channel_param, mean_photons)
    return random_gaussian_channel(config.modes, config.channel_seed)


def run_gaussian_demo(config: ExperimentConfig, trials_list: Sequence[int] = GAUSSIAN_TRIALS) -> Dict[str, float]:
    """Gaussian channel on a thermal, squeezed or random state: exact and noisy recovery"""
    n_modes = config.modes
    state = build_gaussian_state(config)
    channel = build_gaussian_channel(config)
    cov_t, cov_0 = gaussian_covariances(state, channel)

    exact_error = recovery_error(recover_affine_gaussian(cov_t, cov_0), channel)
    seeds = config.repetitions if config.repetitions > 1 else COMPARE_SEEDS
    rows, means = [], []
    for trials in trials_list:
        errors = [
            recovery_error(recover_affine_gaussian(
                noisy_moments(cov_t, config.epsilon, trials, derive_seed(config.seed, s)), cov_0), channel)
            for s in range(seeds)
        ]
        means.append(float(np.mean(errors)))
        rows.append([trials, means[-1], float(np.std(errors))])
    slope = float(np.polyfit(np.log(trials_list), np.log(means), 1)[0])

    accounting = gaussian_accounting(n_modes)
    summary = {
        'exact_error': exact_error,
        'noisy_slope': slope,
        'min_symplectic_eigenvalue': symplectic_eigenvalues(state.cov)[-1],
        'channel_valid': float(check_channel_validity(channel)),
        'correlation_experiments': float(accounting['correlation_experiments']),
    }
    repository = ArtifactRepository(config.output_dir, config)
    repository.write_csv('gaussian.csv', ['N', 'error_mean', 'error_std'], rows)
    repository.write_csv('gaussian_summary.csv', ['metric', 'value'], [[k, v] for k, v in summary.items()])
    logger.info(f"[GAUSSIAN] exact error {exact_error:.2e}, noisy slope {slope:.3f}")
    return summary
