"""
Temporal covariance matrices: exact evaluation, sampled estimation and the
trial budget.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import ConfigError, DimensionMismatchError
from models import (
    Budget, DensityState, KrausChannel, MeasurementMode, Operator, OperatorBasis, OutcomeDistribution, PointerConfig,
    ProtocolRun, Provenance, ProvenanceKind, TemporalCovariance, TrialRequirement
)
from operator_core import anticommutator, channel_action, expectation, heisenberg_action
from tomography_config import tomography_config
from weak_measurement import (
    product_expectation, product_variance, run_two_pointer, sample_products, sample_single_pointer,
    single_pointer_expectations, systematic_f
)

logger = logging.getLogger(__name__)

# Stream tags for per-correlation seeding
TAG_CORRELATION = 0
TAG_MEAN_EARLY = 1
TAG_MEAN_LATE = 2
TAG_EQUAL_TIME = 3
TAG_SINGLE_POINTER_B = 4

CovariancePair = Tuple[TemporalCovariance, TemporalCovariance]


def _check_dims(state: DensityState, channel: KrausChannel, basis: OperatorBasis) -> None:
    if not state.dim == channel.dim == basis.dim:
        raise DimensionMismatchError(
            f"State (D={state.dim}), channel (D={channel.dim}) and basis (D={basis.dim}) disagree"
        )


def _observables(basis: OperatorBasis) -> np.ndarray:
    return basis.matrices[1:]


def _two_time_moments(rho: np.ndarray, early: np.ndarray, late: np.ndarray) -> np.ndarray:
    """Tr(ρ{B_i, L_j}) for stacks of early and late operators"""
    forward = np.einsum('st,itu,jus->ij', rho, early, late)
    backward = np.einsum('st,jtu,ius->ij', rho, late, early)
    return np.real(forward + backward)


def exact_covariance(state: DensityState, channel: KrausChannel, basis: OperatorBasis) -> TemporalCovariance:
    """σ_ij(t1,t2) = Tr(ρ{B_i, B_j(t2)}) − 2⟨B_i⟩⟨B_j(t2)⟩"""
    _check_dims(state, channel, basis)
    rho = state.matrix
    early = _observables(basis)
    late = np.stack([heisenberg_action(channel, b) for b in early])
    mean_early = np.array([expectation(state, b) for b in early])
    mean_late = np.array([expectation(state, b) for b in late])
    sigma = _two_time_moments(rho, early, late) - 2.0 * np.outer(mean_early, mean_late)
    return TemporalCovariance(
        dim_ops=len(early),
        sigma=sigma,
        mean_early=mean_early,
        mean_late=mean_late,
        provenance=Provenance(kind=ProvenanceKind.EXACT),
    )


def exact_equal_time_covariance(state: DensityState, basis: OperatorBasis) -> TemporalCovariance:
    """σ_ij(t0,t0); symmetric"""
    if state.dim != basis.dim:
        raise DimensionMismatchError(f"State (D={state.dim}) and basis (D={basis.dim}) disagree")
    rho = state.matrix
    ops = _observables(basis)
    means = np.array([expectation(state, b) for b in ops])
    sigma = _two_time_moments(rho, ops, ops) - 2.0 * np.outer(means, means)
    sigma = 0.5 * (sigma + sigma.T)
    return TemporalCovariance(
        dim_ops=len(ops),
        sigma=sigma,
        mean_early=means,
        mean_late=means,
        provenance=Provenance(kind=ProvenanceKind.EXACT),
        equal_time=True,
    )


def exact_covariances(state: DensityState, channel: KrausChannel, basis: OperatorBasis) -> CovariancePair:
    """(σ(t1,t2), σ(t1,t1))"""
    return exact_covariance(state, channel, basis), exact_equal_time_covariance(state, basis)


class _Projective:
    """Spectral decomposition of one observable in one state"""

    def __init__(self, matrix: np.ndarray, rho: np.ndarray):
        values, vectors = np.linalg.eigh(matrix)
        probs = np.real(np.einsum('ki,kl,li->i', vectors.conj(), rho, vectors))
        probs = np.clip(probs, 0.0, None)
        self.values = values
        self.probs = probs / probs.sum()
        self.mean = float(np.dot(self.values, self.probs))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.values[rng.choice(len(self.values), size=n, p=self.probs)]


def _stream(seed: int, tag: int, i: int = 0, j: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tag, i, j]))


def _prefix_means(draws: np.ndarray, counts: Sequence[int]) -> np.ndarray:
    """Means of the first n draws for every n in counts (last axis is trials)"""
    sums = np.cumsum(draws, axis=-1, dtype=float)
    index = np.asarray(counts) - 1
    return sums[..., index] / np.asarray(counts, dtype=float)


class SamplingPlan:
    """Exact readout distributions for every correlation, ready to be sampled.

    Distributions do not depend on the seed, so one plan serves every
    repetition of an experiment.
    """

    def __init__(self, state: DensityState, channel: KrausChannel, basis: OperatorBasis,
                 pointer: PointerConfig, mode: MeasurementMode = MeasurementMode.TWO_POINTER):
        _check_dims(state, channel, basis)
        if mode == MeasurementMode.EXACT:
            raise ConfigError("A sampling plan needs a sampled measurement mode")
        self.state = state
        self.channel = channel
        self.basis = basis
        self.pointer = pointer
        self.mode = mode
        self.size = basis.size - 1

        logger.info(f"[PLAN] Building {mode.value} plan: D={basis.dim}, K={self.size}, ε={pointer.epsilon:.4f}")
        observables = [Operator.hermitian_from(m) for m in _observables(basis)]
        self.runs = [
            [ProtocolRun(channel=channel, obs_early=bi, obs_late=bj, state=state, config=pointer)
             for bj in observables]
            for bi in observables
        ]

        k = self.size
        self.distributions: List[List[OutcomeDistribution]] = []
        self.single_pointer_means = np.zeros((k, k, 2))
        if mode == MeasurementMode.TWO_POINTER:
            self.distributions = [[run_two_pointer(run) for run in row] for row in self.runs]
            self.pointer_means = np.array([[product_expectation(d) for d in row] for row in self.distributions])
        else:
            self.single_pointer_means = np.array([[single_pointer_expectations(run) for run in row]
                                                  for row in self.runs])
            self.pointer_means = self.single_pointer_means.mean(axis=2)

        rho = state.matrix
        rho_late = channel_action(channel, rho)
        rho_late = 0.5 * (rho_late + rho_late.conj().T)
        ops = _observables(basis)
        self.early_means = [_Projective(b, rho) for b in ops]
        self.late_means = [_Projective(b, rho_late) for b in ops]
        self.equal_time = {
            (i, j): _Projective(anticommutator(ops[i], ops[j]), rho)
            for i in range(k) for j in range(i, k)
        }
        self._correction: Optional[np.ndarray] = None

    @property
    def epsilon(self) -> float:
        return self.pointer.epsilon

    def correction(self) -> np.ndarray:
        """2ε²·f_ij, subtracted from σ̂_ij when correcting the systematic error"""
        if self._correction is None:
            f = np.array([[systematic_f(run) for run in row] for row in self.runs])
            self._correction = 2.0 * self.epsilon ** 2 * f
        return self._correction

    def _provenance(self, kind: ProvenanceKind, n: Optional[int], n_mean: Optional[int],
                    seed: Optional[int], corrected: bool) -> Provenance:
        k = self.size
        return Provenance(
            kind=kind,
            mode=self.mode,
            trials_per_correlation=n,
            mean_trials=n_mean,
            epsilon=self.epsilon,
            seed=seed,
            corrected=corrected,
            correlation_experiments=k * k,
            mean_experiments=2 * k,
            equal_time_experiments=k * (k + 1) // 2,
        )

    def _apply_correction(self, correlation: np.ndarray, correct: bool) -> Tuple[np.ndarray, bool]:
        if not correct:
            return correlation, False
        if self.mode != MeasurementMode.TWO_POINTER:
            logger.warning("[PLAN] Systematic correction is only defined for the two-pointer protocol; skipped")
            return correlation, False
        return correlation - self.correction(), True

    def _covariances(self, correlation: np.ndarray, mean_early: np.ndarray, mean_late: np.ndarray,
                     equal_time: np.ndarray, provenance: Provenance) -> CovariancePair:
        k = self.size
        sigma_t = correlation - 2.0 * np.outer(mean_early, mean_late)
        sigma_0 = equal_time - 2.0 * np.outer(mean_early, mean_early)
        cov_t = TemporalCovariance(dim_ops=k, sigma=sigma_t, mean_early=mean_early,
                                   mean_late=mean_late, provenance=provenance)
        cov_0 = TemporalCovariance(dim_ops=k, sigma=sigma_0, mean_early=mean_early,
                                   mean_late=mean_early, provenance=provenance, equal_time=True)
        return cov_t, cov_0

    def limit_covariances(self, correct_systematic: bool = False) -> CovariancePair:
        """The N → ∞ limit of the estimator: exact readout statistics, no sampling noise"""
        k = self.size
        correlation = self.pointer_means * self._readout_scale()
        correlation, corrected = self._apply_correction(correlation, correct_systematic)
        mean_early = np.array([p.mean for p in self.early_means])
        mean_late = np.array([p.mean for p in self.late_means])
        equal_time = np.zeros((k, k))
        for (i, j), projective in self.equal_time.items():
            equal_time[i, j] = equal_time[j, i] = projective.mean
        provenance = self._provenance(ProvenanceKind.LIMIT, None, None, None, corrected)
        return self._covariances(correlation, mean_early, mean_late, equal_time, provenance)

    def _readout_scale(self) -> float:
        """Factor turning the pointer mean into Tr(ρ{B_i, B_j(t)})"""
        if self.mode == MeasurementMode.TWO_POINTER:
            return 2.0 / self.epsilon ** 2
        return 1.0 / self.epsilon ** 2

    def readout_std(self, trials: int) -> np.ndarray:
        """Standard error of each correlation entry of σ̂ from the pointer readout alone, at N trials"""
        if trials < 1:
            raise ValueError(f"Number of trials must be at least 1, got {trials}")
        if self.mode == MeasurementMode.TWO_POINTER:
            variance = np.array([[product_variance(d) for d in row] for row in self.distributions])
        else:
            # mean of two independent ±1 readouts
            variance = (2.0 - np.sum(self.single_pointer_means ** 2, axis=2)) / 4.0
        return self._readout_scale() * np.sqrt(np.clip(variance, 0.0, None) / trials)

    def _draw_correlations(self, seed: int, n: int) -> np.ndarray:
        """Readout draws per correlation, shape (K, K, n); single-pointer averages both ensembles"""
        k = self.size
        draws = np.empty((k, k, n))
        for i in range(k):
            for j in range(k):
                rng = _stream(seed, TAG_CORRELATION, i, j)
                if self.mode == MeasurementMode.TWO_POINTER:
                    draws[i, j] = sample_products(self.distributions[i][j], n, rng)
                else:
                    rngs = (rng, _stream(seed, TAG_SINGLE_POINTER_B, i, j))
                    first, second = sample_single_pointer(self.single_pointer_means[i, j], n, rngs)
                    draws[i, j] = 0.5 * (first.astype(float) + second)
        return draws

    def _draw_single_time(self, seed: int, n: int) -> Tuple[np.ndarray, np.ndarray, Dict[Tuple[int, int], np.ndarray]]:
        k = self.size
        early = np.stack([self.early_means[i].sample(n, _stream(seed, TAG_MEAN_EARLY, i)) for i in range(k)])
        late = np.stack([self.late_means[i].sample(n, _stream(seed, TAG_MEAN_LATE, i)) for i in range(k)])
        equal_time = {
            (i, j): projective.sample(n, _stream(seed, TAG_EQUAL_TIME, i, j))
            for (i, j), projective in self.equal_time.items()
        }
        return early, late, equal_time

    def running_covariances(self, seed: int, checkpoints: Sequence[int], mean_trials: Optional[int] = None,
                            correct_systematic: bool = False) -> List[Tuple[int, TemporalCovariance, TemporalCovariance]]:
        """Cumulative estimates after the first n trials for each checkpoint n"""
        counts = sorted(int(n) for n in checkpoints)
        if not counts or counts[0] < 1:
            raise ConfigError("Checkpoints must be positive trial counts")
        if mean_trials is not None and mean_trials < 1:
            raise ConfigError("mean_trials must be at least 1")
        n_max = counts[-1]
        mean_counts = counts if mean_trials is None else [mean_trials] * len(counts)
        n_mean_max = max(mean_counts)

        correlation_draws = self._draw_correlations(seed, n_max)
        early, late, equal_time_draws = self._draw_single_time(seed, n_mean_max)

        correlations = _prefix_means(correlation_draws, counts) * self._readout_scale()
        early_means = _prefix_means(early, mean_counts)
        late_means = _prefix_means(late, mean_counts)
        equal_time_means = {key: _prefix_means(value, mean_counts) for key, value in equal_time_draws.items()}

        k = self.size
        results = []
        for position, n in enumerate(counts):
            correlation, corrected = self._apply_correction(correlations[:, :, position], correct_systematic)
            equal_time = np.zeros((k, k))
            for (i, j), means in equal_time_means.items():
                equal_time[i, j] = equal_time[j, i] = means[position]
            provenance = self._provenance(ProvenanceKind.SAMPLED, n, mean_counts[position], seed, corrected)
            cov_t, cov_0 = self._covariances(correlation, early_means[:, position], late_means[:, position],
                                             equal_time, provenance)
            results.append((n, cov_t, cov_0))
        return results

    def sample(self, seed: int, budget: Budget) -> CovariancePair:
        """Sampled (σ̂(t1,t2), σ̂(t1,t1)) for one seed"""
        if abs(budget.epsilon - self.epsilon) > 1e-12:
            raise ConfigError(f"Budget ε={budget.epsilon} does not match plan ε={self.epsilon}")
        n = budget.trials_per_correlation
        n_mean = budget.effective_mean_trials
        if budget.mean_trials is None:
            _, cov_t, cov_0 = self.running_covariances(seed, [n], None, budget.correct_systematic)[0]
            return cov_t, cov_0
        # Means use their own trial count; correlations are drawn independently of it
        correlation = _prefix_means(self._draw_correlations(seed, n), [n])[:, :, 0] * self._readout_scale()
        correlation, corrected = self._apply_correction(correlation, budget.correct_systematic)
        early, late, equal_time_draws = self._draw_single_time(seed, n_mean)
        k = self.size
        equal_time = np.zeros((k, k))
        for (i, j), values in equal_time_draws.items():
            equal_time[i, j] = equal_time[j, i] = values.mean()
        provenance = self._provenance(ProvenanceKind.SAMPLED, n, n_mean, seed, corrected)
        return self._covariances(correlation, early.mean(axis=1), late.mean(axis=1), equal_time, provenance)


def sampled_covariances(state: DensityState, channel: KrausChannel, basis: OperatorBasis, budget: Budget,
                        seed: int, mode: MeasurementMode = MeasurementMode.TWO_POINTER) -> CovariancePair:
    plan = SamplingPlan(state, channel, basis, PointerConfig(epsilon=budget.epsilon), mode)
    return plan.sample(seed, budget)


def sampled_covariance(state: DensityState, channel: KrausChannel, basis: OperatorBasis, budget: Budget,
                       seed: int, mode: MeasurementMode = MeasurementMode.TWO_POINTER) -> TemporalCovariance:
    """σ̂_ij = (2/ε²)·mean(s1·s2) − 2·⟨B̂_i⟩⟨B̂_j(t2)⟩, deterministic given seed"""
    return sampled_covariances(state, channel, basis, budget, seed, mode)[0]


def limit_covariance(state: DensityState, channel: KrausChannel, basis: OperatorBasis, epsilon: float,
                     mode: MeasurementMode = MeasurementMode.TWO_POINTER,
                     correct_systematic: bool = False) -> CovariancePair:
    plan = SamplingPlan(state, channel, basis, PointerConfig(epsilon=epsilon), mode)
    return plan.limit_covariances(correct_systematic)


# Budget

def _check_positive(delta: float, f_abs: float) -> None:
    if delta <= 0 or f_abs <= 0:
        raise ConfigError(f"δ and |f| must be positive, got δ={delta}, |f|={f_abs}")


def optimal_epsilon(delta: float, f_abs: float, basis_norm: Optional[float] = None) -> float:
    """ε = √(δ/|f|), balancing systematic and statistical error"""
    _check_positive(delta, f_abs)
    epsilon = math.sqrt(delta / f_abs)
    if epsilon >= 1.0:
        logger.warning(f"[BUDGET] Optimal ε={epsilon:.3f} is not weak; the budget formula does not apply")
    if basis_norm is not None:
        limit = basis_norm ** 4 / 3.0
        if delta * tomography_config.validity_factor > limit:
            logger.warning(f"[BUDGET] δ={delta} is not much smaller than ‖B‖⁴/3={limit:.4f}")
    return epsilon


def bias_limited_epsilon2(delta: float, f_abs: float) -> float:
    """ε² holding the readout bias 2ε²|f| at δ/2, capped inside the weak regime"""
    _check_positive(delta, f_abs)
    return min(delta / (4.0 * f_abs), tomography_config.weak_warning_epsilon ** 2)


def _ceil(value: float) -> int:
    return int(math.ceil(value * (1.0 - 1e-12)))


def required_trials(delta: float, f_abs: float) -> int:
    """N = ceil(4 f² / δ⁴)"""
    _check_positive(delta, f_abs)
    return _ceil(4.0 * f_abs ** 2 / delta ** 4)


def trial_requirement(delta: float, f_abs: float, basis_norm: Optional[float] = None) -> TrialRequirement:
    """Trial count plus the basis-level bound (4/9)‖B‖⁸/δ⁴"""
    bound = None if basis_norm is None else _ceil((4.0 / 9.0) * basis_norm ** 8 / delta ** 4)
    return TrialRequirement(
        delta=delta, f_abs=f_abs, trials=required_trials(delta, f_abs),
        bound_trials=bound, basis_norm=basis_norm,
    )


def measurement_accounting(dim: int) -> Dict[str, int]:
    """Experiment settings needed to estimate one channel at dimension D"""
    k = dim * dim - 1
    return {
        'correlation_experiments': k * k,
        'mean_experiments': 2 * k,
        'equal_time_experiments': k * (k + 1) // 2,
    }
