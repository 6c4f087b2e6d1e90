"""Data models for the temporal-correlation tomography toolkit
"""
import hashlib
import logging
from fractions import Fraction
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from tomography_config import tomography_config

logger = logging.getLogger(__name__)

# Pointer readout order used by every OutcomeDistribution: (s1, s2)
OUTCOMES: Tuple[Tuple[int, int], ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))
OUTCOME_PRODUCTS = np.array([s1 * s2 for s1, s2 in OUTCOMES], dtype=float)


class ProvenanceKind(str, Enum):
    """Enum for how a covariance was obtained"""
    EXACT = "exact"
    SAMPLED = "sampled"
    LIMIT = "limit"


class MeasurementMode(str, Enum):
    """Enum for correlation measurement protocols"""
    TWO_POINTER = "two-pointer"
    SINGLE_POINTER = "single-pointer"
    EXACT = "exact"


class ChannelName(str, Enum):
    """Enum for the channels the experiment driver can build"""
    IDENTITY = "identity"
    PHASE_DAMPING = "phase-damping"
    AMPLITUDE_DAMPING = "amplitude-damping"
    DEPOLARIZING = "depolarizing"
    ROTATION = "rotation"
    RANDOM = "random"
    RANDOM_SINGULAR = "random-singular"


class StateKind(str, Enum):
    """Enum for the initial states the experiment driver can build"""
    MAXIMALLY_MIXED = "maximally-mixed"
    THERMAL = "thermal"
    EXPLICIT = "explicit"
    RANDOM = "random"
    RANDOM_SINGULAR = "random-singular"


class BasisName(str, Enum):
    """Enum for operator bases"""
    PAULI = "pauli"
    GELL_MANN = "gell-mann"


class SolverKind(str, Enum):
    """Enum for the route used to solve for the gram matrix"""
    QUBIT_CLOSED_FORM = "qubit-closed-form"
    LINEAR_SYSTEM = "linear-system"


def _frozen_array(value: Any, dtype) -> np.ndarray:
    """Copy into a read-only numpy array"""
    arr = np.array(value, dtype=dtype)
    arr.setflags(write=False)
    return arr


class NumericModel(BaseModel):
    """Base model for immutable models holding numpy arrays"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


# Operator core

class Operator(NumericModel):
    """Dense complex D×D operator with a Hermiticity flag"""
    entries: np.ndarray = Field(..., description="Complex D×D matrix")
    hermitian: bool = Field(default=False, description="Whether the operator is flagged Hermitian")

    @field_validator('entries', mode='before')
    @classmethod
    def _square_matrix(cls, value):
        arr = _frozen_array(value, complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError(f"Operator entries must be a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Operator entries must be finite")
        return arr

    @model_validator(mode='after')
    def _check_hermitian(self):
        if self.hermitian:
            deviation = float(np.max(np.abs(self.entries - self.entries.conj().T)))
            if deviation > tomography_config.hermitian_tol:
                raise ValueError(f"Operator flagged Hermitian deviates by {deviation:.3e}")
        return self

    @classmethod
    def hermitian_from(cls, matrix) -> 'Operator':
        """Build a Hermitian-flagged operator"""
        return cls(entries=matrix, hermitian=True)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def norm(self) -> float:
        """Operator norm (largest singular value)"""
        return float(np.linalg.norm(self.entries, ord=2))


class DensityState(NumericModel):
    """Density matrix with cached smallest eigenvalue"""
    op: Operator = Field(..., description="Hermitian density operator")
    eigen_floor: float = Field(..., description="Smallest eigenvalue, cached after validation")

    @model_validator(mode='before')
    @classmethod
    def _fill_eigen_floor(cls, data):
        if isinstance(data, dict):
            op = data.get('op')
            if op is not None and not isinstance(op, Operator):
                op = Operator.hermitian_from(op)
                data = {**data, 'op': op}
            if op is not None and data.get('eigen_floor') is None:
                data = {**data, 'eigen_floor': float(np.linalg.eigvalsh(op.entries)[0])}
        return data

    @model_validator(mode='after')
    def _check_state(self):
        if not self.op.hermitian:
            raise ValueError("Density operator must be flagged Hermitian")
        trace = complex(np.trace(self.op.entries))
        if abs(trace - 1.0) > tomography_config.trace_tol:
            raise ValueError(f"Density operator trace {trace:.12g} is not 1")
        if self.eigen_floor < -tomography_config.psd_tol:
            raise ValueError(f"Density operator has negative eigenvalue {self.eigen_floor:.3e}")
        return self

    @classmethod
    def from_matrix(cls, matrix) -> 'DensityState':
        return cls(op=Operator.hermitian_from(matrix))

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def dim(self) -> int:
        return self.op.dim

    def singular(self, tol: Optional[float] = None) -> bool:
        """True iff the smallest eigenvalue is below the singularity tolerance"""
        threshold = tomography_config.singular_tol if tol is None else tol
        return self.eigen_floor < threshold


class OperatorBasis(NumericModel):
    """Complete trace-orthogonal Hermitian basis {B_0, B_i}, B_0 ∝ identity"""
    dim: int = Field(..., ge=2, description="Hilbert-space dimension D")
    elements: List[Operator] = Field(..., description="D² Hermitian operators, identity first")
    normalization: float = Field(default=1.0, gt=0, description="c in Tr(B_a B_b) = c δ_ab")
    name: str = Field(default="custom", description="Basis label")

    @model_validator(mode='after')
    def _check_basis(self):
        d = self.dim
        if len(self.elements) != d * d:
            raise ValueError(f"Basis for D={d} needs {d * d} elements, got {len(self.elements)}")
        for k, element in enumerate(self.elements):
            if element.dim != d or not element.hermitian:
                raise ValueError(f"Basis element {k} must be a Hermitian {d}×{d} operator")
        stack = self.matrices
        gram = np.einsum('aij,bji->ab', stack, stack)
        deviation = float(np.max(np.abs(gram - self.normalization * np.eye(d * d))))
        if deviation > tomography_config.hermitian_tol * d * d:
            raise ValueError(f"Basis is not trace-orthogonal (deviation {deviation:.3e})")
        b0 = stack[0]
        if np.max(np.abs(b0 - b0[0, 0] * np.eye(d))) > tomography_config.hermitian_tol:
            raise ValueError("Basis element 0 must be proportional to the identity")
        return self

    @property
    def size(self) -> int:
        return self.dim * self.dim

    @property
    def matrices(self) -> np.ndarray:
        """Stacked elements, shape (D², D, D)"""
        return np.stack([element.entries for element in self.elements])

    @property
    def observables(self) -> List[Operator]:
        """The traceless elements B_1 … B_{D²-1}"""
        return self.elements[1:]

    @property
    def norms(self) -> np.ndarray:
        return np.array([element.norm for element in self.elements])

    @property
    def max_norm(self) -> float:
        """Largest operator norm among the observables"""
        return float(np.max(self.norms[1:]))

    @property
    def equal_norm(self) -> bool:
        norms = self.norms
        return bool(np.max(np.abs(norms - norms[0])) <= tomography_config.hermitian_tol)


class StructureTensors(NumericModel):
    """Structure constants [B_a,B_b] = i f_abc B_c and {B_a,B_b} = g_abc B_c"""
    f: np.ndarray = Field(..., description="Real antisymmetric tensor f_abc")
    g: np.ndarray = Field(..., description="Real symmetric tensor g_abc")

    @field_validator('f', 'g', mode='before')
    @classmethod
    def _real_cube(cls, value):
        arr = _frozen_array(value, float)
        if arr.ndim != 3 or len(set(arr.shape)) != 1:
            raise ValueError(f"Structure tensor must be n×n×n, got {arr.shape}")
        return arr

    @model_validator(mode='after')
    def _check_symmetry(self):
        tol = tomography_config.structure_tol
        if self.f.shape != self.g.shape:
            raise ValueError("f and g must share a shape")
        if np.max(np.abs(self.f + self.f.transpose(1, 0, 2))) > tol:
            raise ValueError("f must be antisymmetric in its first two indices")
        if np.max(np.abs(self.g - self.g.transpose(1, 0, 2))) > tol:
            raise ValueError("g must be symmetric in its first two indices")
        return self

    @property
    def size(self) -> int:
        return self.f.shape[0]

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.size)))

    @property
    def product(self) -> np.ndarray:
        """P_abc with B_a B_b = P_abc B_c"""
        return 0.5 * (1j * self.f + self.g)


class KrausChannel(NumericModel):
    """Kraus representation ρ → Σ K ρ K†"""
    operators: List[Operator] = Field(..., min_length=1, description="Kraus operators K_μ")
    completeness_defect: float = Field(..., description="‖Σ K†K − 1‖")
    tolerance: float = Field(default_factory=lambda: tomography_config.channel_tol,
                             description="Allowed completeness defect")

    @model_validator(mode='before')
    @classmethod
    def _fill_defect(cls, data):
        if isinstance(data, dict) and data.get('completeness_defect') is None:
            ops = [op if isinstance(op, Operator) else Operator(entries=op) for op in data.get('operators', [])]
            if ops:
                total = sum(op.entries.conj().T @ op.entries for op in ops)
                defect = float(np.linalg.norm(total - np.eye(ops[0].dim), ord=2))
                data = {**data, 'operators': ops, 'completeness_defect': defect}
        return data

    @model_validator(mode='after')
    def _check_channel(self):
        dims = {op.dim for op in self.operators}
        if len(dims) != 1:
            raise ValueError(f"Kraus operators have mixed dimensions {sorted(dims)}")
        if self.completeness_defect > self.tolerance:
            raise ValueError(
                f"Completeness defect {self.completeness_defect:.3e} exceeds {self.tolerance:.1e}"
            )
        return self

    @classmethod
    def from_matrices(cls, matrices, tolerance: Optional[float] = None) -> 'KrausChannel':
        data: Dict[str, Any] = {'operators': [Operator(entries=m) for m in matrices]}
        if tolerance is not None:
            data['tolerance'] = tolerance
        return cls(**data)

    @property
    def dim(self) -> int:
        return self.operators[0].dim

    @property
    def rank(self) -> int:
        return len(self.operators)

    @property
    def matrices(self) -> np.ndarray:
        return np.stack([op.entries for op in self.operators])


# Weak measurement

class PointerConfig(NumericModel):
    """Pointer coupling strength; pointers start in |↑_x⟩"""
    epsilon: float = Field(..., gt=0.0, lt=1.0, description="Coupling strength ε")

    @model_validator(mode='after')
    def _warn_strong(self):
        if self.epsilon > tomography_config.weak_warning_epsilon:
            logger.warning(f"[POINTER] ε={self.epsilon:.3f} is outside the weak regime")
        return self

    @classmethod
    def from_epsilon_squared(cls, epsilon2: float) -> 'PointerConfig':
        return cls(epsilon=float(np.sqrt(epsilon2)))

    @property
    def pointer_init(self) -> np.ndarray:
        """|↑_x⟩ = (|↓_z⟩ + |↑_z⟩)/√2 as a density matrix"""
        ket = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
        return np.outer(ket, ket.conj())


class ProtocolRun(NumericModel):
    """Ingredients of one correlation measurement"""
    channel: KrausChannel = Field(..., description="Evolution from t1 to t2")
    obs_early: Operator = Field(..., description="B_i coupled at t1")
    obs_late: Operator = Field(..., description="B_j coupled at t2")
    state: DensityState = Field(..., description="System state at t1")
    config: PointerConfig = Field(..., description="Pointer coupling")

    @model_validator(mode='after')
    def _check_dims(self):
        from exceptions import DimensionMismatchError  # avoid import cycles at module load

        dims = {self.channel.dim, self.obs_early.dim, self.obs_late.dim, self.state.dim}
        if len(dims) != 1:
            raise DimensionMismatchError(f"Protocol ingredients have mixed dimensions {sorted(dims)}")
        if not (self.obs_early.hermitian and self.obs_late.hermitian):
            raise ValueError("Coupled observables must be Hermitian")
        return self

    @property
    def dim(self) -> int:
        return self.state.dim


class OutcomeDistribution(NumericModel):
    """Exact joint distribution of the two pointer readouts"""
    probs: np.ndarray = Field(..., description="p(s1,s2) over (++, +-, -+, --)")
    post_state: Optional[DensityState] = Field(default=None, description="System state after readout")

    @field_validator('probs', mode='before')
    @classmethod
    def _normalized(cls, value):
        arr = np.array(value, dtype=float)
        if arr.shape != (4,):
            raise ValueError(f"Outcome distribution needs 4 probabilities, got shape {arr.shape}")
        if np.min(arr) < -tomography_config.trace_tol:
            raise ValueError(f"Negative outcome probability {np.min(arr):.3e}")
        if abs(arr.sum() - 1.0) > tomography_config.trace_tol:
            raise ValueError(f"Outcome probabilities sum to {arr.sum():.15f}")
        return _frozen_array(np.clip(arr, 0.0, None), float)

    @property
    def sampling_probs(self) -> np.ndarray:
        """Probabilities renormalised for numpy's sampler"""
        return self.probs / self.probs.sum()


# Covariance estimation

class Provenance(NumericModel):
    """How a temporal covariance was produced"""
    kind: ProvenanceKind = Field(..., description="exact | sampled | limit")
    mode: MeasurementMode = Field(default=MeasurementMode.EXACT, description="Correlation protocol")
    trials_per_correlation: Optional[int] = Field(default=None, description="N")
    mean_trials: Optional[int] = Field(default=None, description="Trials per mean experiment")
    epsilon: Optional[float] = Field(default=None, description="Coupling ε")
    seed: Optional[int] = Field(default=None, description="Master seed")
    corrected: bool = Field(default=False, description="Systematic-error correction applied")
    correlation_experiments: int = Field(default=0, description="Two-time correlation settings")
    mean_experiments: int = Field(default=0, description="Single-time mean settings")
    equal_time_experiments: int = Field(default=0, description="Equal-time moment settings")


class TemporalCovariance(NumericModel):
    """σ_ij(t1,t2) with the early-time index first, plus mean vectors"""
    dim_ops: int = Field(..., ge=1, description="K = D² − 1 (or 2n for Gaussian moments)")
    sigma: np.ndarray = Field(..., description="Real K×K matrix σ(t1,t2)")
    mean_early: np.ndarray = Field(..., description="⟨B_i(t1)⟩")
    mean_late: np.ndarray = Field(..., description="⟨B_i(t2)⟩")
    provenance: Provenance = Field(..., description="Exact or sampled origin")
    equal_time: bool = Field(default=False, description="Whether t1 = t2")

    @field_validator('sigma', 'mean_early', 'mean_late', mode='before')
    @classmethod
    def _real(cls, value):
        return _frozen_array(value, float)

    @model_validator(mode='after')
    def _check_shapes(self):
        k = self.dim_ops
        if self.sigma.shape != (k, k):
            raise ValueError(f"sigma must be {k}×{k}, got {self.sigma.shape}")
        if self.mean_early.shape != (k,) or self.mean_late.shape != (k,):
            raise ValueError(f"mean vectors must have length {k}")
        if self.equal_time and self.provenance.kind == ProvenanceKind.EXACT:
            asym = float(np.max(np.abs(self.sigma - self.sigma.T)))
            if asym > tomography_config.hermitian_tol:
                raise ValueError(f"Exact equal-time covariance is asymmetric by {asym:.3e}")
        return self

    @property
    def late_early(self) -> np.ndarray:
        """σ(t2,t1): late-time index first"""
        return self.sigma.T


class Budget(NumericModel):
    """Per-correlation trial budget"""
    delta: float = Field(..., gt=0.0, description="Target per-entry error δ")
    epsilon: float = Field(..., gt=0.0, lt=1.0, description="Coupling ε")
    trials_per_correlation: int = Field(..., ge=1, description="N")
    mean_trials: Optional[int] = Field(default=None, ge=1, description="Trials per mean experiment (default N)")
    correct_systematic: bool = Field(default=False, description="Subtract 2ε²·f from each estimate")

    @property
    def effective_mean_trials(self) -> int:
        return self.mean_trials if self.mean_trials is not None else self.trials_per_correlation


class TrialRequirement(BaseModel):
    """Result of the trial budget formula"""
    delta: float = Field(..., description="Target error δ")
    f_abs: float = Field(..., description="|f| used in the budget")
    trials: int = Field(..., description="ceil(4 f² / δ⁴)")
    bound_trials: Optional[int] = Field(default=None, description="ceil((4/9)‖B‖⁸ / δ⁴)")
    basis_norm: Optional[float] = Field(default=None, description="‖B‖ used in the bound")


# Channel reconstruction

class AffineDynamics(NumericModel):
    """Heisenberg-picture affine map B_i(t) = M_ij B_j + χ_i·1"""
    M: np.ndarray = Field(..., description="Real K×K matrix")
    chi: np.ndarray = Field(..., description="Real K-vector")

    @field_validator('M', 'chi', mode='before')
    @classmethod
    def _real(cls, value):
        return _frozen_array(value, float)

    @model_validator(mode='after')
    def _check_shapes(self):
        k = self.chi.shape[0] if self.chi.ndim == 1 else -1
        if self.M.shape != (k, k):
            raise ValueError(f"M shape {self.M.shape} does not match chi shape {self.chi.shape}")
        return self

    @property
    def size(self) -> int:
        return self.chi.shape[0]


class GramMatrix(NumericModel):
    """Hermitian U_ab = Σ_μ u*_aμ u_bμ and its eigensystem (descending)"""
    U: np.ndarray = Field(..., description="Hermitian D²×D² matrix")
    eigenvalues: np.ndarray = Field(..., description="Descending eigenvalues λ_μ")
    eigenvectors: np.ndarray = Field(..., description="Columns are orthonormal eigenvectors v_μ")

    @model_validator(mode='before')
    @classmethod
    def _fill_eigensystem(cls, data):
        if isinstance(data, dict) and data.get('U') is not None and data.get('eigenvalues') is None:
            u = np.array(data['U'], dtype=complex)
            hermitian_part = 0.5 * (u + u.conj().T)
            values, vectors = np.linalg.eigh(hermitian_part)
            order = np.argsort(values)[::-1]
            data = {**data, 'eigenvalues': values[order], 'eigenvectors': vectors[:, order]}
        return data

    @field_validator('U', 'eigenvectors', mode='before')
    @classmethod
    def _complex(cls, value):
        return _frozen_array(value, complex)

    @field_validator('eigenvalues', mode='before')
    @classmethod
    def _real(cls, value):
        return _frozen_array(value, float)

    @model_validator(mode='after')
    def _check_hermitian(self):
        deviation = float(np.max(np.abs(self.U - self.U.conj().T)))
        if deviation > tomography_config.structure_tol:
            raise ValueError(f"Gram matrix is not Hermitian (deviation {deviation:.3e})")
        return self


class ReconstructionDiagnostics(BaseModel):
    """Diagnostics collected by the reconstruction pipeline"""
    mode: MeasurementMode = Field(..., description="Measurement mode used")
    solver: SolverKind = Field(..., description="Gram solver route")
    min_singular_value: float = Field(..., description="Smallest singular value of σ(t0,t0)")
    gram_eigenvalues: List[float] = Field(default_factory=list, description="Descending λ_μ")
    clamped_eigenvalues: int = Field(default=0, description="Eigenvalues clamped to zero")
    completeness_defect: float = Field(..., description="‖Σ K†K − 1‖ of the reconstruction")
    gram_residual: float = Field(default=0.0, description="Residual of the gram linear system")
    delta_m_spectral: Optional[float] = Field(default=None, description="‖M_est − M_true‖₂")
    delta_m_max: Optional[float] = Field(default=None, description="max |M_est − M_true|")
    action_error: Optional[float] = Field(default=None, description="Channel action error vs truth")


class ReconstructionResult(NumericModel):
    """Output of reconstruct_channel"""
    dynamics: AffineDynamics
    channel: KrausChannel
    diagnostics: ReconstructionDiagnostics
    m_true: Optional[np.ndarray] = Field(default=None, description="Reference M when truth is known")


# Gaussian channels

class GaussianState(NumericModel):
    """First and second moments of an n-mode Gaussian state, η = (x1,p1,…)"""
    n_modes: int = Field(..., ge=1, description="Number of modes n")
    mean: np.ndarray = Field(..., description="⟨η⟩, length 2n")
    cov: np.ndarray = Field(..., description="Symmetric 2n×2n covariance σ(t,t), vacuum = 1/2")

    @field_validator('mean', 'cov', mode='before')
    @classmethod
    def _real(cls, value):
        return _frozen_array(value, float)

    @model_validator(mode='after')
    def _check_moments(self):
        # Import here to avoid circular imports
        from gaussian_channel import validate_covariance

        size = 2 * self.n_modes
        if self.mean.shape != (size,) or self.cov.shape != (size, size):
            raise ValueError(f"Moments must have shapes ({size},) and ({size},{size})")
        validate_covariance(self.cov)
        return self


class GaussianChannelTruth(NumericModel):
    """η(t) = M η(t0) + χ with additive noise on second moments"""
    M: np.ndarray = Field(..., description="Real 2n×2n matrix")
    chi: np.ndarray = Field(..., description="Real 2n displacement")
    noise: np.ndarray = Field(..., description="Symmetric PSD 2n×2n added noise")

    @field_validator('M', 'chi', 'noise', mode='before')
    @classmethod
    def _real(cls, value):
        return _frozen_array(value, float)

    @model_validator(mode='after')
    def _check_shapes(self):
        size = self.chi.shape[0]
        if size % 2 or self.M.shape != (size, size) or self.noise.shape != (size, size):
            raise ValueError("Gaussian channel needs 2n×2n M and noise and a 2n displacement")
        if np.max(np.abs(self.noise - self.noise.T)) > tomography_config.symplectic_tol:
            raise ValueError("Noise matrix must be symmetric")
        if np.linalg.eigvalsh(self.noise)[0] < -tomography_config.symplectic_tol:
            raise ValueError("Noise matrix must be positive semidefinite")
        return self

    @property
    def n_modes(self) -> int:
        return self.chi.shape[0] // 2


# Experiment driver

class ExperimentConfig(BaseModel):
    """Validated configuration shared by every CLI verb"""
    model_config = ConfigDict(extra='forbid')

    channel: ChannelName = Field(default=ChannelName.PHASE_DAMPING, description="Channel name")
    channel_param: float = Field(default=0.5, ge=0.0, description="Channel parameter (p, γ, angle)")
    channel_axis: str = Field(default="z", description="Rotation axis for the rotation channel")
    channel_seed: int = Field(default=0, ge=0, description="Seed for the random channel")
    state: StateKind = Field(default=StateKind.MAXIMALLY_MIXED, description="Initial state kind")
    beta: float = Field(default=1.0, gt=0.0, description="Inverse temperature for thermal states")
    omega: float = Field(default=1.0, gt=0.0, description="Level splitting of the thermal Hamiltonian")
    state_matrix: Optional[str] = Field(default=None, description="Explicit state, rows ';'-separated")
    dimension: int = Field(default=2, ge=2, le=8, description="Hilbert-space dimension D")
    basis: Optional[BasisName] = Field(default=None, description="Operator basis (pauli for D=2, else gell-mann)")
    epsilon2: float = Field(default=4.0 / 9.0, gt=0.0, lt=1.0, description="ε²")
    trials: int = Field(default=2500, ge=1, description="Trials per correlation N")
    mean_trials: Optional[int] = Field(default=None, ge=1, description="Trials per mean experiment")
    repetitions: int = Field(default=1, ge=1, description="Repetitions R")
    seed: int = Field(default=12345, ge=0, description="Master seed")
    mode: MeasurementMode = Field(default=MeasurementMode.TWO_POINTER, description="Measurement mode")
    correct_systematic: bool = Field(default=False, description="Systematic-error correction")
    delta: float = Field(default=0.1, gt=0.0, description="Target per-entry error δ")
    output_dir: str = Field(default_factory=lambda: tomography_config.output_dir, description="Artifact directory")
    workers: int = Field(default_factory=lambda: tomography_config.workers, ge=1, description="Worker processes")
    modes: int = Field(default=1, ge=1, le=4, description="Modes for the Gaussian demo")
    squeezing: float = Field(default=0.0, ge=0.0, description="Squeezing parameter r for the Gaussian demo")

    @field_validator('epsilon2', 'channel_param', mode='before')
    @classmethod
    def _fraction(cls, value):
        if isinstance(value, str) and '/' in value:
            return float(Fraction(value.strip()))
        return value

    @field_validator('channel_param')
    @classmethod
    def _finite(cls, value):
        if not np.isfinite(value):
            raise ValueError("channel_param must be finite")
        return value

    @model_validator(mode='after')
    def _check_combination(self):
        probability_channels = {ChannelName.PHASE_DAMPING, ChannelName.AMPLITUDE_DAMPING, ChannelName.DEPOLARIZING}
        if self.channel in probability_channels and self.channel_param > 1.0:
            raise ValueError(f"{self.channel.value} parameter must lie in [0, 1]")
        if self.channel in {ChannelName.PHASE_DAMPING, ChannelName.AMPLITUDE_DAMPING} and self.dimension != 2:
            raise ValueError(f"{self.channel.value} is a qubit channel (dimension must be 2)")
        if self.channel == ChannelName.ROTATION and self.dimension != 2:
            raise ValueError("rotation is a qubit channel (dimension must be 2)")
        if self.channel_axis not in ("x", "y", "z"):
            raise ValueError("channel_axis must be one of x, y, z")
        if self.basis == BasisName.PAULI and self.dimension != 2:
            raise ValueError("The Pauli basis requires dimension 2; use gell-mann")
        if self.state == StateKind.EXPLICIT and not self.state_matrix:
            raise ValueError("state=explicit requires state_matrix")
        return self

    @property
    def epsilon(self) -> float:
        return float(np.sqrt(self.epsilon2))

    @property
    def resolved_basis(self) -> BasisName:
        if self.basis is not None:
            return self.basis
        return BasisName.PAULI if self.dimension == 2 else BasisName.GELL_MANN

    def config_hash(self) -> str:
        """Stable short hash of the configuration, used in CSV provenance"""
        payload = self.model_dump_json(exclude={'output_dir', 'workers'}).encode('utf-8')
        return hashlib.sha256(payload).hexdigest()[:16]


class RunRecord(BaseModel):
    """Result of one estimate run"""
    config: ExperimentConfig = Field(..., description="Configuration snapshot")
    seed: int = Field(..., description="Seed the run used")
    m_estimate: List[List[float]] = Field(..., description="Estimated M")
    m_theory: List[List[float]] = Field(..., description="Theoretical M")
    chi_estimate: List[float] = Field(default_factory=list, description="Estimated χ")
    delta_m_spectral: float = Field(..., description="‖M_est − M_theory‖₂")
    delta_m_max: float = Field(..., description="max |M_est − M_theory|")
    entries_within_delta: int = Field(..., description="Entries with |ΔM_ij| < δ")
    kraus_rank: int = Field(..., description="Number of reconstructed Kraus operators")
    wall_time_s: float = Field(..., description="Wall-clock time in seconds")
    version: str = Field(..., description="Toolkit version")
