"""
Prepare-and-measure qubit process tomography, used as the baseline for
budget comparisons.

Inputs |0⟩, |1⟩, |+⟩, |+i⟩ are sent through the channel and every output is
measured projectively along x, y and z. The Bloch map r → T r + t gives the
affine dynamics directly: M = T and χ = t/√2 in the scaled Pauli basis.
"""
import logging
from typing import Dict, List, Tuple

import numpy as np

from exceptions import DimensionMismatchError
from models import AffineDynamics, DensityState, KrausChannel
from operator_core import SIGMA_X, SIGMA_Y, SIGMA_Z, channel_action, pure_state

logger = logging.getLogger(__name__)

INPUT_KETS: Dict[str, Tuple[complex, complex]] = {
    '0': (1.0, 0.0),
    '1': (0.0, 1.0),
    '+': (1.0, 1.0),
    '+i': (1.0, 1.0j),
}
AXES = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def baseline_settings() -> int:
    """Number of (input, measurement axis) settings"""
    return len(INPUT_KETS) * len(AXES)


def _check_qubit(channel: KrausChannel) -> None:
    if channel.dim != 2:
        raise DimensionMismatchError(f"Standard tomography baseline is defined for qubits, got D={channel.dim}")


def _output_states(channel: KrausChannel) -> List[np.ndarray]:
    outputs = []
    for ket in INPUT_KETS.values():
        state: DensityState = pure_state(ket)
        outputs.append(channel_action(channel, state.matrix))
    return outputs


def _bloch_map(bloch: np.ndarray) -> AffineDynamics:
    """Affine dynamics from the output Bloch vectors of |0⟩, |1⟩, |+⟩, |+i⟩"""
    r0, r1, r_plus, r_plus_i = bloch
    t = 0.5 * (r0 + r1)
    T = np.column_stack([r_plus - t, r_plus_i - t, 0.5 * (r0 - r1)])
    return AffineDynamics(M=T, chi=t / np.sqrt(2.0))


def exact_bloch_vectors(channel: KrausChannel) -> np.ndarray:
    _check_qubit(channel)
    return np.array([[np.real(np.trace(rho @ axis)) for axis in AXES] for rho in _output_states(channel)])


def standard_exact(channel: KrausChannel) -> AffineDynamics:
    """Noise-free baseline reconstruction"""
    return _bloch_map(exact_bloch_vectors(channel))


def standard_estimate(channel: KrausChannel, shots: int, seed: int) -> AffineDynamics:
    """Baseline reconstruction from `shots` projective measurements per setting"""
    if shots < 1:
        raise ValueError(f"Shots per setting must be at least 1, got {shots}")
    exact = exact_bloch_vectors(channel)
    estimated = np.empty_like(exact)
    for s, row in enumerate(exact):
        for a, component in enumerate(row):
            rng = np.random.default_rng(np.random.SeedSequence([seed, s, a]))
            p_plus = float(np.clip((1.0 + component) / 2.0, 0.0, 1.0))
            ups = rng.binomial(shots, p_plus)
            estimated[s, a] = (2.0 * ups - shots) / shots
    return _bloch_map(estimated)
