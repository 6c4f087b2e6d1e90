"""
Configuration for the temporal-correlation tomography toolkit
"""
import os
import logging
from pathlib import Path
from typing import Optional
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

__version__ = "0.3.0"


def _env_float(name: str, default: float) -> float:
    """Read a float environment variable, falling back to the default"""
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Ignoring non-numeric {name}={raw!r}, using {default}")
        return default


def _env_int(name: str, default: int) -> int:
    """Read an integer environment variable, falling back to the default"""
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


class TomographyConfig:
    """Tolerances and run defaults, read from TOMO_* environment variables"""

    def __init__(self):
        # Operator / state validation
        self.hermitian_tol = _env_float('TOMO_HERMITIAN_TOL', 1e-12)
        self.trace_tol = _env_float('TOMO_TRACE_TOL', 1e-12)
        self.psd_tol = _env_float('TOMO_PSD_TOL', 1e-12)
        self.singular_tol = _env_float('TOMO_SINGULAR_TOL', 1e-10)
        self.structure_tol = _env_float('TOMO_STRUCTURE_TOL', 1e-10)
        self.channel_tol = _env_float('TOMO_CHANNEL_TOL', 1e-10)

        # Reconstruction
        self.invertibility_tol = _env_float('TOMO_INVERTIBILITY_TOL', 1e-8)
        self.sampled_invertibility_tol = _env_float('TOMO_SAMPLED_INVERTIBILITY_TOL', 1e-3)
        self.clamp_tol = _env_float('TOMO_CLAMP_TOL', 1e-8)
        self.sampled_clamp_factor = _env_float('TOMO_SAMPLED_CLAMP_FACTOR', 10.0)
        self.reconstructed_channel_tol = _env_float('TOMO_RECONSTRUCTED_CHANNEL_TOL', 1e-6)

        # Weak measurement regime
        self.weak_warning_epsilon = _env_float('TOMO_WEAK_WARNING_EPSILON', 0.9)
        self.validity_factor = _env_float('TOMO_VALIDITY_FACTOR', 10.0)

        # Gaussian states
        self.symplectic_tol = _env_float('TOMO_SYMPLECTIC_TOL', 1e-9)

        # Runs
        self.output_dir = os.getenv('TOMO_OUTPUT_DIR', 'results')
        self.workers = _env_int('TOMO_WORKERS', 1)
        self.log_level = os.getenv('TOMO_LOG_LEVEL', 'INFO').upper()

        if self.workers < 1:
            raise ValueError("TOMO_WORKERS must be at least 1")

    def sampled_clamp_tol(self, delta: Optional[float]) -> float:
        """Clamp tolerance for sampled reconstructions (10·δ by default)"""
        if delta is None:
            return self.clamp_tol
        return max(self.clamp_tol, self.sampled_clamp_factor * delta)

    def output_path(self, override: Optional[str] = None) -> Path:
        """Resolve the artifact directory"""
        return Path(override or self.output_dir)


# Global instance
tomography_config = TomographyConfig()
