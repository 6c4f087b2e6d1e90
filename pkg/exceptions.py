"""
Error types raised by the tomography toolkit.

Each error carries the CLI exit code it maps to.
"""
from typing import Optional


class TomographyError(Exception):
    """Base class for all toolkit errors"""
    exit_code = 1


class ConfigError(TomographyError, ValueError):
    """Invalid experiment configuration or budget"""
    exit_code = 2


class DimensionMismatchError(TomographyError, ValueError):
    """Operators, states or channels of incompatible dimension"""
    exit_code = 2


class SingularStateError(TomographyError):
    """The equal-time covariance is singular, so the state is singular.

    A singular state does not sample the whole Hilbert space, and the
    evolution cannot be fully determined from it.
    """
    exit_code = 3

    def __init__(self, message: str, min_singular_value: Optional[float] = None):
        super().__init__(message)
        self.min_singular_value = min_singular_value


class NotCompletelyPositiveError(TomographyError):
    """Gram matrix eigenvalue below the clamp tolerance"""
    exit_code = 4

    def __init__(self, eigenvalue: float, clamp_tol: float):
        super().__init__(
            f"Gram matrix eigenvalue {eigenvalue:.3e} is below -{clamp_tol:.1e}: "
            f"estimation noise too large or dynamics not completely positive"
        )
        self.eigenvalue = eigenvalue
        self.clamp_tol = clamp_tol


class ReconstructionError(TomographyError):
    """The gram linear system could not be solved"""
    exit_code = 4

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class InvalidGaussianStateError(TomographyError, ValueError):
    """Covariance matrix violates the symplectic-eigenvalue bound"""
    exit_code = 2

    def __init__(self, message: str, min_symplectic_eigenvalue: Optional[float] = None):
        super().__init__(message)
        self.min_symplectic_eigenvalue = min_symplectic_eigenvalue


class SearchExhaustedError(TomographyError):
    """An accuracy search ran off the end of its trial grid without meeting δ"""
    exit_code = 5

    def __init__(self, message: str, delta: Optional[float] = None, largest_tried: Optional[int] = None):
        super().__init__(message)
        self.delta = delta
        self.largest_tried = largest_tried
