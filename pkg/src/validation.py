# ABOUTME: Error types and input validation for the relay transceiver designer.
# ABOUTME: Handles shape, finiteness, Hermitian and positivity checks on matrices.

import logging

import numpy as np

# Matrix tolerances
HERMITIAN_TOL = 1e-10
PSD_CLIP_TOL = 1e-12
COND_TOL = 1e-12

logger = logging.getLogger(__name__)


class ValidationError(Exception):
    """Raised when input validation fails."""

    pass


class NotPSDError(ValidationError):
    """Raised when a matrix that must be positive semidefinite is not."""

    pass


class DomainError(ValidationError):
    """Raised when a value falls outside the domain of a function."""

    pass


class ConfigError(ValidationError):
    """Raised when a run configuration file is malformed."""

    pass


class NumericalError(Exception):
    """Raised when a numerical procedure cannot complete."""

    pass


class ConditioningError(NumericalError):
    """Raised when a matrix is too close to singular to invert."""

    def __init__(self, message: str, smallest_eigenvalue: float | None = None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class DegenerateChannelError(NumericalError):
    """Raised when a hop carries no usable stream."""

    pass


class InfeasibleStructureError(NumericalError):
    """Raised when the closed-form precoder structure has no valid scaling."""

    pass


class ConsistencyError(NumericalError):
    """Raised when an assembled design breaks an identity it must satisfy."""

    pass


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Convert input to a finite 2-D complex array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    require_finite(arr, name)
    return arr


def require_finite(a: np.ndarray, name: str = "matrix") -> None:
    """Reject arrays containing NaN or Inf."""
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")


def require_square(a: np.ndarray, name: str = "matrix") -> None:
    """Reject non-square matrices."""
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")


def require_shape(a: np.ndarray, shape: tuple[int, int], name: str = "matrix") -> None:
    """Reject matrices whose shape differs from the expected one."""
    if a.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {a.shape}")


def require_positive(value: float, name: str) -> None:
    """Reject values that are not strictly positive and finite."""
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive, got {value}")


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    """Check if a square matrix equals its conjugate transpose within tol."""
    scale = max(1.0, float(np.max(np.abs(a))))
    return bool(np.max(np.abs(a - a.conj().T)) <= tol * scale)


def require_hermitian(a: np.ndarray, name: str = "matrix") -> None:
    """Reject matrices that are not Hermitian within tolerance."""
    require_square(a, name)
    if not is_hermitian(a):
        raise ValidationError(f"{name} is not Hermitian")


def require_psd(a: np.ndarray, name: str = "matrix") -> None:
    """Reject Hermitian matrices with eigenvalues below the clipping threshold."""
    require_hermitian(a, name)
    eigenvalues = np.linalg.eigvalsh(hermitian_part(a))
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    if eigenvalues[0] < -PSD_CLIP_TOL * scale:
        raise NotPSDError(
            f"{name} is not positive semidefinite (smallest eigenvalue {eigenvalues[0]:.3e})"
        )


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """Return (A + A^H) / 2."""
    return 0.5 * (a + a.conj().T)
