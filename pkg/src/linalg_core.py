# ABOUTME: Dense complex linear algebra primitives with fixed ordering conventions.
# ABOUTME: Hermitian roots, ordered SVD and eigendecomposition, DFT and Kronecker sampling.

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from validation import (
    COND_TOL,
    PSD_CLIP_TOL,
    ConditioningError,
    NotPSDError,
    ValidationError,
    as_matrix,
    hermitian_part,
    require_hermitian,
)

# Relative slack when picking the largest-magnitude entry of a column
PHASE_TIE_TOL = 1e-12

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OrderedSVD:
    """SVD with non-increasing singular values: a = u @ diag(s) @ v^H."""

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class OrderedEig:
    """Hermitian eigendecomposition with non-increasing eigenvalues."""

    u: np.ndarray
    eigenvalues: np.ndarray


def _anchor_phase(column: np.ndarray) -> complex:
    """Unit phasor that makes the largest-magnitude entry real-positive."""
    mags = np.abs(column)
    peak = mags.max()
    if peak == 0:
        return 1.0 + 0j
    idx = int(np.flatnonzero(mags >= peak * (1 - PHASE_TIE_TOL))[0])
    return np.conj(column[idx]) / mags[idx]


def _eigh_descending(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    eigenvalues, vectors = np.linalg.eigh(hermitian_part(a))
    # stable so tied eigenvalues keep the index order eigh gave them
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], vectors[:, order]


def hermitian_sqrt(a) -> np.ndarray:
    """Hermitian square root of a Hermitian PSD matrix."""
    a = as_matrix(a, "hermitian_sqrt input")
    require_hermitian(a, "hermitian_sqrt input")
    eigenvalues, vectors = _eigh_descending(a)
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    if eigenvalues[-1] < -PSD_CLIP_TOL * scale:
        raise NotPSDError(
            f"matrix is not positive semidefinite (smallest eigenvalue {eigenvalues[-1]:.3e})"
        )
    roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
    return hermitian_part((vectors * roots) @ vectors.conj().T)


def hermitian_inv_sqrt(a) -> np.ndarray:
    """Inverse Hermitian square root of a Hermitian positive definite matrix."""
    a = as_matrix(a, "hermitian_inv_sqrt input")
    require_hermitian(a, "hermitian_inv_sqrt input")
    eigenvalues, vectors = _eigh_descending(a)
    smallest = float(eigenvalues[-1])
    if smallest <= COND_TOL:
        raise ConditioningError(
            f"matrix is near-singular (smallest eigenvalue {smallest:.3e})",
            smallest_eigenvalue=smallest,
        )
    return hermitian_part((vectors / np.sqrt(eigenvalues)) @ vectors.conj().T)


def ordered_svd(a) -> OrderedSVD:
    """Full SVD with descending singular values and a deterministic phase convention.

    The largest-magnitude entry of every column of u is made real-positive; the
    paired column of v gets the same phase so the product is unchanged. Columns
    of v beyond the rank get their own anchoring.
    """
    a = as_matrix(a, "ordered_svd input")
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    v = vh.conj().T
    rank_dim = s.size
    for j in range(u.shape[1]):
        phase = _anchor_phase(u[:, j])
        u[:, j] *= phase
        if j < rank_dim:
            v[:, j] *= phase
    for j in range(rank_dim, v.shape[1]):
        v[:, j] *= _anchor_phase(v[:, j])
    return OrderedSVD(u=u, singular_values=s, v=v)


def ordered_eig_hermitian(a) -> OrderedEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues non-increasing."""
    a = as_matrix(a, "ordered_eig_hermitian input")
    require_hermitian(a, "ordered_eig_hermitian input")
    eigenvalues, vectors = _eigh_descending(a)
    vectors = vectors.copy()
    for j in range(vectors.shape[1]):
        vectors[:, j] *= _anchor_phase(vectors[:, j])
    return OrderedEig(u=vectors, eigenvalues=eigenvalues.copy())


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix Q[m, l] = exp(-2j*pi*m*l/n) / sqrt(n)."""
    if n < 1:
        raise ValidationError(f"DFT size must be at least 1, got {n}")
    return sla.dft(n, scale="sqrtn").astype(complex)


def sample_kronecker_gaussian(
    m: int,
    n: int,
    row_cov,
    col_cov,
    rng: np.random.Generator,
    count: int | None = None,
) -> np.ndarray:
    """Draw row_cov^(1/2) @ H_W @ col_cov^(1/2) with H_W i.i.d. CN(0, 1).

    With count given, returns a (count, m, n) stack of independent draws.
    """
    row_cov = as_matrix(row_cov, "row_cov")
    col_cov = as_matrix(col_cov, "col_cov")
    if row_cov.shape != (m, m):
        raise ValidationError(f"row_cov must be {m}x{m}, got {row_cov.shape}")
    if col_cov.shape != (n, n):
        raise ValidationError(f"col_cov must be {n}x{n}, got {col_cov.shape}")

    shape = (m, n) if count is None else (count, m, n)
    white = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return hermitian_sqrt(row_cov) @ white @ hermitian_sqrt(col_cov)
