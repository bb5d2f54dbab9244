# ABOUTME: The four transceiver design objectives and their scalar reductions.
# ABOUTME: Maps each objective to its optimal source rotation and to g(gamma).

import logging
from dataclasses import dataclass

import numpy as np

from linalg_core import dft_matrix, ordered_eig_hermitian
from system_model import log2_det, max_mse, weighted_mse
from validation import (
    DomainError,
    ValidationError,
    as_matrix,
    hermitian_part,
    require_psd,
)

# Largest gamma accepted by the log-based objectives
GAMMA_CEILING = 1 - 1e-12
# Slack for the sorted-gamma contract
SORT_TOL = 1e-12

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightedMSE:
    """Minimize Tr(W Phi) for a Hermitian PSD weighting matrix W."""

    w: np.ndarray
    name = "weighted_mse"

    def __post_init__(self):
        w = as_matrix(self.w, "W")
        require_psd(w, "W")
        object.__setattr__(self, "w", hermitian_part(w))

    @property
    def weights(self) -> np.ndarray:
        """Eigenvalues of W in non-increasing order."""
        return np.clip(ordered_eig_hermitian(self.w).eigenvalues, 0.0, None)


@dataclass(frozen=True)
class Capacity:
    """Maximize the mutual information lower bound -log2 det Phi."""

    name = "capacity"


@dataclass(frozen=True)
class MaxMSE:
    """Minimize the largest per-stream MSE."""

    name = "max_mse"


@dataclass(frozen=True)
class WeightedSumRate:
    """Maximize sum_i v_i log2(1 / MSE_i) with v sorted non-increasing."""

    v: np.ndarray
    name = "weighted_sum_rate"

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).ravel()
        if v.size == 0 or not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValidationError("rate weights v must be positive and finite")
        if np.any(np.diff(v) > 0):
            raise ValidationError("rate weights v must be sorted non-increasing")
        object.__setattr__(self, "v", v)


Objective = WeightedMSE | Capacity | MaxMSE | WeightedSumRate

OBJECTIVE_NAMES = ("weighted_mse", "capacity", "max_mse", "weighted_sum_rate")


def make_objective(
    kind: str,
    n: int,
    weights: list[float] | None = None,
    rate_weights: list[float] | None = None,
) -> Objective:
    """Build an objective by name; weights fill the diagonal of W."""
    match kind:
        case "weighted_mse":
            diag = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
            if diag.size != n:
                raise ValidationError(f"weights needs {n} entries, got {diag.size}")
            return WeightedMSE(w=np.diag(diag))
        case "capacity":
            return Capacity()
        case "max_mse":
            return MaxMSE()
        case "weighted_sum_rate":
            v = np.ones(n) if rate_weights is None else np.asarray(rate_weights, dtype=float)
            if v.size != n:
                raise ValidationError(f"rate_weights needs {n} entries, got {v.size}")
            return WeightedSumRate(v=v)
    raise ValidationError(f"unknown objective '{kind}', expected one of {', '.join(OBJECTIVE_NAMES)}")


def _require_size(obj: Objective, n: int) -> None:
    if isinstance(obj, WeightedMSE) and obj.w.shape != (n, n):
        raise ValidationError(f"W is {obj.w.shape}, expected {n}x{n}")
    if isinstance(obj, WeightedSumRate) and obj.v.size != n:
        raise ValidationError(f"v has {obj.v.size} entries, expected {n}")


def rotation_matrix(obj: Objective, n: int) -> np.ndarray:
    """Unitary U_Omega that the source rotation aligns the MSE matrix with."""
    _require_size(obj, n)
    match obj:
        case WeightedMSE():
            return ordered_eig_hermitian(obj.w).u
        case MaxMSE():
            return dft_matrix(n)
        case _:
            return np.eye(n, dtype=complex)


def scalar_objective(obj: Objective, gamma) -> float:
    """g(gamma) for the objective; gamma must be sorted non-increasing."""
    gamma = np.asarray(gamma, dtype=float).ravel()
    _require_size(obj, gamma.size)
    if np.any(np.diff(gamma) > SORT_TOL):
        raise ValidationError("gamma must be sorted non-increasing")
    if np.any(gamma < 0) or np.any(gamma > 1):
        raise DomainError("gamma entries must lie in [0, 1]")

    match obj:
        case WeightedMSE():
            return float(np.sum(obj.weights * (1 - gamma)))
        case MaxMSE():
            return float(1 - np.mean(gamma))

    if np.any(gamma > GAMMA_CEILING):
        raise DomainError("gamma must stay below 1 for rate objectives")
    log_terms = np.log1p(-gamma) / np.log(2.0)
    if isinstance(obj, WeightedSumRate):
        return float(np.sum(obj.v * log_terms))
    return float(np.sum(log_terms))


def evaluate_objective(obj: Objective, phi) -> float:
    """Objective value f(Phi) of a full MSE matrix (lower is better)."""
    phi = as_matrix(phi, "phi")
    _require_size(obj, phi.shape[0])
    match obj:
        case WeightedMSE():
            return weighted_mse(obj.w, phi)
        case Capacity():
            return log2_det(phi)
        case MaxMSE():
            return max_mse(phi)
        case WeightedSumRate():
            ascending = np.sort(np.real(np.diag(phi)))
            return float(np.sum(obj.v * np.log2(ascending)))
