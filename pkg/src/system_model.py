# ABOUTME: Multi-hop amplify-and-forward signal model under Kronecker channel errors.
# ABOUTME: Covariance recursion, MSE and MMSE matrices, LMMSE equalizer and scalar metrics.

import logging
from dataclasses import dataclass, replace
from typing import Any

import numpy as np
from scipy import linalg as sla

from validation import (
    COND_TOL,
    ConditioningError,
    ValidationError,
    as_matrix,
    hermitian_part,
    require_positive,
    require_psd,
    require_shape,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HopModel:
    """One hop: estimated channel, error covariances, noise variance and power budget."""

    h_bar: np.ndarray
    sigma: np.ndarray
    psi: np.ndarray
    noise_var: float
    power_budget: float

    def __post_init__(self):
        h_bar = as_matrix(self.h_bar, "h_bar")
        sigma = as_matrix(self.sigma, "sigma")
        psi = as_matrix(self.psi, "psi")
        rx_dim, tx_dim = h_bar.shape
        require_shape(sigma, (rx_dim, rx_dim), "sigma")
        require_shape(psi, (tx_dim, tx_dim), "psi")
        require_psd(sigma, "sigma")
        require_psd(psi, "psi")
        require_positive(self.noise_var, "noise_var")
        require_positive(self.power_budget, "power_budget")
        object.__setattr__(self, "h_bar", h_bar)
        object.__setattr__(self, "sigma", hermitian_part(sigma))
        object.__setattr__(self, "psi", hermitian_part(psi))
        object.__setattr__(self, "noise_var", float(self.noise_var))
        object.__setattr__(self, "power_budget", float(self.power_budget))

    @property
    def rx_dim(self) -> int:
        return self.h_bar.shape[0]

    @property
    def tx_dim(self) -> int:
        return self.h_bar.shape[1]

    def without_errors(self) -> "HopModel":
        """Copy of the hop that treats the estimated channel as exact."""
        return replace(
            self,
            sigma=np.zeros_like(self.sigma),
            psi=np.zeros_like(self.psi),
        )


@dataclass(frozen=True)
class NetworkModel:
    """Ordered chain of K hops carrying N data streams."""

    hops: tuple[HopModel, ...]
    n_streams: int

    def __post_init__(self):
        hops = tuple(self.hops)
        object.__setattr__(self, "hops", hops)
        if not hops:
            raise ValidationError("network needs at least one hop")
        if self.n_streams < 1:
            raise ValidationError(f"n_streams must be at least 1, got {self.n_streams}")
        for k, hop in enumerate(hops, start=1):
            if hop.rx_dim < self.n_streams or hop.tx_dim < self.n_streams:
                raise ValidationError(
                    f"hop {k} is {hop.rx_dim}x{hop.tx_dim}, too small for {self.n_streams} streams"
                )
        for k in range(1, len(hops)):
            if hops[k].tx_dim != hops[k - 1].rx_dim:
                raise ValidationError(
                    f"hop {k + 1} transmits from {hops[k].tx_dim} antennas "
                    f"but hop {k} delivers {hops[k - 1].rx_dim}"
                )

    @property
    def k_hops(self) -> int:
        return len(self.hops)

    def input_dim(self, k: int) -> int:
        """Column count of the k-th precoder (0-based hop index)."""
        return self.n_streams if k == 0 else self.hops[k - 1].rx_dim

    def without_errors(self) -> "NetworkModel":
        return NetworkModel(hops=tuple(h.without_errors() for h in self.hops), n_streams=self.n_streams)


@dataclass(frozen=True)
class Transceiver:
    """Precoders P_1..P_K, equalizer G, and the design internals that produced them."""

    precoders: tuple[np.ndarray, ...]
    equalizer: np.ndarray
    internals: Any = None
    objective_value: float | None = None


def _check_precoders(network: NetworkModel, precoders) -> list[np.ndarray]:
    if len(precoders) != network.k_hops:
        raise ValidationError(f"expected {network.k_hops} precoders, got {len(precoders)}")
    checked = []
    for k, (hop, p) in enumerate(zip(network.hops, precoders)):
        p = as_matrix(p, f"precoder {k + 1}")
        require_shape(p, (hop.tx_dim, network.input_dim(k)), f"precoder {k + 1}")
        checked.append(p)
    return checked


def _propagate(hop: HopModel, p: np.ndarray, r_in: np.ndarray) -> np.ndarray:
    t = p @ r_in @ p.conj().T
    r_out = (
        hop.h_bar @ t @ hop.h_bar.conj().T
        + np.real(np.trace(t @ hop.psi)) * hop.sigma
        + hop.noise_var * np.eye(hop.rx_dim)
    )
    return hermitian_part(r_out)


def _signal_chain(network: NetworkModel, precoders: list[np.ndarray]) -> np.ndarray:
    """H_K P_K ... H_1 P_1 built from the estimated channels."""
    chain = np.eye(network.n_streams, dtype=complex)
    for hop, p in zip(network.hops, precoders):
        chain = hop.h_bar @ p @ chain
    return chain


def signal_covariances(network: NetworkModel, precoders) -> list[np.ndarray]:
    """Covariances R_x1..R_xK of the received signals, starting from R_x0 = I_N."""
    precoders = _check_precoders(network, precoders)
    r = np.eye(network.n_streams, dtype=complex)
    covariances = []
    for hop, p in zip(network.hops, precoders):
        r = _propagate(hop, p, r)
        covariances.append(r)
    return covariances


def mse_matrix(network: NetworkModel, precoders, equalizer) -> np.ndarray:
    """MSE matrix of data recovery for an arbitrary linear equalizer."""
    precoders = _check_precoders(network, precoders)
    g = as_matrix(equalizer, "equalizer")
    require_shape(g, (network.n_streams, network.hops[-1].rx_dim), "equalizer")

    r_received = signal_covariances(network, precoders)[-1]
    chain = _signal_chain(network, precoders)
    cross = g @ chain
    phi = g @ r_received @ g.conj().T + np.eye(network.n_streams) - cross.conj().T - cross
    return hermitian_part(phi)


def _solve_received(network: NetworkModel, precoders: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Return (chain, R^-1 chain) for the destination covariance R."""
    r_received = signal_covariances(network, precoders)[-1]
    chain = _signal_chain(network, precoders)
    eigenvalues = np.linalg.eigvalsh(r_received)
    if eigenvalues[0] <= COND_TOL * max(1.0, eigenvalues[-1]):
        raise ConditioningError(
            f"received covariance is singular (smallest eigenvalue {eigenvalues[0]:.3e})",
            smallest_eigenvalue=float(eigenvalues[0]),
        )
    try:
        solved = sla.solve(r_received, chain, assume_a="pos")
    except (np.linalg.LinAlgError, sla.LinAlgError) as e:
        raise ConditioningError(f"received covariance could not be inverted: {e}") from e
    return chain, solved


def lmmse_equalizer(network: NetworkModel, precoders) -> np.ndarray:
    """Linear MMSE equalizer G = B^H R_xK^-1."""
    precoders = _check_precoders(network, precoders)
    _, solved = _solve_received(network, precoders)
    return solved.conj().T


def mmse_matrix(network: NetworkModel, precoders) -> np.ndarray:
    """MSE matrix at the LMMSE equalizer, I - B^H R_xK^-1 B."""
    precoders = _check_precoders(network, precoders)
    chain, solved = _solve_received(network, precoders)
    return hermitian_part(np.eye(network.n_streams) - chain.conj().T @ solved)


def log2_det(phi: np.ndarray) -> float:
    """log2 det of a Hermitian positive definite matrix."""
    sign, logdet = np.linalg.slogdet(hermitian_part(phi))
    if np.real(sign) <= 0:
        raise ConditioningError("MSE matrix is not positive definite")
    return float(logdet / np.log(2.0))


def sum_rate(network: NetworkModel, precoders) -> float:
    """Sum rate in bits, -log2 det of the MMSE matrix."""
    return -log2_det(mmse_matrix(network, precoders))


def weighted_mse(w, phi) -> float:
    """Tr(W Phi)."""
    w = as_matrix(w, "w")
    phi = as_matrix(phi, "phi")
    require_shape(w, phi.shape, "w")
    return float(np.real(np.trace(w @ phi)))


def max_mse(phi) -> float:
    """Largest diagonal entry of an MSE matrix."""
    return float(np.max(np.real(np.diag(phi))))


def transmit_powers(network: NetworkModel, precoders) -> list[float]:
    """Average transmit power Tr(P_k R_x(k-1) P_k^H) at every hop."""
    precoders = _check_precoders(network, precoders)
    powers = []
    r = np.eye(network.n_streams, dtype=complex)
    for hop, p in zip(network.hops, precoders):
        powers.append(float(np.real(np.trace(p @ r @ p.conj().T))))
        r = _propagate(hop, p, r)
    return powers
