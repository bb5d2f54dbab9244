# ABOUTME: Robust joint design of source precoder, relay matrices and destination equalizer.
# ABOUTME: Effective channels, iterative water-filling, and closed-form factor assembly.

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from linalg_core import (
    OrderedSVD,
    hermitian_inv_sqrt,
    ordered_eig_hermitian,
    ordered_svd,
)
from objectives import (
    Capacity,
    MaxMSE,
    Objective,
    WeightedMSE,
    WeightedSumRate,
    evaluate_objective,
    rotation_matrix,
)
from system_model import (
    HopModel,
    NetworkModel,
    Transceiver,
    lmmse_equalizer,
    mmse_matrix,
    mse_matrix,
    transmit_powers,
)
from validation import (
    ConsistencyError,
    DegenerateChannelError,
    InfeasibleStructureError,
    NumericalError,
    ValidationError,
    hermitian_part,
)

# Solver defaults
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200

# Tolerance for treating a covariance as a scaled identity
PROPORTIONAL_TOL = 1e-10

# Postcondition tolerances
POWER_CLOSURE_TOL = 1e-6
ETA_TOL = 1e-8

# Multiplier bracketing
MU_SEARCH_HALVINGS = 2000
MU_RTOL = 4 * np.finfo(float).eps

logger = logging.getLogger(__name__)


def check_stopping_rule(tol: float, max_iter: int) -> None:
    if not tol > 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be at least 1, got {max_iter}")


@dataclass(frozen=True)
class DesignOptions:
    """Water-filling stopping rule."""

    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        check_stopping_rule(self.tol, self.max_iter)


@dataclass(frozen=True)
class EffectiveHop:
    """Whitened estimated channel of one hop and its ordered SVD."""

    norm_error_cov: np.ndarray
    channel: np.ndarray
    svd: OrderedSVD
    gains: np.ndarray
    v_n: np.ndarray
    whitener: np.ndarray
    alpha: float
    surrogate: bool


@dataclass(frozen=True)
class Allocation:
    """Per-hop, per-stream squared amplitudes f^2 from iterative water-filling."""

    f_sq: np.ndarray
    multipliers: np.ndarray
    objective_trace: tuple[float, ...]
    iterations: int
    converged: bool


@dataclass(frozen=True)
class HopFactors:
    """K_F, Pi and A of one hop for a given F."""

    k_f: np.ndarray
    k_f_inv_sqrt: np.ndarray
    pi: np.ndarray
    pi_inv_sqrt: np.ndarray
    a: np.ndarray


@dataclass(frozen=True)
class DesignInternals:
    """Everything the closed-form design was assembled from."""

    effective_hops: tuple[EffectiveHop, ...]
    allocation: Allocation
    f_mats: tuple[np.ndarray, ...]
    q_mats: tuple[np.ndarray, ...]
    xi: tuple[float, ...]
    gamma: np.ndarray

    @property
    def gains(self) -> np.ndarray:
        return np.vstack([eff.gains for eff in self.effective_hops])

    @property
    def lambda_f(self) -> np.ndarray:
        return np.sqrt(self.allocation.f_sq)


# --- effective channel -------------------------------------------------------


def _identity_scale(a: np.ndarray) -> float | None:
    """Return c when a = c*I within tolerance, else None."""
    n = a.shape[0]
    scale = float(np.real(np.trace(a))) / n
    if np.max(np.abs(a - scale * np.eye(n))) <= PROPORTIONAL_TOL:
        return scale
    return None


def error_regime(hop: HopModel) -> str:
    """Which closed form applies: 'sigma_scaled', 'psi_scaled' or 'bounded'."""
    if _identity_scale(hop.sigma) is not None:
        return "sigma_scaled"
    if _identity_scale(hop.psi) is not None:
        return "psi_scaled"
    return "bounded"


def normalized_error_cov(hop: HopModel) -> np.ndarray:
    """K_F / eta for the hop.

    Exact when Sigma or Psi is a scaled identity. Otherwise returns the upper
    bound obtained by replacing Psi with its largest eigenvalue; the resulting
    design is a surrogate and a warning is logged.
    """
    m = hop.rx_dim
    eye = np.eye(m)
    alpha = float(np.real(np.trace(hop.sigma))) / m
    p, noise = hop.power_budget, hop.noise_var

    regime = error_regime(hop)
    if regime == "sigma_scaled":
        return eye.astype(complex)
    if regime == "psi_scaled":
        beta = _identity_scale(hop.psi)
        return (beta * p * hop.sigma + noise * eye) / (alpha * beta * p + noise)

    lam = float(np.linalg.eigvalsh(hop.psi)[-1])
    denom = p * lam * alpha + noise
    logger.warning("Sigma and Psi are both non-scalar; using the bounded surrogate covariance")
    return hermitian_part((p * lam / denom) * hop.sigma + (noise / denom) * eye)


def effective_channel(hop: HopModel, n_streams: int) -> EffectiveHop:
    """Whiten the estimated channel and take its ordered SVD."""
    c = normalized_error_cov(hop)
    alpha = float(np.real(np.trace(hop.sigma))) / hop.rx_dim
    whitener = hermitian_inv_sqrt(
        alpha * hop.power_budget * hop.psi + hop.noise_var * np.eye(hop.tx_dim)
    )
    channel = hermitian_inv_sqrt(c) @ hop.h_bar @ whitener
    svd = ordered_svd(channel)
    return EffectiveHop(
        norm_error_cov=c,
        channel=channel,
        svd=svd,
        gains=svd.singular_values[:n_streams].copy(),
        v_n=svd.v[:, :n_streams],
        whitener=whitener,
        alpha=alpha,
        surrogate=error_regime(hop) == "bounded",
    )


# --- iterative water-filling -------------------------------------------------


def _stream_levels(kind: str, h_sq: np.ndarray, a: np.ndarray, weight: np.ndarray, mu: float) -> np.ndarray:
    """Per-stream SNR x = f^2 h^2 at multiplier mu (inputs restricted to active streams)."""
    if kind == "mse":
        return np.maximum(np.sqrt(weight * a * h_sq / mu) - 1.0, 0.0)
    c = weight * h_sq / mu
    t = 2.0 * a * c / (a + np.sqrt(a * a + 4.0 * (1.0 - a) * a * c))
    return np.maximum(t - 1.0, 0.0)


def _fill_hop(
    kind: str,
    h_sq: np.ndarray,
    a: np.ndarray,
    weight: np.ndarray,
    budget: float,
    hop_index: int,
) -> tuple[np.ndarray, float]:
    """Optimal f^2 of one hop with the other hops fixed; returns (f_sq, mu)."""
    active = (h_sq > 0) & (a > 0) & (weight > 0)
    if not active.any():
        raise DegenerateChannelError(f"hop {hop_index + 1} has no stream with usable gain")

    h_act, a_act, w_act = h_sq[active], a[active], weight[active]

    def excess(mu: float) -> float:
        return float(np.sum(_stream_levels(kind, h_act, a_act, w_act, mu) / h_act)) - budget

    mu_max = float(np.max(w_act * a_act * h_act))
    mu_lo = 0.5 * mu_max
    for _ in range(MU_SEARCH_HALVINGS):
        if excess(mu_lo) > 0:
            break
        mu_lo *= 0.5
    else:
        raise NumericalError(f"could not bracket the water level on hop {hop_index + 1}")

    mu = optimize.brentq(excess, mu_lo, mu_max, xtol=1e-14 * mu_max, rtol=MU_RTOL)

    f_sq = np.zeros_like(h_sq)
    f_sq[active] = _stream_levels(kind, h_act, a_act, w_act, mu) / h_act
    total = f_sq.sum()
    if total <= 0:
        raise NumericalError(f"water level on hop {hop_index + 1} allocates no power")
    return f_sq * (budget / total), float(mu)


def _stream_gamma(x: np.ndarray) -> np.ndarray:
    return np.prod(x / (1.0 + x), axis=0)


def _cost(kind: str, gamma: np.ndarray, weight: np.ndarray) -> float:
    if kind == "mse":
        return float(np.sum(weight * (1.0 - gamma)))
    return float(np.sum(weight * np.log1p(-gamma)) / np.log(2.0))


def _check_gains(gains, budgets) -> tuple[np.ndarray, np.ndarray]:
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    budgets = np.atleast_1d(np.asarray(budgets, dtype=float))
    if gains.ndim != 2 or budgets.shape != (gains.shape[0],):
        raise ValidationError(
            f"gains must be K x N with K budgets, got {gains.shape} and {budgets.shape}"
        )
    if not np.all(np.isfinite(gains)) or np.any(gains < 0):
        raise ValidationError("gains must be finite and non-negative")
    if not np.all(np.isfinite(budgets)) or np.any(budgets <= 0):
        raise ValidationError("power budgets must be positive")
    return gains, budgets


def _iterative_waterfill(
    kind: str,
    gains,
    weight,
    budgets,
    tol: float,
    max_iter: int,
) -> Allocation:
    gains, budgets = _check_gains(gains, budgets)
    k_hops, n = gains.shape
    weight = np.asarray(weight, dtype=float).ravel()
    if weight.size != n:
        raise ValidationError(f"expected {n} stream weights, got {weight.size}")
    check_stopping_rule(tol, max_iter)

    h_sq = gains**2
    f_sq = np.zeros_like(h_sq)
    for k in range(k_hops):
        live = h_sq[k] > 0
        if not live.any():
            raise DegenerateChannelError(f"all gains of hop {k + 1} are zero")
        f_sq[k, live] = budgets[k] / live.sum()

    x = f_sq * h_sq
    multipliers = np.zeros(k_hops)
    trace = [_cost(kind, _stream_gamma(x), weight)]
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        for k in range(k_hops):
            ratio = x / (1.0 + x)
            a = np.prod(np.delete(ratio, k, axis=0), axis=0)
            f_sq[k], multipliers[k] = _fill_hop(kind, h_sq[k], a, weight, budgets[k], k)
            x[k] = f_sq[k] * h_sq[k]

        trace.append(_cost(kind, _stream_gamma(x), weight))
        prev, cur = trace[-2], trace[-1]
        if abs(prev - cur) <= tol * max(abs(prev), np.finfo(float).tiny):
            converged = True
            break

    if not converged:
        logger.warning(f"Water-filling stopped after {max_iter} sweeps without converging")

    return Allocation(
        f_sq=f_sq,
        multipliers=multipliers,
        objective_trace=tuple(trace),
        iterations=iterations,
        converged=converged,
    )


def waterfill_weighted_mse(gains, w, budgets, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> Allocation:
    """Iterative water-filling for sum_i w_i (1 - gamma_i)."""
    w = np.asarray(w, dtype=float).ravel()
    if not np.all(np.isfinite(w)) or np.any(w < 0) or not np.any(w > 0):
        raise ValidationError("MSE weights must be non-negative with at least one positive")
    return _iterative_waterfill("mse", gains, w, budgets, tol, max_iter)


def waterfill_maxmse(gains, budgets, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> Allocation:
    """Max-MSE allocation: the weighted MSE solver with unit weights."""
    gains, budgets = _check_gains(gains, budgets)
    return waterfill_weighted_mse(gains, np.ones(gains.shape[1]), budgets, tol, max_iter)


def waterfill_capacity(gains, budgets, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> Allocation:
    """Iterative water-filling for sum_i log2(1 - gamma_i)."""
    gains, budgets = _check_gains(gains, budgets)
    return _iterative_waterfill("rate", gains, np.ones(gains.shape[1]), budgets, tol, max_iter)


def waterfill_weighted_sumrate(gains, v, budgets, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> Allocation:
    """Capacity water-filling with stream i's multiplier divided by v_i."""
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ValidationError("rate weights v must be positive")
    if np.any(np.diff(v) > 0):
        raise ValidationError("rate weights v must be sorted non-increasing")
    return _iterative_waterfill("rate", gains, v, budgets, tol, max_iter)


def solve_allocation(objective: Objective, gains, budgets, options: DesignOptions) -> Allocation:
    """Dispatch to the water-filling variant of the objective."""
    match objective:
        case WeightedMSE():
            return waterfill_weighted_mse(gains, objective.weights, budgets, options.tol, options.max_iter)
        case MaxMSE():
            return waterfill_maxmse(gains, budgets, options.tol, options.max_iter)
        case Capacity():
            return waterfill_capacity(gains, budgets, options.tol, options.max_iter)
        case WeightedSumRate():
            return waterfill_weighted_sumrate(gains, objective.v, budgets, options.tol, options.max_iter)
    raise ValidationError(f"unsupported objective {objective!r}")


# --- closed-form assembly ----------------------------------------------------


def compute_xi(hop: HopModel, eff: EffectiveHop, lambda_f) -> float:
    """Scaling xi that makes eta(F) self-consistent."""
    lambda_f = np.asarray(lambda_f, dtype=float)
    b = eff.whitener @ eff.v_n
    coupling = np.real(np.einsum("ij,ik,kj->j", b.conj(), hop.psi, b))
    denom = 1.0 - eff.alpha * float(np.sum(lambda_f**2 * coupling))
    if denom <= 0:
        raise InfeasibleStructureError(f"xi denominator is non-positive ({denom:.3e})")
    return hop.noise_var / denom


def assemble_F(
    hop: HopModel,
    eff: EffectiveHop,
    lambda_f,
    input_dim: int | None = None,
    u_f: np.ndarray | None = None,
) -> np.ndarray:
    """F_k = sqrt(xi) W^(-1/2) V_N Lambda_F U_F,N^H.

    u_f is the free unitary on the input side; its first N columns are used.
    Identity by default.
    """
    lambda_f = np.asarray(lambda_f, dtype=float).ravel()
    n = lambda_f.size
    input_dim = n if input_dim is None else input_dim
    u_n = np.eye(input_dim)[:, :n] if u_f is None else np.asarray(u_f)[:, :n]

    xi = compute_xi(hop, eff, lambda_f)
    f = np.sqrt(xi) * (eff.whitener @ eff.v_n) * lambda_f @ u_n.conj().T

    ff = f @ f.conj().T
    power = float(np.real(np.trace(ff)))
    if abs(power - hop.power_budget) > POWER_CLOSURE_TOL * hop.power_budget:
        raise ConsistencyError(f"Tr(FF^H) = {power:.6g} but the budget is {hop.power_budget:.6g}")
    eta = eff.alpha * float(np.real(np.trace(ff @ hop.psi))) + hop.noise_var
    if abs(eta - xi) > ETA_TOL * xi:
        raise ConsistencyError(f"eta = {eta:.12g} disagrees with xi = {xi:.12g}")
    return f


def hop_factors(hop: HopModel, f: np.ndarray) -> HopFactors:
    """K_F = Tr(FF^H Psi) Sigma + noise I, Pi = Z Z^H + I and A = Pi^(-1/2) Z with Z = K_F^(-1/2) H F."""
    k_f = float(np.real(np.trace(f @ f.conj().T @ hop.psi))) * hop.sigma + hop.noise_var * np.eye(hop.rx_dim)
    k_f = hermitian_part(k_f)
    k_f_inv_sqrt = hermitian_inv_sqrt(k_f)
    z = k_f_inv_sqrt @ hop.h_bar @ f
    pi = hermitian_part(z @ z.conj().T + np.eye(hop.rx_dim))
    pi_inv_sqrt = hermitian_inv_sqrt(pi)
    return HopFactors(k_f=k_f, k_f_inv_sqrt=k_f_inv_sqrt, pi=pi, pi_inv_sqrt=pi_inv_sqrt, a=pi_inv_sqrt @ z)


def theta_matrix(factors: list[HopFactors], q_list: list[np.ndarray]) -> np.ndarray:
    """Theta = M^H M with M = Q_K A_K ... Q_1 A_1."""
    product = None
    for k, fac in enumerate(factors, start=1):
        step = q_list[k] @ fac.a
        product = step if product is None else step @ product
    return hermitian_part(product.conj().T @ product)


def assemble_rotations(network: NetworkModel, objective: Objective, f_list: list[np.ndarray]) -> list[np.ndarray]:
    """Q_0..Q_K: inter-hop alignment Q_k = V_A(k+1) U_A(k)^H, Q_K = I, and Q_0 = U_Theta U_Omega^H."""
    factors = [hop_factors(hop, f) for hop, f in zip(network.hops, f_list)]
    svds = [ordered_svd(fac.a) for fac in factors]

    q_list: list[np.ndarray] = [None] * (network.k_hops + 1)
    for k in range(1, network.k_hops):
        q_list[k] = svds[k].v @ svds[k - 1].u.conj().T
    q_list[network.k_hops] = np.eye(network.hops[-1].rx_dim, dtype=complex)

    theta = theta_matrix(factors, q_list)
    u_theta = ordered_eig_hermitian(theta).u
    q_list[0] = u_theta @ rotation_matrix(objective, network.n_streams).conj().T
    return q_list


def recover_precoders(network: NetworkModel, f_list: list[np.ndarray], q_list: list[np.ndarray]) -> Transceiver:
    """Invert the F substitution: P_1 = F_1 Q_0, P_k = F_k Q_(k-1) Pi_(k-1)^(-1/2) K_F(k-1)^(-1/2)."""
    precoders = [f_list[0] @ q_list[0]]
    for k in range(1, network.k_hops):
        prev = hop_factors(network.hops[k - 1], f_list[k - 1])
        precoders.append(f_list[k] @ q_list[k] @ prev.pi_inv_sqrt @ prev.k_f_inv_sqrt)

    for k, (hop, power) in enumerate(zip(network.hops, transmit_powers(network, precoders)), start=1):
        if abs(power - hop.power_budget) > POWER_CLOSURE_TOL * hop.power_budget:
            raise ConsistencyError(
                f"hop {k} transmits {power:.9g} but the budget is {hop.power_budget:.9g}"
            )

    return Transceiver(precoders=tuple(precoders), equalizer=lmmse_equalizer(network, precoders))


def design(network: NetworkModel, objective: Objective, options: DesignOptions | None = None) -> Transceiver:
    """Robust transceiver design for the estimated network and its error model."""
    options = options or DesignOptions()
    effs = [effective_channel(hop, network.n_streams) for hop in network.hops]
    gains = np.vstack([eff.gains for eff in effs])
    budgets = np.array([hop.power_budget for hop in network.hops])

    alloc = solve_allocation(objective, gains, budgets, options)
    lambda_f = np.sqrt(alloc.f_sq)

    f_list = [
        assemble_F(hop, eff, lambda_f[k], network.input_dim(k))
        for k, (hop, eff) in enumerate(zip(network.hops, effs))
    ]
    xi = tuple(compute_xi(hop, eff, lambda_f[k]) for k, (hop, eff) in enumerate(zip(network.hops, effs)))
    q_list = assemble_rotations(network, objective, f_list)
    tx = recover_precoders(network, f_list, q_list)

    x = alloc.f_sq * gains**2
    internals = DesignInternals(
        effective_hops=tuple(effs),
        allocation=alloc,
        f_mats=tuple(f_list),
        q_mats=tuple(q_list),
        xi=xi,
        gamma=_stream_gamma(x),
    )
    value = evaluate_objective(objective, mmse_matrix(network, tx.precoders))
    logger.debug(f"Designed {objective.name} transceiver in {alloc.iterations} sweeps, objective {value:.6g}")
    return replace(tx, internals=internals, objective_value=value)


def nonrobust_design(network: NetworkModel, objective: Objective, options: DesignOptions | None = None) -> Transceiver:
    """Design as if the estimated channel were exact, then score it under the error model."""
    naive = design(network.without_errors(), objective, options)
    phi = mse_matrix(network, naive.precoders, naive.equalizer)
    return replace(naive, objective_value=evaluate_objective(objective, phi))
