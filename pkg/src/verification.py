# ABOUTME: Property suites run by the verify command over seeded random designs.
# ABOUTME: Power closure, gamma identity, dominance, majorization, gauge and oracle checks.

import logging
import time
from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from linalg_core import dft_matrix, sample_kronecker_gaussian
from montecarlo import AggregateMetrics, SimConfig, exponential_correlation, paired_pvalue, run_trials, sweep
from objectives import Capacity, MaxMSE, Objective, WeightedMSE, WeightedSumRate, evaluate_objective
from robust_designer import (
    assemble_F,
    assemble_rotations,
    design,
    hop_factors,
    nonrobust_design,
    recover_precoders,
    theta_matrix,
    waterfill_capacity,
    waterfill_maxmse,
    waterfill_weighted_mse,
    waterfill_weighted_sumrate,
)
from system_model import HopModel, NetworkModel, mmse_matrix, mse_matrix, transmit_powers
from validation import ConfigError, ValidationError

LEVELS = ("fast", "full")
VERIFY_SEED = 20240611

# (fast, full) case counts
DESIGN_CASES = {"fast": 12, "full": 50}
PERTURBATIONS = {"fast": 20, "full": 100}
REPLACEMENTS = {"fast": 5, "full": 20}
CONVERGENCE_CASES = {"fast": 100, "full": 1000}
SAMPLER_DRAWS = {"fast": 20000, "full": 100000}
SAMPLER_TOL = {"fast": 0.10, "full": 0.05}
ADVANTAGE_TRIALS = {"fast": 30, "full": 200}

ERROR_GRID = (0.002, 0.004, 0.006, 0.008, 0.01)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuiteResult:
    """Outcome of one property suite."""

    name: str
    passed: bool
    worst: float
    limit: float
    cases: int
    seconds: float = 0.0

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name:<22} worst={self.worst:.3e} limit={self.limit:.0e} "
            f"cases={self.cases} ({self.seconds:.1f}s)"
        )


def _random_psd(rng: np.random.Generator, n: int, trace: float) -> np.ndarray:
    b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = b @ b.conj().T
    return trace * a / np.real(np.trace(a))


def random_network(
    rng: np.random.Generator,
    k_hops: int,
    n_streams: int,
    antennas: int,
    case: str = "sigma_scaled",
    snr_db: float | None = None,
) -> NetworkModel:
    """Random network whose error covariances fit one of the exact closed forms.

    case is 'sigma_scaled' (Sigma = s I), 'psi_scaled' (Psi = b I) or 'perfect'.
    """
    hops = []
    for _ in range(k_hops):
        h_bar = sample_kronecker_gaussian(antennas, antennas, np.eye(antennas), np.eye(antennas), rng)
        if case == "sigma_scaled":
            sigma = rng.uniform(0.2, 1.0) * np.eye(antennas)
            psi = _random_psd(rng, antennas, rng.uniform(0.01, 0.05))
        elif case == "psi_scaled":
            sigma = _random_psd(rng, antennas, antennas)
            psi = rng.uniform(0.002, 0.01) * np.eye(antennas)
        elif case == "perfect":
            sigma = np.zeros((antennas, antennas))
            psi = np.zeros((antennas, antennas))
        else:
            raise ValidationError(f"unknown error case '{case}'")
        snr = rng.uniform(5.0, 20.0) if snr_db is None else snr_db
        hops.append(HopModel(h_bar=h_bar, sigma=sigma, psi=psi, noise_var=1.0, power_budget=10 ** (snr / 10)))
    return NetworkModel(hops=tuple(hops), n_streams=n_streams)


def random_objective(rng: np.random.Generator, index: int, n: int) -> Objective:
    """Cycle through the four objectives with random weights."""
    match index % 4:
        case 0:
            u = unitary_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
            return WeightedMSE(w=u @ np.diag(rng.uniform(0.2, 1.0, n)) @ u.conj().T)
        case 1:
            return Capacity()
        case 2:
            return MaxMSE()
        case _:
            return WeightedSumRate(v=np.sort(rng.uniform(0.5, 2.0, n))[::-1])


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    return unitary_group.rvs(n, random_state=rng) if n > 1 else np.exp(2j * np.pi * rng.uniform()) * np.eye(1)


def _design_cases(level: str, min_hops: int = 1):
    """Yield (network, objective, transceiver) for seeded random instances."""
    rng = np.random.default_rng(VERIFY_SEED)
    cases = ("sigma_scaled", "psi_scaled")
    for i in range(DESIGN_CASES[level]):
        k_hops = min_hops + i % (4 - min_hops)
        n = 2 + i % 3
        network = random_network(rng, k_hops, n, antennas=n + (i % 2), case=cases[i % 2])
        objective = random_objective(rng, i, n)
        yield network, objective, design(network, objective)


def _corrupt(q_list: list[np.ndarray], rng: np.random.Generator, index: int | None = None) -> list[np.ndarray]:
    """Replace every interior rotation, or only the one at index, with a random unitary."""
    corrupted = list(q_list)
    for k in range(1, len(q_list) - 1) if index is None else (index,):
        corrupted[k] = random_unitary(rng, q_list[k].shape[0])
    return corrupted


def _partial_sums(values: np.ndarray) -> np.ndarray:
    return np.cumsum(np.sort(values)[::-1])


def suite_power_closure(level: str, **_) -> tuple[float, int]:
    worst, cases = 0.0, 0
    for network, _, tx in _design_cases(level):
        for hop, power in zip(network.hops, transmit_powers(network, tx.precoders)):
            worst = max(worst, abs(power - hop.power_budget) / hop.power_budget)
            cases += 1
    return worst, cases


def suite_gamma_identity(level: str, **_) -> tuple[float, int]:
    worst, cases = 0.0, 0
    for network, _, tx in _design_cases(level):
        factors = [hop_factors(hop, f) for hop, f in zip(network.hops, tx.internals.f_mats)]
        theta = theta_matrix(factors, list(tx.internals.q_mats))
        eig = np.sort(np.linalg.eigvalsh(theta))[::-1][: network.n_streams]
        worst = max(worst, float(np.max(np.abs(eig - np.sort(tx.internals.gamma)[::-1]))))
        cases += 1
    return worst, cases


def suite_lmmse_dominance(level: str, **_) -> tuple[float, int]:
    rng = np.random.default_rng(VERIFY_SEED + 1)
    worst, cases = 0.0, 0
    for network, _, tx in _design_cases(level):
        g = tx.equalizer
        base = mse_matrix(network, tx.precoders, g)
        scale = np.linalg.norm(g)
        for _ in range(PERTURBATIONS[level]):
            delta = 0.1 * scale * (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
            gap = np.linalg.eigvalsh(mse_matrix(network, tx.precoders, g + delta) - base)[0]
            worst = max(worst, -float(gap))
            cases += 1
    return worst, cases


def suite_majorization(level: str, inject_fault: bool = False) -> tuple[float, int]:
    """Optimal interior rotations give lambda(Theta) = gamma and dominate random ones."""
    rng = np.random.default_rng(VERIFY_SEED + 2)
    worst, cases = 0.0, 0
    for network, _, tx in _design_cases(level, min_hops=2):
        factors = [hop_factors(hop, f) for hop, f in zip(network.hops, tx.internals.f_mats)]
        q_opt = list(tx.internals.q_mats)
        if inject_fault:
            q_opt = _corrupt(q_opt, rng)
        n = network.n_streams
        gamma = np.sort(tx.internals.gamma)[::-1]
        opt_eig = np.sort(np.linalg.eigvalsh(theta_matrix(factors, q_opt)))[::-1][:n]
        worst = max(worst, float(np.max(np.abs(opt_eig - gamma))))
        reference = _partial_sums(gamma)
        for _ in range(REPLACEMENTS[level]):
            eig = np.linalg.eigvalsh(theta_matrix(factors, _corrupt(q_opt, rng)))[::-1][:n]
            worst = max(worst, float(np.max(_partial_sums(eig) - reference)))
            cases += 1
    return worst, cases


def suite_rotation_optimality(level: str, **_) -> tuple[float, int]:
    rng = np.random.default_rng(VERIFY_SEED + 3)
    worst, cases = 0.0, 0
    for network, objective, tx in _design_cases(level):
        f_mats, q_opt = list(tx.internals.f_mats), list(tx.internals.q_mats)
        for _ in range(REPLACEMENTS[level]):
            trials = [[random_unitary(rng, network.n_streams)] + q_opt[1:]]
            if network.k_hops > 1:
                trials.append(_corrupt(q_opt, rng))
                trials.extend(_corrupt(q_opt, rng, index=k) for k in range(1, network.k_hops))
            for q_list in trials:
                altered = recover_precoders(network, f_mats, q_list)
                value = evaluate_objective(objective, mmse_matrix(network, altered.precoders))
                worst = max(worst, tx.objective_value - value)
                cases += 1
    return worst, cases


def suite_gauge_invariance(level: str, **_) -> tuple[float, int]:
    rng = np.random.default_rng(VERIFY_SEED + 4)
    worst, cases = 0.0, 0
    for network, objective, tx in _design_cases(level):
        phi = mmse_matrix(network, tx.precoders)
        lambda_f = tx.internals.lambda_f
        f_mats = [
            assemble_F(hop, eff, lambda_f[k], network.input_dim(k), u_f=random_unitary(rng, network.input_dim(k)))
            for k, (hop, eff) in enumerate(zip(network.hops, tx.internals.effective_hops))
        ]
        q_list = assemble_rotations(network, objective, f_mats)
        altered = recover_precoders(network, f_mats, q_list)
        worst = max(worst, float(np.max(np.abs(mmse_matrix(network, altered.precoders) - phi))))
        cases += 1
    return worst, cases


def suite_convergence(level: str, **_) -> tuple[float, int]:
    """Largest objective increase between sweeps (sweep cap breaches count as 1)."""
    rng = np.random.default_rng(VERIFY_SEED + 5)
    worst, cases = 0.0, 0
    for i in range(CONVERGENCE_CASES[level]):
        k_hops, n = 1 + i % 3, 1 + i % 4
        gains = np.sort(rng.uniform(0.0, 3.0, (k_hops, n)), axis=1)[:, ::-1]
        budgets = 10 ** rng.uniform(-0.5, 2.0, k_hops)
        v = np.sort(rng.uniform(0.5, 2.0, n))[::-1]
        for alloc in (
            waterfill_weighted_mse(gains, v, budgets),
            waterfill_capacity(gains, budgets),
            waterfill_maxmse(gains, budgets),
            waterfill_weighted_sumrate(gains, v, budgets),
        ):
            trace = np.asarray(alloc.objective_trace)
            rise = np.diff(trace) / np.maximum(1.0, np.abs(trace[:-1]))
            worst = max(worst, float(rise.max(initial=0.0)))
            if not alloc.converged:
                worst = max(worst, 1.0)
            cases += 1
    return worst, cases


def suite_zero_error(level: str, **_) -> tuple[float, int]:
    rng = np.random.default_rng(VERIFY_SEED + 6)
    worst, cases = 0.0, 0
    for i in range(DESIGN_CASES[level]):
        n = 2 + i % 3
        base = random_network(rng, 1 + i % 3, n, antennas=n + 1, case="perfect")
        hops = tuple(
            HopModel(h.h_bar, exponential_correlation(h.rx_dim, 0.6), h.psi, h.noise_var, h.power_budget)
            for h in base.hops
        )
        network = NetworkModel(hops=hops, n_streams=n)
        objective = random_objective(rng, i, n)
        robust = design(network, objective)
        naive = nonrobust_design(network, objective)
        worst = max(worst, abs(robust.objective_value - naive.objective_value))
        cases += 1
    return worst, cases


def suite_dft_diagonal(level: str, **_) -> tuple[float, int]:
    rng = np.random.default_rng(VERIFY_SEED + 7)
    worst, cases = 0.0, 0
    for n in (2, 4, 8):
        q = dft_matrix(n)
        for _ in range(100):
            d = rng.standard_normal(n)
            diag = np.real(np.diag(q @ np.diag(d) @ q.conj().T))
            worst = max(worst, float(np.max(np.abs(diag - d.sum() / n))))
            cases += 1
    return worst, cases


def suite_sampler_moments(level: str, **_) -> tuple[float, int]:
    """Relative Frobenius error of the vectorized sample covariance against kron(Sigma, Psi^T)."""
    rng = np.random.default_rng(VERIFY_SEED + 8)
    sigma = exponential_correlation(3, 0.5)
    psi = 0.5 * exponential_correlation(2, 0.7)
    draws = sample_kronecker_gaussian(3, 2, sigma, psi, rng, count=SAMPLER_DRAWS[level])
    vecs = draws.reshape(draws.shape[0], -1)
    empirical = vecs.T @ vecs.conj() / vecs.shape[0]
    expected = np.kron(sigma, psi.T)
    return float(np.linalg.norm(empirical - expected) / np.linalg.norm(expected)), 1


def _grid_cost(objective: str, x: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """Objective over a stack of per-hop SNR arrays x with shape (..., K, N)."""
    gamma = np.prod(x / (1.0 + x), axis=-2)
    if objective == "mse":
        return np.sum(weight * (1.0 - gamma), axis=-1)
    return np.sum(weight * np.log2(1.0 - gamma), axis=-1)


def suite_grid_oracles(level: str, **_) -> tuple[float, int]:
    """Relative excess of each solver over a joint 201 x 201 grid search at K=2, N=2."""
    rng = np.random.default_rng(VERIFY_SEED + 9)
    worst, cases = 0.0, 0
    for _ in range(5):
        gains = np.sort(rng.uniform(0.3, 2.0, (2, 2)), axis=1)[:, ::-1]
        budgets = rng.uniform(1.0, 5.0, 2)
        w = np.sort(rng.uniform(0.5, 1.5, 2))[::-1]
        solvers = [
            ("mse", lambda: waterfill_weighted_mse(gains, w, budgets), w),
            ("mse", lambda: waterfill_maxmse(gains, budgets), np.ones(2)),
            ("rate", lambda: waterfill_capacity(gains, budgets), np.ones(2)),
            ("rate", lambda: waterfill_weighted_sumrate(gains, w, budgets), w),
        ]
        t1 = np.linspace(0.0, budgets[0], 201)[:, None]
        t2 = np.linspace(0.0, budgets[1], 201)[None, :]
        f_sq = np.empty(t1.shape[:1] + t2.shape[1:] + (2, 2))
        f_sq[..., 0, 0], f_sq[..., 0, 1] = t1, budgets[0] - t1
        f_sq[..., 1, 0], f_sq[..., 1, 1] = t2, budgets[1] - t2
        x = f_sq * gains**2
        for kind, solve, weight in solvers:
            oracle = float(_grid_cost(kind, x, weight).min())
            achieved = float(_grid_cost(kind, solve().f_sq * gains**2, weight))
            worst = max(worst, (achieved - oracle) / abs(oracle))
            cases += 1
    return worst, cases


def _error_grid_config(k_hops: int, objective: Objective, level: str) -> SimConfig:
    """Two- or three-hop 4x4 network at 30 dB whose error variance is swept."""
    return SimConfig(
        k_hops=k_hops,
        n_streams=4,
        antennas=(4,),
        alpha=0.6,
        beta=0.0,
        sigma_e_sq=ERROR_GRID[-1],
        snr_db=(30.0,),
        trials=ADVANTAGE_TRIALS[level],
        seed=VERIFY_SEED,
        objective=objective,
        symbols_per_stream=100,
    )


def suite_robust_advantage(level: str, **_) -> tuple[float, int]:
    """Largest p-value over the error grid of a one-sided paired test that robust beats non-robust weighted MSE."""
    config = _error_grid_config(2, WeightedMSE(w=np.diag([0.3, 0.3, 0.26, 0.26])), level)
    worst = 0.0
    for sigma_e_sq in ERROR_GRID:
        records = run_trials(config.at("sigma_e_sq", sigma_e_sq))
        worst = max(worst, paired_pvalue(records))
    return worst, len(ERROR_GRID)


def rate_gap_drops(rows: list[AggregateMetrics]) -> np.ndarray:
    """Drop of the robust-minus-nonrobust sum rate between neighbouring grid points, less its standard error.

    rows alternate robust and non-robust per grid point, as sweep returns them.
    A positive entry is a drop that the trial noise does not explain.
    """
    robust, naive = rows[0::2], rows[1::2]
    gaps = np.array([r.sum_rate - n.sum_rate for r, n in zip(robust, naive)])
    spread = np.array([np.hypot(r.stderr_rate, n.stderr_rate) for r, n in zip(robust, naive)])
    return (gaps[:-1] - gaps[1:]) - (spread[:-1] + spread[1:])


def suite_rate_gap_trend(level: str, **_) -> tuple[float, int]:
    """Three-hop capacity design: the sum-rate gain over non-robust must not shrink as the error grows."""
    rows = sweep(_error_grid_config(3, Capacity(), level), "sigma_e_sq", list(ERROR_GRID))
    return float(rate_gap_drops(rows).max()), len(ERROR_GRID)


# name -> (suite, limit, levels it runs at)
SUITES = {
    "power_closure": (suite_power_closure, 1e-6, LEVELS),
    "gamma_identity": (suite_gamma_identity, 1e-8, LEVELS),
    "lmmse_dominance": (suite_lmmse_dominance, 1e-10, LEVELS),
    "majorization": (suite_majorization, 1e-8, LEVELS),
    "rotation_optimality": (suite_rotation_optimality, 1e-9, LEVELS),
    "gauge_invariance": (suite_gauge_invariance, 1e-8, LEVELS),
    "convergence": (suite_convergence, 1e-10, LEVELS),
    "zero_error": (suite_zero_error, 1e-9, LEVELS),
    "dft_diagonal": (suite_dft_diagonal, 1e-12, LEVELS),
    "sampler_moments": (suite_sampler_moments, None, LEVELS),
    "grid_oracles": (suite_grid_oracles, 0.01, ("full",)),
    "robust_advantage": (suite_robust_advantage, 0.05, ("full",)),
    "rate_gap_trend": (suite_rate_gap_trend, 0.0, ("full",)),
}


def run_suites(level: str = "fast", inject_fault: bool = False) -> list[SuiteResult]:
    """Run every suite registered for the level."""
    if level not in LEVELS:
        raise ConfigError(f"level must be one of {', '.join(LEVELS)}, got '{level}'")
    results = []
    for name, (suite, limit, levels) in SUITES.items():
        if level not in levels:
            continue
        limit = SAMPLER_TOL[level] if limit is None else limit
        start = time.perf_counter()
        worst, cases = suite(level, inject_fault=inject_fault)
        result = SuiteResult(
            name=name,
            passed=bool(worst <= limit),
            worst=worst,
            limit=limit,
            cases=cases,
            seconds=time.perf_counter() - start,
        )
        if not result.passed:
            logger.warning(f"Suite {name} failed: worst {worst:.3e} exceeds {limit:.0e}")
        results.append(result)
    return results
