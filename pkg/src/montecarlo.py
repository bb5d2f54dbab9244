# ABOUTME: Seeded Monte Carlo evaluation of robust and non-robust relay designs.
# ABOUTME: Scenario generation, QPSK link simulation, aggregation and parameter sweeps.

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import partial

import numpy as np
import pandas as pd
from scipy import linalg as sla
from scipy import stats

from linalg_core import sample_kronecker_gaussian
from objectives import Objective, WeightedMSE
from robust_designer import DesignOptions, design, nonrobust_design
from system_model import HopModel, NetworkModel, log2_det, max_mse, mmse_matrix, mse_matrix, weighted_mse
from validation import COND_TOL, ConditioningError, NumericalError, ValidationError, as_matrix, require_hermitian

# Substream purposes for per-trial generators
PURPOSES = {"estimate": 0, "error": 1, "data": 2, "noise": 3}

ERROR_MODELS = ("exponential", "estimator")
CHANNEL_MODELS = ("rayleigh", "identity")
SWEEP_AXES = ("sigma_e_sq", "snr_db")
DESIGNS = ("robust", "nonrobust")

METRICS = ["weighted_mse_model", "weighted_mse_empirical", "sum_rate", "max_mse", "ber"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    """One simulation point: network shape, error model, SNRs, trial counts and objective."""

    k_hops: int
    n_streams: int
    antennas: tuple[int, ...]
    alpha: float
    beta: float
    sigma_e_sq: float
    snr_db: tuple[float, ...]
    trials: int
    seed: int
    objective: Objective
    symbols_per_stream: int = 1000
    noise_var: float = 1.0
    error_model: str = "exponential"
    channel: str = "rayleigh"
    tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if self.k_hops < 1:
            raise ValidationError(f"hops must be at least 1, got {self.k_hops}")
        if self.n_streams < 1:
            raise ValidationError(f"n_streams must be at least 1, got {self.n_streams}")

        antennas = tuple(int(a) for a in np.atleast_1d(self.antennas))
        if len(antennas) == 1:
            antennas = antennas * (self.k_hops + 1)
        if len(antennas) != self.k_hops + 1:
            raise ValidationError(f"antennas needs 1 or {self.k_hops + 1} entries, got {len(antennas)}")
        if min(antennas) < self.n_streams:
            raise ValidationError(f"every node needs at least {self.n_streams} antennas")

        snr_db = tuple(float(s) for s in np.atleast_1d(self.snr_db))
        if len(snr_db) == 1:
            snr_db = snr_db * self.k_hops
        if len(snr_db) != self.k_hops:
            raise ValidationError(f"snr_db needs 1 or {self.k_hops} entries, got {len(snr_db)}")

        object.__setattr__(self, "antennas", antennas)
        object.__setattr__(self, "snr_db", snr_db)

        for name in ("alpha", "beta", "sigma_e_sq"):
            value = getattr(self, name)
            if not 0 <= value < 1:
                raise ValidationError(f"{name} must lie in [0, 1), got {value}")
        if self.trials < 1:
            raise ValidationError(f"trials must be at least 1, got {self.trials}")
        if self.symbols_per_stream < 1:
            raise ValidationError(f"symbols_per_stream must be at least 1, got {self.symbols_per_stream}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")
        if not self.noise_var > 0:
            raise ValidationError(f"noise_var must be positive, got {self.noise_var}")
        if self.error_model not in ERROR_MODELS:
            raise ValidationError(f"error model must be one of {', '.join(ERROR_MODELS)}")
        if self.channel not in CHANNEL_MODELS:
            raise ValidationError(f"channel must be one of {', '.join(CHANNEL_MODELS)}")
        DesignOptions(tol=self.tol, max_iter=self.max_iter)

    @property
    def options(self) -> DesignOptions:
        return DesignOptions(tol=self.tol, max_iter=self.max_iter)

    @property
    def power_budgets(self) -> tuple[float, ...]:
        return tuple(self.noise_var * 10 ** (s / 10) for s in self.snr_db)

    def at(self, axis: str, value: float) -> "SimConfig":
        """Copy of the config moved to one grid point of a sweep axis."""
        if axis == "sigma_e_sq":
            return replace(self, sigma_e_sq=float(value))
        if axis == "snr_db":
            return replace(self, snr_db=(float(value),) * self.k_hops)
        raise ValidationError(f"axis must be one of {', '.join(SWEEP_AXES)}, got '{axis}'")


@dataclass(frozen=True)
class TrialRecord:
    """Metrics of one design on one trial."""

    trial: int
    design: str
    weighted_mse_model: float
    weighted_mse_empirical: float
    sum_rate: float
    max_mse: float
    ber: float
    failed: bool = False


@dataclass(frozen=True)
class AggregateMetrics:
    """Means and standard errors over the successful trials of one grid point."""

    axis_value: float
    objective: str
    design: str
    weighted_mse_model: float
    weighted_mse_empirical: float
    sum_rate: float
    max_mse: float
    ber: float
    stderr_wmse: float
    stderr_wmse_empirical: float
    stderr_rate: float
    stderr_maxmse: float
    stderr_ber: float
    trials_used: int
    trials_failed: int


def exponential_correlation(dim: int, coef: float) -> np.ndarray:
    """Toeplitz matrix with entries coef^|i-j|."""
    return sla.toeplitz(np.power(float(coef), np.arange(dim))).astype(complex)


def error_covariances_exponential(
    dim: int,
    alpha: float,
    beta: float,
    sigma_e_sq: float,
    rx_dim: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Psi = sigma_e^2 alpha^|i-j| (dim x dim), Sigma = beta^|i-j| (rx_dim x rx_dim)."""
    for name, value in (("alpha", alpha), ("beta", beta), ("sigma_e_sq", sigma_e_sq)):
        if not 0 <= value < 1:
            raise ValidationError(f"{name} must lie in [0, 1), got {value}")
    if dim < 1:
        raise ValidationError(f"dimension must be at least 1, got {dim}")
    rx_dim = dim if rx_dim is None else rx_dim
    return sigma_e_sq * exponential_correlation(dim, alpha), exponential_correlation(rx_dim, beta)


def estimation_error_covariances(r_t, r_r, sigma_e_sq: float) -> tuple[np.ndarray, np.ndarray]:
    """Error covariances left by channel estimation: Psi = R_T, Sigma = s(I + s R_R^-1)^-1."""
    r_t = as_matrix(r_t, "r_t")
    r_r = as_matrix(r_r, "r_r")
    require_hermitian(r_t, "r_t")
    require_hermitian(r_r, "r_r")
    eigenvalues, vectors = np.linalg.eigh(0.5 * (r_r + r_r.conj().T))
    if eigenvalues[0] <= COND_TOL * max(1.0, eigenvalues[-1]):
        raise ConditioningError(
            f"R_R is singular (smallest eigenvalue {eigenvalues[0]:.3e})",
            smallest_eigenvalue=float(eigenvalues[0]),
        )
    shrunk = sigma_e_sq * eigenvalues / (eigenvalues + sigma_e_sq)
    sigma = (vectors * shrunk) @ vectors.conj().T
    return r_t.copy(), 0.5 * (sigma + sigma.conj().T)


def hop_error_covariances(config: SimConfig, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(Psi, Sigma) of hop k (0-based) under the configured error model."""
    tx, rx = config.antennas[k], config.antennas[k + 1]
    if config.error_model == "estimator":
        return estimation_error_covariances(
            exponential_correlation(tx, config.alpha),
            exponential_correlation(rx, config.beta),
            config.sigma_e_sq,
        )
    return error_covariances_exponential(tx, config.alpha, config.beta, config.sigma_e_sq, rx_dim=rx)


def trial_rng(seed: int, trial_index: int, hop: int, purpose: str) -> np.random.Generator:
    """Counter-based generator keyed by (seed, trial, hop, purpose)."""
    seq = np.random.SeedSequence(seed, spawn_key=(trial_index, hop, PURPOSES[purpose]))
    return np.random.Generator(np.random.Philox(seq))


def generate_scenario(config: SimConfig, trial_index: int) -> tuple[NetworkModel, list[np.ndarray]]:
    """Estimated network and the true channels H = H_bar + dH for one trial."""
    hops, true_channels = [], []
    s = config.sigma_e_sq
    for k, budget in enumerate(config.power_budgets):
        tx, rx = config.antennas[k], config.antennas[k + 1]
        psi, sigma = hop_error_covariances(config, k)

        if config.channel == "identity":
            h_bar = np.eye(rx, tx, dtype=complex)
        elif s == 0:
            h_bar = sample_kronecker_gaussian(rx, tx, np.eye(rx), np.eye(tx), trial_rng(config.seed, trial_index, k, "estimate"))
        else:
            h_bar = np.sqrt((1 - s) / s) * sample_kronecker_gaussian(
                rx, tx, sigma, psi, trial_rng(config.seed, trial_index, k, "estimate")
            )

        if s == 0:
            delta = np.zeros((rx, tx), dtype=complex)
        else:
            delta = sample_kronecker_gaussian(rx, tx, sigma, psi, trial_rng(config.seed, trial_index, k, "error"))

        hops.append(HopModel(h_bar=h_bar, sigma=sigma, psi=psi, noise_var=config.noise_var, power_budget=budget))
        true_channels.append(h_bar + delta)

    return NetworkModel(hops=tuple(hops), n_streams=config.n_streams), true_channels


def qpsk_modulate(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped unit-energy QPSK from a (2, ...) bit array."""
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2.0)


def qpsk_demodulate(symbols: np.ndarray) -> np.ndarray:
    """Hard decisions back to a (2, ...) bit array."""
    return np.stack([(symbols.real < 0), (symbols.imag < 0)]).astype(np.int8)


def transmit(config: SimConfig, true_channels: list[np.ndarray], precoders, equalizer, trial_index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Send QPSK through the true chain with fresh noise; returns (bits, estimates, sent symbols)."""
    n, length = config.n_streams, config.symbols_per_stream
    bits = trial_rng(config.seed, trial_index, 0, "data").integers(0, 2, size=(2, n, length), dtype=np.int8)
    sent = qpsk_modulate(bits)

    x = sent
    for k, (h, p) in enumerate(zip(true_channels, precoders)):
        rng = trial_rng(config.seed, trial_index, k, "noise")
        shape = (h.shape[0], length)
        noise = np.sqrt(config.noise_var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        x = h @ (p @ x) + noise
    return bits, equalizer @ x, sent


def run_trial(config: SimConfig, trial_index: int) -> list[TrialRecord]:
    """Robust and non-robust records for one seeded trial."""
    network, true_channels = generate_scenario(config, trial_index)
    objective = config.objective
    w = objective.w if isinstance(objective, WeightedMSE) else np.eye(config.n_streams)

    records = []
    for label, designer in (("robust", design), ("nonrobust", nonrobust_design)):
        try:
            tx = designer(network, objective, config.options)
            if label == "robust":
                phi = mmse_matrix(network, tx.precoders)
            else:
                phi = mse_matrix(network, tx.precoders, tx.equalizer)
            bits, estimates, sent = transmit(config, true_channels, tx.precoders, tx.equalizer, trial_index)
            err = estimates - sent
            empirical = float(np.real(np.trace(w @ (err @ err.conj().T)))) / config.symbols_per_stream
            records.append(TrialRecord(
                trial=trial_index,
                design=label,
                weighted_mse_model=weighted_mse(w, phi),
                weighted_mse_empirical=empirical,
                sum_rate=-log2_det(phi),
                max_mse=max_mse(phi),
                ber=float(np.mean(qpsk_demodulate(estimates) != bits)),
            ))
        except NumericalError as e:
            logger.warning(f"Trial {trial_index} {label} design failed: {e}")
            records.append(TrialRecord(trial_index, label, *([float("nan")] * len(METRICS)), failed=True))
    return records


def run_trials(config: SimConfig, threads: int = 1) -> list[TrialRecord]:
    """All trials of a config, in trial order regardless of thread count."""
    task = partial(run_trial, config)
    if threads <= 1:
        batches = list(map(task, range(config.trials)))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(task, range(config.trials)))
    return [record for batch in batches for record in batch]


def records_frame(records: list[TrialRecord]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in records], columns=list(TrialRecord.__dataclass_fields__))


def aggregate(records: list[TrialRecord], axis_value: float, objective_name: str) -> list[AggregateMetrics]:
    """Per-design means and standard errors, failed trials excluded and counted."""
    frame = records_frame(records)
    results = []
    for label in DESIGNS:
        rows = frame[frame["design"] == label]
        ok = rows[~rows["failed"].astype(bool)]
        used = len(ok)
        means = ok[METRICS].mean()
        if used > 1:
            errors = ok[METRICS].std(ddof=1) / np.sqrt(used)
        else:
            errors = pd.Series(0.0, index=METRICS)
        failed = len(rows) - used
        if failed:
            logger.warning(f"{failed} {label} trials failed at {axis_value}")
        results.append(AggregateMetrics(
            axis_value=float(axis_value),
            objective=objective_name,
            design=label,
            weighted_mse_model=float(means["weighted_mse_model"]),
            weighted_mse_empirical=float(means["weighted_mse_empirical"]),
            sum_rate=float(means["sum_rate"]),
            max_mse=float(means["max_mse"]),
            ber=float(means["ber"]),
            stderr_wmse=float(errors["weighted_mse_model"]),
            stderr_wmse_empirical=float(errors["weighted_mse_empirical"]),
            stderr_rate=float(errors["sum_rate"]),
            stderr_maxmse=float(errors["max_mse"]),
            stderr_ber=float(errors["ber"]),
            trials_used=used,
            trials_failed=failed,
        ))
    return results


def sweep(config: SimConfig, axis: str, values: list[float], threads: int = 1) -> list[AggregateMetrics]:
    """Robust and non-robust aggregates at every grid point of one axis."""
    if axis not in SWEEP_AXES:
        raise ValidationError(f"axis must be one of {', '.join(SWEEP_AXES)}, got '{axis}'")
    if len(values) == 0:
        raise ValidationError("sweep grid is empty")

    results = []
    for value in values:
        point = config.at(axis, value)
        logger.info(f"Running {point.trials} trials of {point.objective.name} at {axis}={value}")
        results.extend(aggregate(run_trials(point, threads), value, point.objective.name))
    return results


def paired_pvalue(records: list[TrialRecord], metric: str = "weighted_mse_model") -> float:
    """One-sided paired t-test p-value that the robust metric is below the non-robust one."""
    frame = records_frame(records)
    frame = frame[~frame["failed"].astype(bool)]
    table = frame.pivot(index="trial", columns="design", values=metric).dropna()
    if len(table) < 2:
        raise ValidationError("paired test needs at least two complete trials")
    return float(stats.ttest_rel(table["robust"], table["nonrobust"], alternative="less").pvalue)
