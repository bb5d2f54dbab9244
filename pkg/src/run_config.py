# ABOUTME: Loads and validates sectioned key = value run configuration files.
# ABOUTME: Produces one simulation config per objective plus output and threading settings.

import configparser
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path

from montecarlo import SimConfig
from objectives import OBJECTIVE_NAMES, make_objective
from validation import ConfigError, ValidationError

THREADS_ENV = "RELAY_OPTIM_THREADS"
VERBOSITY_LEVELS = ("debug", "info", "warning", "error")


def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    return float(text)


def _str(text: str) -> str:
    return text.strip()


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _name_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


# section -> key -> (parser, required)
SCHEMA = {
    "network": {
        "hops": (_int, True),
        "n_streams": (_int, True),
        "antennas": (_int_list, True),
        "snr_db": (_float_list, True),
        "noise_var": (_float, False),
        "channel": (_str, False),
    },
    "errors": {
        "model": (_str, False),
        "alpha": (_float, True),
        "beta": (_float, True),
        "sigma_e_sq": (_float, True),
    },
    "objective": {
        "kind": (_name_list, True),
        "weights": (_float_list, False),
        "rate_weights": (_float_list, False),
    },
    "simulation": {
        "trials": (_int, True),
        "seed": (_int, True),
        "symbols_per_stream": (_int, False),
        "threads": (_int, False),
    },
    "solver": {
        "tol": (_float, False),
        "max_iter": (_int, False),
    },
    "output": {
        "path": (_str, False),
        "xlsx": (_str, False),
        "verbosity": (_str, False),
    },
}

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """A parsed run file: simulation settings per objective and where results go."""

    sims: tuple[SimConfig, ...]
    output_path: Path
    xlsx_path: Path | None = None
    threads: int = 1
    verbosity: str = "info"


def _read_values(parser: configparser.ConfigParser) -> dict[str, dict]:
    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            convert, _ = SCHEMA[section][key]
            try:
                values[section][key] = convert(raw)
            except ValueError:
                raise ConfigError(f"cannot parse {section}.{key} = '{raw}'")

    for section, keys in SCHEMA.items():
        for key, (_, required) in keys.items():
            if required and key not in values.get(section, {}):
                raise ConfigError(f"missing required key '{key}' in [{section}]")
    return values


def parse_run_config(text: str, base_dir: Path | None = None) -> RunConfig:
    """Parse configuration text; relative output paths resolve against base_dir."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed configuration: {e}")

    values = _read_values(parser)
    net, err, obj = values["network"], values["errors"], values["objective"]
    sim = values["simulation"]
    solver = values.get("solver", {})
    out = values.get("output", {})

    n = net["n_streams"]
    kinds = obj["kind"]
    if not kinds:
        raise ConfigError("objective.kind lists no objective")
    for kind in kinds:
        if kind not in OBJECTIVE_NAMES:
            raise ConfigError(f"unknown objective '{kind}', expected one of {', '.join(OBJECTIVE_NAMES)}")

    verbosity = out.get("verbosity", "info").lower()
    if verbosity not in VERBOSITY_LEVELS:
        raise ConfigError(f"verbosity must be one of {', '.join(VERBOSITY_LEVELS)}")

    threads = sim.get("threads", 1)
    if threads < 1:
        raise ConfigError(f"threads must be at least 1, got {threads}")

    base_dir = base_dir or Path.cwd()
    try:
        template = SimConfig(
            k_hops=net["hops"],
            n_streams=n,
            antennas=tuple(net["antennas"]),
            alpha=err["alpha"],
            beta=err["beta"],
            sigma_e_sq=err["sigma_e_sq"],
            snr_db=tuple(net["snr_db"]),
            trials=sim["trials"],
            seed=sim["seed"],
            objective=make_objective(kinds[0], n, obj.get("weights"), obj.get("rate_weights")),
            symbols_per_stream=sim.get("symbols_per_stream", 1000),
            noise_var=net.get("noise_var", 1.0),
            error_model=err.get("model", "exponential"),
            channel=net.get("channel", "rayleigh"),
            tol=solver.get("tol", 1e-8),
            max_iter=solver.get("max_iter", 200),
        )
        sims = tuple(
            replace(template, objective=make_objective(kind, n, obj.get("weights"), obj.get("rate_weights")))
            for kind in kinds
        )
    except ConfigError:
        raise
    except ValidationError as e:
        raise ConfigError(str(e))

    xlsx = out.get("xlsx")
    return RunConfig(
        sims=sims,
        output_path=base_dir / out.get("path", "results.csv"),
        xlsx_path=base_dir / xlsx if xlsx else None,
        threads=threads,
        verbosity=verbosity,
    )


def load_run_config(path: str | Path) -> RunConfig:
    """Read and validate a run configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config '{path}': {e}")
    logger.debug(f"Loaded run config from {path}")
    return parse_run_config(text, base_dir=path.parent)


def resolve_threads(config_threads: int, flag: int | None = None) -> int:
    """Thread count: flag, then RELAY_OPTIM_THREADS, then the config value."""
    if flag is not None:
        if flag < 1:
            raise ConfigError(f"--threads must be at least 1, got {flag}")
        return flag
    env_value = os.getenv(THREADS_ENV)
    if env_value:
        try:
            threads = int(env_value)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got '{env_value}'")
        if threads < 1:
            raise ConfigError(f"{THREADS_ENV} must be at least 1, got {threads}")
        return threads
    return config_threads
