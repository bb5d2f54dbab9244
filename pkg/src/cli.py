# ABOUTME: Command-line front end for the robust relay transceiver designer.
# ABOUTME: design, sweep and verify commands with stable exit codes.

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

from csv_export import write_factor_dump, write_sweep_csv
from excel_export import create_sweep_workbook, generate_filename
from montecarlo import SWEEP_AXES, generate_scenario, sweep
from robust_designer import design
from run_config import load_run_config, resolve_threads
from validation import ConfigError, NumericalError, ValidationError
from verification import LEVELS, run_suites

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFICATION = 3

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

logger = logging.getLogger(__name__)


def parse_values(text: str) -> list[float]:
    """Comma-separated, strictly ascending grid values."""
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse grid values '{text}'")
    if not values:
        raise ConfigError("grid values are empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"grid values must be strictly ascending, got {text}")
    return values


def _fmt(values) -> str:
    return " ".join(f"{v:.6f}" for v in np.ravel(values))


def _apply_verbosity(name: str, forced: bool) -> None:
    if not forced:
        logging.getLogger().setLevel(name.upper())


def cmd_design(config_path: str, output: str | None = None, forced_verbosity: bool = False) -> int:
    """Design one seeded scenario per configured objective and dump its factors."""
    run_cfg = load_run_config(config_path)
    _apply_verbosity(run_cfg.verbosity, forced_verbosity)

    factors = []
    for sim in run_cfg.sims:
        network, _ = generate_scenario(sim, trial_index=0)
        tx = design(network, sim.objective, sim.options)
        internals = tx.internals
        alloc = internals.allocation
        name = sim.objective.name

        print(f"objective: {name}")
        for k in range(network.k_hops):
            print(f"  hop {k + 1} gains h:   {_fmt(internals.gains[k])}")
            print(f"  hop {k + 1} power f^2: {_fmt(alloc.f_sq[k])}")
        state = "converged" if alloc.converged else "not converged"
        print(f"  objective value: {tx.objective_value:.12g}")
        print(f"  iterations: {alloc.iterations} ({state})")
        if any(eff.surrogate for eff in internals.effective_hops):
            print("  note: bounded surrogate covariance used on at least one hop")

        factors.append((f"{name}.gains", internals.gains))
        factors.append((f"{name}.f_sq", alloc.f_sq))
        factors.extend((f"{name}.P{k + 1}", p) for k, p in enumerate(tx.precoders))
        factors.append((f"{name}.G", tx.equalizer))
        factors.extend((f"{name}.F{k + 1}", f) for k, f in enumerate(internals.f_mats))
        factors.extend((f"{name}.Q{k}", q) for k, q in enumerate(internals.q_mats))

    path = Path(output) if output else run_cfg.output_path
    write_factor_dump(path, factors)
    print(f"factors written to {path}")
    return EXIT_OK


def cmd_sweep(
    config_path: str,
    axis: str,
    values: str,
    threads: int | None = None,
    output: str | None = None,
    xlsx: str | None = None,
    forced_verbosity: bool = False,
) -> int:
    """Run the Monte Carlo sweep for every configured objective and write the CSV."""
    run_cfg = load_run_config(config_path)
    _apply_verbosity(run_cfg.verbosity, forced_verbosity)
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {', '.join(SWEEP_AXES)}, got '{axis}'")
    grid = parse_values(values)
    workers = resolve_threads(run_cfg.threads, threads)

    aggregates = []
    for sim in run_cfg.sims:
        aggregates.extend(sweep(sim, axis, grid, threads=workers))

    path = Path(output) if output else run_cfg.output_path
    write_sweep_csv(aggregates, path)
    print(f"{len(aggregates)} rows written to {path}")

    xlsx_path = Path(xlsx) if xlsx else run_cfg.xlsx_path
    if xlsx_path is not None:
        if xlsx_path.is_dir():
            xlsx_path = xlsx_path / generate_filename(path.stem)
        xlsx_path.write_bytes(create_sweep_workbook(aggregates, axis).getvalue())
        print(f"workbook written to {xlsx_path}")
    return EXIT_OK


def cmd_verify(level: str = "fast", inject_fault: bool = False) -> int:
    """Run the property suites; exit 3 if any fails."""
    results = run_suites(level, inject_fault=inject_fault)
    for result in results:
        print(result.summary())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} suite(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFICATION
    print(f"all {len(results)} suites passed")
    return EXIT_OK


class RelayArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors raise ConfigError."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = RelayArgumentParser(
        prog="relay-designer",
        description="Robust transceiver design for multi-hop amplify-and-forward MIMO relays.",
    )
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    noise.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="design one seeded scenario and dump its factors")
    p_design.add_argument("config")
    p_design.add_argument("--output", help="factor dump path (default: [output] path)")

    p_sweep = sub.add_parser("sweep", help="Monte Carlo sweep over sigma_e_sq or snr_db")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--values", required=True, help="ascending comma-separated grid")
    p_sweep.add_argument("--threads", type=int, help="worker threads (overrides RELAY_OPTIM_THREADS)")
    p_sweep.add_argument("--output", help="CSV path (default: [output] path)")
    p_sweep.add_argument("--xlsx", help="also write a styled workbook here (file or directory)")

    p_verify = sub.add_parser("verify", help="run the numerical property suites")
    p_verify.add_argument("--level", choices=LEVELS, default="fast")
    p_verify.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    forced = args.verbose or args.quiet

    try:
        if args.command == "design":
            return cmd_design(args.config, args.output, forced)
        if args.command == "sweep":
            return cmd_sweep(args.config, args.axis, args.values, args.threads, args.output, args.xlsx, forced)
        return cmd_verify(args.level, args.inject_fault)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
