# ABOUTME: Plain-text outputs: sweep CSV and the matrix factor dump of a design.
# ABOUTME: Fixed column order, 12 significant digits, locale-independent formatting.

from pathlib import Path

import numpy as np
import pandas as pd

from montecarlo import AggregateMetrics
from validation import ValidationError

# Sweep CSV columns, in order
CSV_COLUMNS = [
    "axis",
    "objective",
    "design",
    "weighted_mse",
    "sum_rate",
    "max_mse",
    "ber",
    "stderr_wmse",
    "stderr_rate",
    "stderr_maxmse",
    "stderr_ber",
    "trials",
]

# Aggregate field feeding each CSV column
FIELD_FOR_COLUMN = {
    "axis": "axis_value",
    "objective": "objective",
    "design": "design",
    "weighted_mse": "weighted_mse_model",
    "sum_rate": "sum_rate",
    "max_mse": "max_mse",
    "ber": "ber",
    "stderr_wmse": "stderr_wmse",
    "stderr_rate": "stderr_rate",
    "stderr_maxmse": "stderr_maxmse",
    "stderr_ber": "stderr_ber",
    "trials": "trials_used",
}

FLOAT_FORMAT = "%.12g"


def sweep_frame(aggregates: list[AggregateMetrics]) -> pd.DataFrame:
    """One row per aggregate, columns as in the sweep CSV."""
    rows = [{col: getattr(agg, field) for col, field in FIELD_FOR_COLUMN.items()} for agg in aggregates]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_sweep_csv(aggregates: list[AggregateMetrics], path: str | Path) -> None:
    sweep_frame(aggregates).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def format_factor_block(name: str, matrix: np.ndarray) -> str:
    """'# name rows cols' followed by one line of re,im pairs per row."""
    if " " in name or not name:
        raise ValidationError(f"factor name must be a single word, got '{name}'")
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    rows, cols = matrix.shape
    lines = [f"# {name} {rows} {cols}"]
    for row in matrix:
        lines.append(",".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"


def write_factor_dump(path: str | Path, factors: list[tuple[str, np.ndarray]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name, matrix in factors:
            fh.write(format_factor_block(name, matrix))


def read_factor_dump(path: str | Path) -> dict[str, np.ndarray]:
    """Parse a factor dump back into named complex matrices."""
    factors: dict[str, np.ndarray] = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    i = 0
    while i < len(lines):
        header = lines[i].split()
        if len(header) != 4 or header[0] != "#":
            raise ValidationError(f"line {i + 1}: expected '# name rows cols'")
        name, rows, cols = header[1], int(header[2]), int(header[3])
        values = np.array(
            [[float(v) for v in line.split(",")] for line in lines[i + 1 : i + 1 + rows]]
        )
        if values.shape != (rows, 2 * cols):
            raise ValidationError(f"block '{name}' does not hold {rows}x{cols} complex entries")
        factors[name] = values[:, 0::2] + 1j * values[:, 1::2]
        i += 1 + rows
    return factors
