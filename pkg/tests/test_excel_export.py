# ABOUTME: Unit tests for excel_export.py module.
# ABOUTME: Tests sweep workbook creation and filename generation.

import re
import sys
from io import BytesIO
from pathlib import Path

from openpyxl import load_workbook

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from excel_export import COLUMNS, NUMBER_FORMAT, create_sweep_workbook, generate_filename
from montecarlo import AggregateMetrics


def make_aggregate(axis_value=0.01, design="robust", mse=0.5, failed=0):
    return AggregateMetrics(
        axis_value=axis_value,
        objective="weighted_mse",
        design=design,
        weighted_mse_model=mse,
        weighted_mse_empirical=mse + 0.01,
        sum_rate=12.5,
        max_mse=0.2,
        ber=0.001,
        stderr_wmse=0.01,
        stderr_wmse_empirical=0.02,
        stderr_rate=0.1,
        stderr_maxmse=0.005,
        stderr_ber=0.0001,
        trials_used=200 - failed,
        trials_failed=failed,
    )


class TestCreateSweepWorkbook:
    """Tests for Excel workbook creation."""

    def test_returns_bytesio(self):
        result = create_sweep_workbook([])
        assert isinstance(result, BytesIO)

    def test_empty_sweep(self):
        ws = load_workbook(create_sweep_workbook([])).active
        assert ws.title == "Sweep"
        assert ws.max_row == 1  # Only header row

    def test_header_row_named_after_axis(self):
        ws = load_workbook(create_sweep_workbook([], axis="sigma_e_sq")).active
        headers = [ws.cell(row=1, column=i + 1).value for i in range(len(COLUMNS))]
        assert headers[0] == "sigma_e_sq"
        assert headers[1:] == [col[1] for col in COLUMNS[1:]]

    def test_rows_follow_aggregates(self):
        aggregates = [make_aggregate(design="robust"), make_aggregate(design="nonrobust", mse=0.7)]
        ws = load_workbook(create_sweep_workbook(aggregates)).active

        assert ws.max_row == 3  # Header + 2 data rows
        assert ws.cell(row=2, column=3).value == "robust"
        assert ws.cell(row=3, column=3).value == "nonrobust"
        assert ws.cell(row=3, column=4).value == 0.7
        assert ws.cell(row=2, column=4).number_format == NUMBER_FORMAT

    def test_counts_are_integers(self):
        ws = load_workbook(create_sweep_workbook([make_aggregate(failed=3)])).active
        assert ws.cell(row=2, column=13).value == 197
        assert ws.cell(row=2, column=14).value == 3

    def test_nan_written_as_empty(self):
        agg = make_aggregate(mse=float("nan"))
        ws = load_workbook(create_sweep_workbook([agg])).active
        # openpyxl returns None for empty cells
        assert ws.cell(row=2, column=4).value is None

    def test_freeze_panes_set(self):
        ws = load_workbook(create_sweep_workbook([])).active
        assert ws.freeze_panes == "A2"


class TestGenerateFilename:
    """Tests for filename generation."""

    def test_default_prefix(self):
        assert generate_filename().startswith("sweep_")

    def test_custom_prefix(self):
        assert generate_filename("sum_rate_three_hops").startswith("sum_rate_three_hops_")

    def test_contains_timestamp_pattern(self):
        # Pattern: sweep_YYYYMMDD_HHMMSS.xlsx
        assert re.match(r"sweep_\d{8}_\d{6}\.xlsx", generate_filename())
