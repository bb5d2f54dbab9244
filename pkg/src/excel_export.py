# ABOUTME: Excel export of Monte Carlo sweep results.
# ABOUTME: Creates styled workbooks with one row per grid point and design.

import math
from datetime import datetime
from io import BytesIO

from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter

from montecarlo import AggregateMetrics

# Column configuration
COLUMNS = [
    ("axis_value", "Axis", 12),
    ("objective", "Objective", 20),
    ("design", "Design", 12),
    ("weighted_mse_model", "Weighted MSE", 16),
    ("weighted_mse_empirical", "Empirical MSE", 16),
    ("sum_rate", "Sum Rate (bit)", 16),
    ("max_mse", "Max MSE", 14),
    ("ber", "BER", 14),
    ("stderr_wmse", "SE Weighted MSE", 16),
    ("stderr_rate", "SE Sum Rate", 14),
    ("stderr_maxmse", "SE Max MSE", 14),
    ("stderr_ber", "SE BER", 12),
    ("trials_used", "Trials", 8),
    ("trials_failed", "Failed", 8),
]

NUMBER_FORMAT = "0.000000"

# Styles
HEADER_FILL = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
HEADER_FONT = Font(bold=True, color="FFFFFF")
THIN_BORDER = Border(
    left=Side(style="thin"),
    right=Side(style="thin"),
    top=Side(style="thin"),
    bottom=Side(style="thin"),
)


def create_sweep_workbook(aggregates: list[AggregateMetrics], axis: str = "axis") -> BytesIO:
    """Create an Excel workbook from sweep aggregates and return as BytesIO."""
    wb = Workbook()
    ws = wb.active
    ws.title = "Sweep"

    # Header row, first column named after the swept axis
    for col_idx, (_, header, width) in enumerate(COLUMNS, start=1):
        cell = ws.cell(row=1, column=col_idx, value=axis if col_idx == 1 else header)
        cell.fill = HEADER_FILL
        cell.font = HEADER_FONT
        cell.border = THIN_BORDER
        cell.alignment = Alignment(horizontal="center", vertical="center")
        ws.column_dimensions[get_column_letter(col_idx)].width = width

    for row_idx, agg in enumerate(aggregates, start=2):
        for col_idx, (key, _, _) in enumerate(COLUMNS, start=1):
            value = getattr(agg, key)
            if isinstance(value, float) and math.isnan(value):
                value = None  # all trials failed
            cell = ws.cell(row=row_idx, column=col_idx, value=value)
            cell.border = THIN_BORDER
            if isinstance(value, float):
                cell.number_format = NUMBER_FORMAT

    ws.freeze_panes = "A2"

    output = BytesIO()
    wb.save(output)
    output.seek(0)
    return output


def generate_filename(prefix: str = "sweep") -> str:
    """Generate timestamped filename for a sweep workbook."""
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return f"{prefix}_{timestamp}.xlsx"
