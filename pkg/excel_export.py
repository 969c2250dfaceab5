from openpyxl import Workbook
from openpyxl.formatting.rule import ColorScaleRule
from openpyxl.styles import Font, PatternFill, Alignment
from openpyxl.utils import get_column_letter
from typing import Dict, Any, List, Optional
from datetime import datetime

import numpy as np

from core.contour import ContourResult

HEADER_FILL = PatternFill(start_color="1E3A8A", end_color="1E3A8A", fill_type="solid")
SECTION_FILL = PatternFill(start_color="3B82F6", end_color="3B82F6", fill_type="solid")
TABLE_FILL = PatternFill(start_color="E5E7EB", end_color="E5E7EB", fill_type="solid")
WARN_FILL = PatternFill(start_color="F59E0B", end_color="F59E0B", fill_type="solid")


def _title(ws, cell: str, text: str, span: str, fill=HEADER_FILL, size: int = 14):
    ws[cell] = text
    ws[cell].font = Font(size=size, bold=True, color="FFFFFF")
    ws[cell].fill = fill
    ws[cell].alignment = Alignment(horizontal="center", vertical="center")
    ws.merge_cells(span)


def _is_matrix(value: Any) -> bool:
    return isinstance(value, list) and bool(value) and all(isinstance(r, list) for r in value)


def _scalar(value: Any) -> Any:
    if value is None:
        return "-"
    if isinstance(value, (bool, int, float, str)):
        return value
    return str(value)


def _warnings_sheet(wb: Workbook, warnings: List[str]) -> None:
    ws_warn = wb.create_sheet("Warnings")
    _title(ws_warn, "A1", "WARNINGS", "A1:B1", fill=WARN_FILL)
    row = 3
    for i, warning in enumerate(warnings, start=1):
        ws_warn.cell(row=row, column=1, value=i)
        ws_warn.cell(row=row, column=2, value=warning)
        row += 1
    ws_warn.column_dimensions['A'].width = 5
    ws_warn.column_dimensions['B'].width = 100


def create_report_workbook(
    filepath: str,
    title: str,
    outputs: Dict[str, Any],
    warnings: List[str],
):
    """Workbook with scalar results, matrix-valued results and warnings."""

    wb = Workbook()

    # ============================================================================
    # SHEET 1: SUMMARY
    # ============================================================================
    ws_summary = wb.active
    ws_summary.title = "Summary"

    _title(ws_summary, "A1", title.upper(), "A1:C1", size=16)
    ws_summary.row_dimensions[1].height = 30
    ws_summary['A3'] = "Date:"
    ws_summary['B3'] = datetime.now().strftime('%Y-%m-%d')

    _title(ws_summary, "A5", "RESULTS", "A5:C5", fill=SECTION_FILL)
    row = 6
    for col, head in enumerate(["Key", "Value"], start=1):
        cell = ws_summary.cell(row=row, column=col, value=head)
        cell.font = Font(bold=True)
        cell.fill = TABLE_FILL
    row += 1

    matrices: Dict[str, List[List[float]]] = {}
    for key, value in outputs.items():
        if _is_matrix(value):
            matrices[key] = value
            continue
        if isinstance(value, dict):
            for sub, sub_value in value.items():
                if _is_matrix(sub_value):
                    matrices[f"{key}.{sub}"] = sub_value
                    continue
                ws_summary.cell(row=row, column=1, value=f"{key}.{sub}")
                ws_summary.cell(row=row, column=2, value=_scalar(sub_value))
                row += 1
            continue
        ws_summary.cell(row=row, column=1, value=key)
        cell = ws_summary.cell(row=row, column=2, value=_scalar(value))
        if isinstance(value, float):
            cell.number_format = '0.000000'
        row += 1

    ws_summary.column_dimensions['A'].width = 30
    ws_summary.column_dimensions['B'].width = 25
    ws_summary.column_dimensions['C'].width = 25

    # ============================================================================
    # SHEET 2: MATRICES
    # ============================================================================
    if matrices:
        ws_mat = wb.create_sheet("Matrices")
        _title(ws_mat, "A1", "MATRICES", "A1:D1")
        row = 3
        for name, rows in matrices.items():
            ws_mat.cell(row=row, column=1, value=name).font = Font(bold=True)
            row += 1
            for values in rows:
                for col, value in enumerate(values, start=1):
                    cell = ws_mat.cell(row=row, column=col, value=_scalar(value))
                    cell.number_format = '0.000000'
                row += 1
            row += 1

    if warnings:
        _warnings_sheet(wb, warnings)

    wb.save(filepath)


def create_contour_workbook(
    filepath: str,
    result: ContourResult,
    warnings: Optional[List[str]] = None,
):
    """Long-format grid plus a k1 x k2 table with a color scale."""

    wb = Workbook()

    # ============================================================================
    # SHEET 1: GRID (long format, row-major)
    # ============================================================================
    ws_grid = wb.active
    ws_grid.title = "Grid"
    frame = result.to_frame()
    for col, head in enumerate(frame.columns, start=1):
        cell = ws_grid.cell(row=1, column=col, value=head)
        cell.font = Font(bold=True)
        cell.fill = TABLE_FILL
    for r, values in enumerate(frame.itertuples(index=False), start=2):
        for col, value in enumerate(values, start=1):
            ws_grid.cell(row=r, column=col, value=float(value) if np.isfinite(value) else "inf")

    # ============================================================================
    # SHEET 2: CONTOUR TABLE
    # ============================================================================
    ws_map = wb.create_sheet("Contour")
    _title(ws_map, "A1", f"{result.mode.upper()} FRAGILITY RADIUS", "A1:F1")
    ws_map.cell(row=3, column=1, value="k1 \\ k2").font = Font(bold=True)
    for j, k2 in enumerate(result.k2, start=2):
        cell = ws_map.cell(row=3, column=j, value=float(k2))
        cell.font = Font(bold=True)
        cell.fill = TABLE_FILL
    for i, k1 in enumerate(result.k1, start=4):
        cell = ws_map.cell(row=i, column=1, value=float(k1))
        cell.font = Font(bold=True)
        cell.fill = TABLE_FILL
        for j in range(len(result.k2)):
            value = float(result.lam[i - 4, j])
            out = ws_map.cell(row=i, column=j + 2, value=value if np.isfinite(value) else "inf")
            out.number_format = '0.000'

    last = f"{get_column_letter(len(result.k2) + 1)}{len(result.k1) + 3}"
    ws_map.conditional_formatting.add(
        f"B4:{last}",
        ColorScaleRule(start_type="num", start_value=0, start_color="FFFFFF",
                       end_type="max", end_color="10B981"),
    )
    if result.certified_cells:
        k1, k2, lam = result.best()
        row = len(result.k1) + 5
        ws_map.cell(row=row, column=1, value="Best cell").font = Font(bold=True)
        ws_map.cell(row=row, column=2, value=k1)
        ws_map.cell(row=row, column=3, value=k2)
        ws_map.cell(row=row, column=4, value=lam if np.isfinite(lam) else "inf")

    if warnings:
        _warnings_sheet(wb, warnings)

    wb.save(filepath)
