from __future__ import annotations
from typing import Dict, Any, List
from datetime import datetime
import math
import os
from xml.sax.saxutils import escape

from reportlab.lib.pagesizes import A4
from reportlab.lib import colors
from reportlab.lib.units import cm
from reportlab.platypus import SimpleDocTemplate, Paragraph, Spacer, Table, TableStyle
from reportlab.lib.styles import getSampleStyleSheet, ParagraphStyle
from reportlab.lib.enums import TA_CENTER
from reportlab.pdfbase import pdfmetrics

from formatters import fmt_bool, fmt_interval, fmt_matrix, fmt_radius, fmt_real

# Color palette
PRIMARY_COLOR = colors.HexColor("#1E3A8A")      # Navy blue
ACCENT_COLOR = colors.HexColor("#10B981")       # Green
WARNING_COLOR = colors.HexColor("#F59E0B")      # Amber
DANGER_COLOR = colors.HexColor("#EF4444")       # Red
LIGHT_BG = colors.HexColor("#F8FAFC")           # Very light gray
MEDIUM_BG = colors.HexColor("#E2E8F0")          # Light gray
TEXT_DARK = colors.HexColor("#1E293B")          # Almost black
TEXT_MUTED = colors.HexColor("#64748B")         # Gray

STATUS_COLORS = {
    "Certified": ACCENT_COLOR,
    "Immune": ACCENT_COLOR,
    "Unverified": WARNING_COLOR,
    "NoCertificate": DANGER_COLOR,
    "NumericalFailure": DANGER_COLOR,
    "ExtremelyFragile": DANGER_COLOR,
}


def _register_fonts() -> bool:
    """Register DejaVu if present on the system - returns True if successful"""
    try:
        from reportlab.pdfbase.ttfonts import TTFont
        from reportlab.lib.fonts import addMapping

        font_path = "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf"
        bold_path = "/usr/share/fonts/truetype/dejavu/DejaVuSans-Bold.ttf"
        if not (os.path.exists(font_path) and os.path.exists(bold_path)):
            return False
        pdfmetrics.registerFont(TTFont("DejaVu", font_path))
        pdfmetrics.registerFont(TTFont("DejaVu-Bold", bold_path))
        addMapping('DejaVu', 0, 0, 'DejaVu')
        addMapping('DejaVu', 1, 0, 'DejaVu-Bold')
        return True
    except Exception:
        return False


def create_header_box(text: str, styles) -> Table:
    """Create a colored header box"""
    p = Paragraph(f"<font color='white'>{text}</font>", styles["HeaderBox"])
    t = Table([[p]], colWidths=[16*cm])
    t.setStyle(TableStyle([
        ("BACKGROUND", (0,0), (-1,-1), PRIMARY_COLOR),
        ("LEFTPADDING", (0,0), (-1,-1), 12),
        ("RIGHTPADDING", (0,0), (-1,-1), 12),
        ("TOPPADDING", (0,0), (-1,-1), 10),
        ("BOTTOMPADDING", (0,0), (-1,-1), 10),
        ("VALIGN", (0,0), (-1,-1), "MIDDLE"),
    ]))
    return t


def create_kpi_box(title: str, value: str, subtitle: str, styles, bg_color=LIGHT_BG) -> Table:
    """Create a KPI metric box"""
    title_p = Paragraph(f"<font color='#64748B' size='9'>{title}</font>", styles["Normal"])
    value_p = Paragraph(f"<font color='#1E293B' size='14'>{value}</font>", styles["KPIValue"])
    subtitle_p = Paragraph(f"<font color='#94A3B8' size='8'>{subtitle}</font>", styles["Normal"])

    t = Table([[title_p], [value_p], [subtitle_p]], colWidths=[5*cm])
    t.setStyle(TableStyle([
        ("BACKGROUND", (0,0), (-1,-1), bg_color),
        ("LEFTPADDING", (0,0), (-1,-1), 10),
        ("RIGHTPADDING", (0,0), (-1,-1), 10),
        ("TOPPADDING", (0,0), (-1,-1), 8),
        ("BOTTOMPADDING", (0,0), (-1,-1), 8),
        ("VALIGN", (0,0), (-1,-1), "TOP"),
    ]))
    return t


def _matrix_table(rows: List[List[Any]], styles) -> Table:
    cells = [[Paragraph(fmt_real(v if v is not None else math.nan, 4), styles["TableCell"]) for v in r]
             for r in rows]
    width = min(16.0 / max(len(rows[0]), 1), 3.0)
    t = Table(cells, colWidths=[width*cm] * len(rows[0]))
    t.setStyle(TableStyle([
        ("GRID", (0,0), (-1,-1), 0.25, MEDIUM_BG),
        ("BACKGROUND", (0,0), (-1,-1), LIGHT_BG),
        ("ALIGN", (0,0), (-1,-1), "RIGHT"),
    ]))
    return t


def _is_matrix(value: Any) -> bool:
    return isinstance(value, list) and bool(value) and all(isinstance(r, list) for r in value)


def _display(key: str, value: Any) -> str:
    if isinstance(value, bool):
        return fmt_bool(value)
    if key in ("lambda", "beta_star", "zeta_star") or isinstance(value, float):
        return fmt_radius(value) if key == "lambda" else fmt_real(value)
    if value is None:
        return "-"
    return str(value)


def build_pdf(
    path: str,
    title: str,
    outputs: Dict[str, Any],
    warnings: List[str],
):
    """Render a fragility or informativity result.

    Args:
        path: output file
        title: report title on the header box
        outputs: JSON-ready result dict (scalars, nested dicts, matrices)
        warnings: shown in an amber box at the end
    """
    fonts_ok = _register_fonts()
    registered = pdfmetrics.getRegisteredFontNames()
    if fonts_ok and "DejaVu" in registered and "DejaVu-Bold" in registered:
        base_font, bold_font = "DejaVu", "DejaVu-Bold"
    else:
        base_font, bold_font = "Helvetica", "Helvetica-Bold"

    styles = getSampleStyleSheet()
    styles.add(ParagraphStyle(name="CoverTitle", fontName=bold_font, fontSize=22, leading=28,
                              textColor=PRIMARY_COLOR, alignment=TA_CENTER, spaceAfter=12))
    styles.add(ParagraphStyle(name="SectionHeader", fontName=bold_font, fontSize=14, leading=18,
                              textColor=PRIMARY_COLOR, spaceBefore=14, spaceAfter=8))
    styles.add(ParagraphStyle(name="HeaderBox", fontName=bold_font, fontSize=13, leading=16,
                              textColor=colors.white))
    styles.add(ParagraphStyle(name="Body", fontName=base_font, fontSize=10, leading=14,
                              textColor=TEXT_DARK, spaceAfter=6))
    styles.add(ParagraphStyle(name="BodyMuted", fontName=base_font, fontSize=9, leading=13,
                              textColor=TEXT_MUTED))
    styles.add(ParagraphStyle(name="KPIValue", fontName=bold_font, fontSize=14, leading=18,
                              textColor=TEXT_DARK))
    styles.add(ParagraphStyle(name="TableCell", fontName=base_font, fontSize=8, leading=10,
                              textColor=TEXT_DARK))

    doc = SimpleDocTemplate(path, pagesize=A4, leftMargin=2.0*cm, rightMargin=2.0*cm,
                            topMargin=2.0*cm, bottomMargin=2.0*cm)
    story = []

    # ============================================================
    # HEADER
    # ============================================================
    story.append(Paragraph(title, styles["CoverTitle"]))
    story.append(Paragraph(datetime.now().strftime('%Y-%m-%d %H:%M'), styles["BodyMuted"]))
    story.append(Spacer(1, 0.6*cm))

    # ============================================================
    # KPI ROW
    # ============================================================
    status = outputs.get("status") or outputs.get("classification")
    if status is not None or "lambda" in outputs:
        lam = math.inf if outputs.get("immune") else outputs.get("lambda")
        boxes = [
            create_kpi_box("Status", str(status or "-"), outputs.get("kind", ""), styles,
                           bg_color=LIGHT_BG),
            create_kpi_box("Radius", fmt_radius(lam), "certified lower bound", styles),
            create_kpi_box("Informative", fmt_bool(outputs.get("informative")),
                           outputs.get("method", "") or "", styles),
        ]
        row = Table([boxes], colWidths=[5.4*cm] * 3)
        color = STATUS_COLORS.get(str(status), MEDIUM_BG)
        row.setStyle(TableStyle([("LINEBELOW", (0,0), (0,0), 2, color)]))
        story.append(row)
        story.append(Spacer(1, 0.6*cm))

    # ============================================================
    # RESULTS
    # ============================================================
    story.append(create_header_box("Results", styles))
    story.append(Spacer(1, 0.3*cm))
    scalars = []
    matrices = []
    mu = outputs.get("mu")
    if isinstance(mu, dict):
        scalars.append(("mu bracket", fmt_interval(mu.get("rho_lo"), mu.get("rho_hi"))))
    for key, value in outputs.items():
        if _is_matrix(value):
            matrices.append((key, value))
        elif isinstance(value, dict):
            for sub, sub_value in value.items():
                if _is_matrix(sub_value):
                    matrices.append((f"{key}.{sub}", sub_value))
                elif not isinstance(sub_value, (dict, list)):
                    scalars.append((f"{key}.{sub}", _display(sub, sub_value)))
        elif not isinstance(value, list):
            scalars.append((key, _display(key, value)))

    if scalars:
        table = Table([[Paragraph(escape(k), styles["Body"]), Paragraph(escape(v), styles["Body"])] for k, v in scalars],
                      colWidths=[6*cm, 10*cm])
        table.setStyle(TableStyle([
            ("ROWBACKGROUNDS", (0,0), (-1,-1), [colors.white, LIGHT_BG]),
            ("LINEBELOW", (0,0), (-1,-1), 0.25, MEDIUM_BG),
        ]))
        story.append(table)

    for name, rows in matrices:
        story.append(Paragraph(name, styles["SectionHeader"]))
        if len(rows[0]) > 8:
            story.append(Paragraph(escape(fmt_matrix(rows)), styles["BodyMuted"]))
        else:
            story.append(_matrix_table(rows, styles))

    # ============================================================
    # WARNINGS
    # ============================================================
    if warnings:
        story.append(Spacer(1, 0.6*cm))
        box = Table([[Paragraph(f"- {escape(w)}", styles["Body"])] for w in warnings], colWidths=[16*cm])
        box.setStyle(TableStyle([
            ("BACKGROUND", (0,0), (-1,-1), colors.HexColor("#FEF3C7")),
            ("LINEBEFORE", (0,0), (0,-1), 3, WARNING_COLOR),
        ]))
        story.append(Paragraph("Warnings", styles["SectionHeader"]))
        story.append(box)

    doc.build(story)
