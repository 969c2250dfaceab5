"""
Formatting utilities for consistent display of radii, matrices and flags
"""
import math
from typing import Optional, Sequence

import numpy as np


def fmt_real(x: Optional[float], decimals: int = 4) -> str:
    """
    Format a real number

    Args:
        x: Number to format
        decimals: Number of decimal places

    Returns:
        Formatted string: "0.3333", "inf" or "-"
    """
    if x is None:
        return "-"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x != 0 and (abs(x) < 10 ** -decimals or abs(x) >= 1e6):
        return f"{x:.{decimals - 1}e}"
    return f"{x:.{decimals}f}"


def fmt_radius(x: Optional[float], decimals: int = 3) -> str:
    """Radius; None means no certificate, inf means immune."""
    if x is None:
        return "no certificate"
    if math.isinf(x):
        return "immune (inf)"
    return fmt_real(x, decimals)


def fmt_interval(lo: Optional[float], hi: Optional[float], decimals: int = 4) -> str:
    return f"[{fmt_real(lo, decimals)}, {fmt_real(hi, decimals)}]"


def fmt_matrix(M: Optional[Sequence], decimals: int = 3) -> str:
    """Matrix in bracket notation: [[-1.000, -1.000]]"""
    if M is None:
        return "-"
    arr = np.atleast_2d(np.asarray(M, dtype=float))
    rows = [", ".join(fmt_real(float(v), decimals) for v in row) for row in arr]
    return "[" + ", ".join(f"[{r}]" for r in rows) + "]"


def fmt_bool(flag: Optional[bool]) -> str:
    if flag is None:
        return "-"
    return "yes" if flag else "no"
