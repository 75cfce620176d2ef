"""
Data Formatting Utilities

Helpers for rendering numbers and states into result tables.
"""

import math
from typing import Iterable, List, Optional, Sequence

# Fixed precision keeps result tables byte-identical across runs
FLOAT_DIGITS = 10


def format_float(value: Optional[float], digits: int = FLOAT_DIGITS) -> str:
    """
    Format a number for a table cell.

    Args:
        value: Number to format (None renders as an empty cell)
        digits: Significant digits

    Returns:
        Shortest fixed-precision representation, e.g. "0.4736842105"
    """
    if value is None:
        return ""
    if isinstance(value, (bool, int)):
        return str(int(value))
    if math.isnan(value):
        return "nan"
    return f"{value:.{digits}g}"


def format_vector(values: Iterable[float], digits: int = FLOAT_DIGITS) -> str:
    """Space-separated values, used for multi-dimensional states in one CSV cell."""
    return " ".join(format_float(v, digits) for v in values)


def format_row(values: Sequence) -> List[str]:
    return [v if isinstance(v, str) else format_float(v) for v in values]
