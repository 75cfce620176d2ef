# Utils module - logging, seeds, formatters
from .formatters import (
    format_float,
    format_vector,
    format_row,
)
from .logging import configure_logging, get_logger
from .seeds import derive_seed

__all__ = [
    'format_float',
    'format_vector',
    'format_row',
    'configure_logging',
    'get_logger',
    'derive_seed',
]
