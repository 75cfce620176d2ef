import logging
import os
import sys
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _resolve_level(level: Optional[str]) -> int:
    name = level or os.getenv("DYNOPLAN_LOG_LEVEL", "INFO")
    return getattr(logging, name.upper(), logging.INFO)


def get_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """Get a configured logger instance."""
    logger = logging.getLogger(name)

    if not logger.handlers:
        # Console handler on stdout; artifacts never receive log lines
        handler = logging.StreamHandler(sys.stdout)
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
        logger.setLevel(_resolve_level(level))

    return logger


def configure_logging(level: Optional[str] = None) -> logging.Logger:
    """Configure the package root logger once; module loggers propagate to it."""
    root = get_logger("dynoplan", level)
    root.setLevel(_resolve_level(level))
    return root
