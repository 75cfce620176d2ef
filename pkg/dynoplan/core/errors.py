"""
Errors and Guards

Exception types shared by every module, plus small require_* guards that
raise them. Commands map ConfigError to exit status 1 and every other
DynoPlanError to exit status 2.
"""

import logging
import math
from typing import Optional

logger = logging.getLogger(__name__)

# Rollouts longer than this are almost certainly a configuration mistake
DEFAULT_MAX_HORIZON = 10_000


class DynoPlanError(ValueError):
    """Base class for contract violations raised by dynoplan."""


class DimensionMismatchError(DynoPlanError):
    pass


class HorizonError(DynoPlanError):
    pass


class InitiationError(DynoPlanError):
    """An option was executed from a state outside its initiation set."""

    def __init__(self, option_id: int, message: str = ""):
        self.option_id = option_id
        super().__init__(message or f"Option {option_id} cannot be initiated in the current state")


class EmptyOptionSetError(DynoPlanError):
    pass


class DemonstrationError(DynoPlanError):
    pass


class UnknownOptionError(DynoPlanError):
    pass


class StateRangeError(DynoPlanError):
    """A state lies outside the task's state space."""


class ExpertFailure(DynoPlanError):
    """Scripted expert did not reach the goal within its step budget."""


class TrajectoryFormatError(DynoPlanError):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class ConfigError(DynoPlanError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        location = []
        if line is not None:
            location.append(f"line {line}")
        if key:
            location.append(f"key {key}")
        prefix = ", ".join(location)
        super().__init__(f"{prefix}: {message}" if prefix else message)


def require_same_dimension(expected: int, actual: int, what: str = "state") -> None:
    """Raise DimensionMismatchError unless both dimensions agree."""
    if expected != actual:
        raise DimensionMismatchError(f"{what} has dimension {actual}, expected {expected}")


def require_horizon(horizon: int, max_horizon: int = DEFAULT_MAX_HORIZON) -> None:
    if horizon < 0:
        raise HorizonError(f"Horizon must be non-negative, got {horizon}")
    if horizon > max_horizon:
        raise HorizonError(f"Horizon {horizon} exceeds the configured maximum {max_horizon}")


def require_positive(value: float, name: str) -> None:
    if not value > 0:
        raise DynoPlanError(f"{name} must be positive, got {value}")


def require_probability(value: float, name: str, allow_zero: bool = True) -> None:
    """
    Check that value is a probability.

    Args:
        value: Number to check
        name: Parameter name used in the error message
        allow_zero: When False the valid range is (0, 1]
    """
    if not isinstance(value, (int, float)) or math.isnan(value):
        raise DynoPlanError(f"{name} must be a number, got {value!r}")
    low_ok = value >= 0 if allow_zero else value > 0
    if not (low_ok and value <= 1):
        interval = "[0, 1]" if allow_zero else "(0, 1]"
        raise DynoPlanError(f"{name} must lie in {interval}, got {value}")
