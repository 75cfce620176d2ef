"""
Experiment Config Loading

Reads the JSON experiment file into ExperimentConfig and turns every
problem into a ConfigError that names the line and key.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Sequence, Union

from pydantic import ValidationError

from ..core.errors import ConfigError
from ..models.schemas import ExperimentConfig

logger = logging.getLogger(__name__)


def _line_of(text: str, location: Sequence[Union[str, int]]) -> Optional[int]:
    """First line mentioning each key of location in turn, searching forward from the previous one."""
    lines = text.splitlines()
    start = 0
    found = None
    for part in location:
        if not isinstance(part, str):
            continue
        needle = f'"{part}"'
        for number in range(start, len(lines)):
            if needle in lines[number]:
                found = number + 1
                start = number
                break
    return found


def _describe(error: ValidationError, text: str) -> ConfigError:
    first = error.errors()[0]
    location = first["loc"]
    key = ".".join(str(part) for part in location)
    return ConfigError(first["msg"], line=_line_of(text, location), key=key)


def load_config(path: Union[str, Path, None]) -> ExperimentConfig:
    """
    Load an experiment config file; defaults when path is None.

    Raises:
        ConfigError: missing file, invalid JSON, unknown key or bad value
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")

    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON ({e.msg})", line=e.lineno)
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object", line=1)

    try:
        config = ExperimentConfig.parse_obj(raw)
    except ValidationError as e:
        raise _describe(e, text)
    logger.info(f"Loaded {config.task} config from {path}")
    return config


def apply_overrides(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
    episodes: Optional[int] = None,
) -> ExperimentConfig:
    """Command-line flags win over the file."""
    updates = {"seed": seed, "output_dir": output_dir, "episodes": episodes}
    for field_name, value in updates.items():
        if value is None:
            continue
        try:
            setattr(config, field_name, value)
        except ValidationError as e:
            raise ConfigError(e.errors()[0]["msg"], key=field_name)
    return config
