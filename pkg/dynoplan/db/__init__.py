# DB module - artifact persistence
from .artifacts import (
    ArtifactStore,
    load_demonstrations,
    load_goal,
    load_regions,
    read_json,
)

__all__ = [
    'ArtifactStore',
    'load_demonstrations',
    'load_goal',
    'load_regions',
    'read_json',
]
