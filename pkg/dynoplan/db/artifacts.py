"""
Artifact Store

File-backed persistence for run outputs: JSON documents, JSON-lines
records, CSV tables and trajectory files. Output is deterministic (sorted
keys, fixed float formatting, no timestamps) so repeated runs produce
byte-identical files.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

from ..core.errors import DynoPlanError
from ..data.models import DemonstrationSet
from ..data.processors import TrajectoryProcessor
from ..learning.goal import GoalHeuristic
from ..learning.regions import GaussianMixtureRegions
from ..utils.formatters import format_row

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def dump_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.exists():
        raise DynoPlanError(f"File not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DynoPlanError(f"{path}: line {e.lineno}: invalid JSON ({e.msg})")


def load_demonstrations(path: PathLike) -> DemonstrationSet:
    """Parse a trajectory line file."""
    path = Path(path)
    if not path.exists():
        raise DynoPlanError(f"Demonstration file not found: {path}")
    with path.open(encoding="utf-8") as handle:
        return TrajectoryProcessor().parse_lines(handle)


def load_goal(path: PathLike) -> GoalHeuristic:
    return GoalHeuristic.from_dict(read_json(path))


def load_regions(path: PathLike) -> GaussianMixtureRegions:
    return GaussianMixtureRegions.from_dict(read_json(path))


class ArtifactStore:
    """
    Writes artifacts under one output directory.

    Usage:
        store = ArtifactStore("results/chain")
        store.write_json("config.json", config.dict())
        store.write_csv("summary.csv", ["metric", "value"], rows)
    """

    def __init__(self, root: PathLike):
        self.root = Path(root)
        self.written: List[str] = []

    def path(self, name: str) -> Path:
        return self.root / name

    def _write(self, name: str, text: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        target = self.path(name)
        target.write_text(text, encoding="utf-8", newline="\n")
        self.written.append(name)
        logger.debug(f"Wrote {target}")
        return target

    def write_text(self, name: str, text: str) -> Path:
        return self._write(name, text)

    def write_json(self, name: str, payload: Any) -> Path:
        return self._write(name, dump_json(payload))

    def write_jsonl(self, name: str, records: Iterable[Dict]) -> Path:
        lines = [json.dumps(record, sort_keys=True, separators=(",", ":")) for record in records]
        return self._write(name, "".join(line + "\n" for line in lines))

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(format_row(row))
        return self._write(name, buffer.getvalue())

    def save_demonstrations(self, name: str, demos: DemonstrationSet) -> Path:
        lines = TrajectoryProcessor().to_lines(demos)
        return self._write(name, "".join(line + "\n" for line in lines))

    def save_goal(self, name: str, heuristic: GoalHeuristic) -> Path:
        return self.write_json(name, heuristic.to_dict())

    def save_regions(self, name: str, regions: GaussianMixtureRegions) -> Path:
        return self.write_json(name, regions.to_dict())
