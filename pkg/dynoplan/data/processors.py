import json
import logging
from collections import OrderedDict
from typing import Dict, Iterable, List, Tuple

from pydantic import ValidationError

from ..core.errors import DemonstrationError, DynoPlanError, TrajectoryFormatError
from ..models.schemas import TrajectoryRecord
from .models import DemonstrationSet, StateVector, Trajectory, TrajectoryStep

logger = logging.getLogger(__name__)

TRAJECTORY_FIELDS = ("task_id", "trajectory_id", "t", "state", "option_id", "done")


class TrajectoryProcessor:
    """Converts between trajectory line records and Trajectory objects."""

    @staticmethod
    def parse_record(line: str, line_number: int) -> TrajectoryRecord:
        """Parse one line into a validated record."""
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise TrajectoryFormatError(line_number, f"invalid JSON ({e.msg})")
        if not isinstance(raw, dict):
            raise TrajectoryFormatError(line_number, "expected an object")
        try:
            return TrajectoryRecord.parse_obj(raw)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            raise TrajectoryFormatError(line_number, problems)

    @staticmethod
    def record_to_state(record: TrajectoryRecord, line_number: int) -> StateVector:
        try:
            if isinstance(record.state, int):
                return StateVector.discrete(record.state)
            return StateVector.continuous(record.state)
        except DynoPlanError as e:
            raise TrajectoryFormatError(line_number, str(e))

    @staticmethod
    def step_to_record(task_id: str, trajectory_id: str, step: TrajectoryStep) -> Dict:
        return {
            "task_id": task_id,
            "trajectory_id": trajectory_id,
            "t": step.t,
            "state": step.state.to_json_value(),
            "option_id": step.option_id,
            "done": step.done,
        }

    def parse_lines(self, lines: Iterable[str]) -> DemonstrationSet:
        """
        Parse trajectory lines into a DemonstrationSet.

        Records are grouped by (task_id, trajectory_id) in order of first
        appearance. Blank lines are skipped.

        Raises:
            TrajectoryFormatError: naming the first offending line
            DemonstrationError: when no trajectory is found
        """
        grouped: "OrderedDict[Tuple[str, str], List[Tuple[int, TrajectoryRecord]]]" = OrderedDict()
        for line_number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            record = self.parse_record(line, line_number)
            grouped.setdefault((record.task_id, record.trajectory_id), []).append((line_number, record))

        if not grouped:
            raise DemonstrationError("Demonstration file contains no trajectories")

        trajectories = []
        for (task_id, trajectory_id), entries in grouped.items():
            steps = [
                TrajectoryStep(
                    t=record.t,
                    state=self.record_to_state(record, line_number),
                    option_id=record.option_id,
                    done=record.done,
                )
                for line_number, record in entries
            ]
            try:
                trajectories.append(Trajectory(task_id, trajectory_id, steps))
            except DynoPlanError as e:
                raise TrajectoryFormatError(entries[0][0], str(e))

        logger.info(f"Parsed {len(trajectories)} trajectories "
                    f"({sum(len(t) for t in trajectories)} steps)")
        return DemonstrationSet(trajectories)

    def to_lines(self, demos: DemonstrationSet) -> List[str]:
        lines = []
        for trajectory in demos.trajectories:
            for step in trajectory.steps:
                record = self.step_to_record(trajectory.task_id, trajectory.trajectory_id, step)
                lines.append(json.dumps(record, separators=(",", ":")))
        return lines
