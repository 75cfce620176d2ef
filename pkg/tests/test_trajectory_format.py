"""
Trajectory line format tests.
"""

import json

import pytest

from dynoplan.core.errors import DemonstrationError, DimensionMismatchError, DynoPlanError, TrajectoryFormatError
from dynoplan.data.models import StateVector, Trajectory, TrajectoryStep
from dynoplan.data.processors import TrajectoryProcessor
from dynoplan.db.artifacts import ArtifactStore, load_demonstrations
from dynoplan.tasks.chain import chain_demonstrations


def _line(**overrides):
    record = {"task_id": "chain", "trajectory_id": "a", "t": 0, "state": 1, "option_id": 1, "done": False}
    record.update(overrides)
    return json.dumps(record)


@pytest.fixture
def processor():
    return TrajectoryProcessor()


class TestParsing:
    def test_discrete_and_continuous_states(self, processor):
        lines = [
            _line(),
            _line(t=1, state=2, done=True),
            _line(task_id="assembly", trajectory_id="b", state=[0.5, 1, -2.0]),
            _line(task_id="assembly", trajectory_id="b", t=1, state=[0.4, 1, -2.0], done=True),
        ]
        demos = processor.parse_lines(lines)
        assert len(demos) == 2
        assert demos.trajectories[0].steps[1].state == StateVector.discrete(2)
        assert demos.trajectories[1].steps[0].state.values == (0.5, 1.0, -2.0)

    def test_blank_lines_skipped(self, processor):
        demos = processor.parse_lines([_line(), "", "   ", _line(t=1, state=2, done=True)])
        assert len(demos.trajectories[0]) == 2

    def test_invalid_json_names_line(self, processor):
        with pytest.raises(TrajectoryFormatError) as excinfo:
            processor.parse_lines([_line(), "{not json"])
        assert excinfo.value.line_number == 2

    def test_missing_field_names_line(self, processor):
        record = json.loads(_line(t=1))
        del record["option_id"]
        with pytest.raises(TrajectoryFormatError) as excinfo:
            processor.parse_lines([_line(), json.dumps(record)])
        assert excinfo.value.line_number == 2
        assert "option_id" in str(excinfo.value)

    def test_non_finite_state_rejected(self, processor):
        with pytest.raises(TrajectoryFormatError) as excinfo:
            processor.parse_lines(['{"task_id": "x", "trajectory_id": "a", "t": 0, '
                                   '"state": [NaN], "option_id": 1, "done": false}'])
        assert excinfo.value.line_number == 1

    def test_boolean_is_not_a_time_index(self, processor):
        with pytest.raises(TrajectoryFormatError):
            processor.parse_lines([_line(t=True)])

    def test_negative_time_index_rejected(self, processor):
        with pytest.raises(TrajectoryFormatError) as excinfo:
            processor.parse_lines([_line(t=-1)])
        assert excinfo.value.line_number == 1

    def test_out_of_order_time_index(self, processor):
        with pytest.raises(TrajectoryFormatError):
            processor.parse_lines([_line(), _line(t=2, state=2)])

    def test_done_only_on_final_step(self, processor):
        with pytest.raises(TrajectoryFormatError):
            processor.parse_lines([_line(done=True), _line(t=1, state=2)])

    def test_empty_input(self, processor):
        with pytest.raises(DemonstrationError):
            processor.parse_lines([])


class TestTrajectoryModel:
    def test_mixed_dimensions_rejected(self):
        steps = [
            TrajectoryStep(0, StateVector.continuous([0.0, 1.0]), 1),
            TrajectoryStep(1, StateVector.continuous([0.0]), 1, done=True),
        ]
        with pytest.raises(DimensionMismatchError):
            Trajectory("test", "a", steps)

    def test_state_vector_contract(self):
        with pytest.raises(DynoPlanError):
            StateVector.continuous([float("inf")])
        with pytest.raises(DynoPlanError):
            StateVector("discrete", (2.5,))
        with pytest.raises(DynoPlanError):
            StateVector.continuous([])

    def test_progress_labels(self):
        labels = chain_demonstrations(1, start_state=16).trajectories[0].progress_labels()
        assert list(labels) == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_saved_demonstrations_reload(tmp_path):
    demos = chain_demonstrations(2, start_state=15)
    store = ArtifactStore(tmp_path)
    store.save_demonstrations("demos.jsonl", demos)
    reloaded = load_demonstrations(tmp_path / "demos.jsonl")
    assert [t.trajectory_id for t in reloaded.trajectories] == ["demo-0", "demo-1"]
    assert reloaded.trajectories[0].steps == demos.trajectories[0].steps
    lines = (tmp_path / "demos.jsonl").read_text().splitlines()
    assert json.loads(lines[0]) == {
        "task_id": "chain", "trajectory_id": "demo-0", "t": 0, "state": 15, "option_id": 1, "done": False,
    }
