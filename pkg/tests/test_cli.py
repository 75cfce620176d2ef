"""
Command-line tests: exit statuses, artifacts and reproducibility.

Every test calls dynoplan_cli.main() in-process with an output directory
under tmp_path.
"""

import csv
import json

import pytest

from dynoplan.data.models import StateVector
from dynoplan.db.artifacts import load_goal
from dynoplan_cli import EXIT_OK, EXIT_PIPELINE, EXIT_USAGE, main


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv("DYNOPLAN_WORKERS", "1")


def _config(tmp_path, payload, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return str(path)


def _summary(path):
    with open(path, newline="") as handle:
        return {row["metric"]: row["value"] for row in csv.DictReader(handle)}


SMALL_ASSEMBLY = {
    "task": "assembly",
    "assembly": {"demo_count": 5, "interference_demo_count": 4},
}


class TestExitStatus:
    def test_run_without_config_is_a_usage_error(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--out", str(out)]) == EXIT_USAGE
        assert not out.exists()

    def test_unknown_command(self):
        assert main(["launch"]) == EXIT_USAGE

    def test_fit_needs_a_model(self):
        assert main(["fit", "--demos", "x.jsonl"]) == EXIT_USAGE

    def test_bad_config_writes_nothing(self, tmp_path):
        out = tmp_path / "out"
        config = _config(tmp_path, {"task": "chain", "planner": {"rollouts": 0}})
        assert main(["run", "--config", config, "--out", str(out)]) == EXIT_USAGE
        assert not out.exists()

    def test_malformed_demo_file(self, tmp_path):
        demos = tmp_path / "demos.jsonl"
        demos.write_text('{"task_id": "chain"}\n', encoding="utf-8")
        assert main(["fit", "goal", "--demos", str(demos), "--out", str(tmp_path / "out")]) == EXIT_PIPELINE

    def test_missing_demo_file(self, tmp_path):
        assert main(["fit", "goal", "--demos", str(tmp_path / "none.jsonl")]) == EXIT_PIPELINE


class TestChainCommands:
    def test_run_writes_artifacts(self, tmp_path):
        out = tmp_path / "out"
        config = _config(tmp_path, {"task": "chain", "planner": {"rollouts": 16}})
        assert main(["run", "--config", config, "--out", str(out), "--episodes", "4"]) == EXIT_OK
        for name in ["config.json", "plan_traces.jsonl", "summary.csv", "chosen_options.csv", "predicted_states.csv"]:
            assert (out / name).exists(), name
        summary = _summary(out / "summary.csv")
        assert summary["task"] == "chain"
        assert summary["episodes"] == "4"
        assert len((out / "plan_traces.jsonl").read_text().splitlines()) == 4

    def test_run_is_reproducible(self, tmp_path):
        config = _config(tmp_path, {"task": "chain", "seed": 5, "planner": {"rollouts": 16}})
        for name in ["a", "b"]:
            assert main(["run", "--config", config, "--out", str(tmp_path / name), "--episodes", "5"]) == EXIT_OK
        for artifact in ["summary.csv", "chosen_options.csv", "plan_traces.jsonl"]:
            assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()

    def test_gen_demos_then_fit_goal(self, tmp_path):
        config = _config(tmp_path, {"task": "chain", "chain": {"demo_count": 3, "start_state": 10}})
        assert main(["gen-demos", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
        lines = (tmp_path / "demos.jsonl").read_text().splitlines()
        assert len(lines) == 3 * 11

        assert main(["fit", "goal", "--demos", str(tmp_path / "demos.jsonl"), "--out", str(tmp_path)]) == EXIT_OK
        model = json.loads((tmp_path / "goal_model.json").read_text())
        assert len(model["center"]) == 1
        assert load_goal(tmp_path / "goal_model.json").evaluate(StateVector.discrete(20))[0] == pytest.approx(1.0)
        with open(tmp_path / "goal_fit_report.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 3
        assert all(float(row["monotonicity"]) >= 0.99 for row in rows)


class TestRegionCommands:
    @pytest.fixture
    def assembly_demos(self, tmp_path):
        config = _config(tmp_path, SMALL_ASSEMBLY)
        assert main(["gen-demos", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
        return tmp_path / "demos.jsonl"

    def test_fit_gmm_and_report(self, tmp_path, assembly_demos):
        assert main(["fit", "gmm", "--demos", str(assembly_demos), "--out", str(tmp_path)]) == EXIT_OK
        summary = json.loads((tmp_path / "gmm_fit_summary.json").read_text())
        assert summary["components"] == 12
        assert set(summary["assignment"]) == {"1", "2", "3", "4"}

        with open(tmp_path / "gmm_fit_report.csv", newline="") as handle:
            history = [float(row["mean_log_likelihood"]) for row in csv.DictReader(handle)]
        assert all(b >= a - 1e-6 for a, b in zip(history, history[1:]))

        args = ["regions", "--model", str(tmp_path / "regions.json"), "--demos", str(assembly_demos)]
        assert main(args + ["--out", str(tmp_path / "r1")]) == EXIT_OK
        assert main(args + ["--out", str(tmp_path / "r2")]) == EXIT_OK
        first = (tmp_path / "r1" / "regions_report.json").read_bytes()
        assert first == (tmp_path / "r2" / "regions_report.json").read_bytes()

        report = json.loads(first)
        assert report["option_ids"] == [1, 2, 3, 4]
        for i, row in enumerate(report["overlap"]):
            assert row[i] == max(row)
        assert (tmp_path / "r1" / "regions_overlap.csv").exists()

    def test_regions_dimension_mismatch(self, tmp_path, assembly_demos):
        assert main(["fit", "gmm", "--demos", str(assembly_demos), "--out", str(tmp_path)]) == EXIT_OK
        chain = _config(tmp_path, {"task": "chain", "chain": {"demo_count": 2}}, name="chain.json")
        assert main(["gen-demos", "--config", chain, "--out", str(tmp_path / "chain")]) == EXIT_OK
        args = ["regions", "--model", str(tmp_path / "regions.json"),
                "--demos", str(tmp_path / "chain" / "demos.jsonl"), "--out", str(tmp_path / "r")]
        assert main(args) == EXIT_PIPELINE


class TestAssemblyCommands:
    @pytest.mark.slow
    def test_run_is_reproducible(self, tmp_path):
        config = _config(tmp_path, {"task": "assembly", "seed": 3, "planner": {"rollouts": 16}})
        for name in ["a", "b"]:
            assert main(["run", "--config", config, "--out", str(tmp_path / name), "--episodes", "2"]) == EXIT_OK
        for artifact in ["summary.csv", "plan_traces.jsonl", "chosen_options.csv", "demos.jsonl",
                         "goal_model.json", "regions.json", "regions_report.json"]:
            assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes(), artifact

        summary = _summary(tmp_path / "a" / "summary.csv")
        assert summary["task"] == "assembly"
        assert "task_completion_rate" in summary
        assert "cautious_share_human_present" in summary
        traces = [json.loads(line) for line in (tmp_path / "a" / "plan_traces.jsonl").read_text().splitlines()]
        assert [trace["episode"] for trace in traces] == [0, 1]
        assert all("task_completed" in trace for trace in traces)
