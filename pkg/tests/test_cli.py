# tests/test_cli.py

import json
import os

import pandas as pd
import pytest

from src.cli.config import ExperimentConfig, load_experiment_config
from src.cli.main import build_parser, main
from src.common.exceptions import ParseError, ValidationError
from src.oracle.etf import Objective

SMALL_WORKLOAD = {
    "entries": [{"app": "SC-TX", "frames": 3}, {"app": "RangeDet", "frames": 3}],
    "injection_rate": 1.0,
    "arrival_model": "exponential",
    "seed": 0,
}


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("ILSCHED_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("ILSCHED_WORKERS", raising=False)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Small workload with a dataset and a trained model, shared by the end-to-end tests."""
    root = tmp_path_factory.mktemp("ilsched")
    workload = root / "workload.json"
    workload.write_text(json.dumps(SMALL_WORKLOAD))
    common = ["--workload", str(workload), "--injection-rates", "1", "--seeds", "0", "--output-dir", str(root), "--no-progress"]
    assert main(["gen-dataset", *common]) == 0
    assert main(["train", *common, "--dataset", str(root / "dataset_performance.csv"), "--lenient", "--min-leaf", "1"]) == 0
    return {"root": root, "common": common, "model": str(root / "model_performance.json")}


class TestExperimentConfig:
    def test_defaults(self):
        cfg = load_experiment_config()
        assert cfg.platform == "G1"
        assert cfg.injection_rates == [1, 2, 3, 4, 6]
        assert cfg.workload_spec().total_frames == 500

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"PLATFORM": "G3", "MIN_LEAF": 2}))
        cfg = load_experiment_config(str(path), {"min_leaf": 5, "platform": None})
        assert cfg.platform == "G3"
        assert cfg.min_leaf == 5

    def test_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv("ILSCHED_OUTPUT_DIR", str(tmp_path))
        monkeypatch.setenv("ILSCHED_WORKERS", "3")
        cfg = load_experiment_config()
        assert cfg.output_dir == str(tmp_path)
        assert cfg.workers == 3
        assert load_experiment_config(overrides={"workers": 1}).workers == 1

    def test_file_overrides_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv("ILSCHED_OUTPUT_DIR", str(tmp_path / "from_env"))
        monkeypatch.setenv("ILSCHED_WORKERS", "3")
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"OUTPUT_DIR": str(tmp_path / "from_file")}))
        cfg = load_experiment_config(str(path))
        assert cfg.output_dir == str(tmp_path / "from_file")
        assert cfg.workers == 3
        assert load_experiment_config(str(path), {"output_dir": "flag"}).output_dir == "flag"

    def test_bad_worker_count_in_environment(self, monkeypatch):
        monkeypatch.setenv("ILSCHED_WORKERS", "many")
        with pytest.raises(ValidationError):
            load_experiment_config()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"PLATFROM": "G2"}))
        with pytest.raises(ValidationError) as exc:
            load_experiment_config(str(path))
        assert exc.value.violations == ["PLATFROM"]

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{")
        with pytest.raises(ParseError):
            load_experiment_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_experiment_config(str(tmp_path / "absent.json"))

    def test_validation_collects_violations(self):
        cfg = ExperimentConfig(objective="speed", injection_rates=[], holdout=1.5)
        with pytest.raises(ValidationError) as exc:
            cfg.validate()
        assert len(exc.value.violations) == 3


class TestParser:
    def test_subcommands(self):
        parser = build_parser()
        for command in ("gen-dataset", "simulate", "compare", "sweep", "bench-latency", "gen-profiles"):
            extra = ["--a", "x", "--b", "y"] if command == "compare" else []
            assert parser.parse_args([command, *extra]).command == command

    def test_unknown_objective(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["simulate", "--objective", "speed"])

    def test_unset_flags_stay_none(self):
        args = build_parser().parse_args(["simulate"])
        assert args.platform is None and args.seeds is None
        assert args.progress is True


class TestEndToEnd:
    def test_dataset_rows(self, workspace):
        df = pd.read_csv(workspace["root"] / "dataset_performance.csv", skiprows=1)
        assert len(df) == 3 * 8 + 3 * 7

    def test_dataset_is_reproducible(self, workspace, tmp_path):
        out = tmp_path / "again.csv"
        assert main(["gen-dataset", *workspace["common"], "--out", str(out)]) == 0
        assert out.read_bytes() == (workspace["root"] / "dataset_performance.csv").read_bytes()

    def test_train_outputs(self, workspace):
        root = workspace["root"]
        assert os.path.exists(workspace["model"])
        assert os.path.exists(root / "model_performance_flat.json")
        accuracy = pd.read_csv(root / "model_performance_accuracy.csv")
        assert {"cluster", "composite", "flat"} <= set(accuracy["policy"])

    def test_simulate_and_compare(self, workspace):
        root, common = workspace["root"], workspace["common"]
        assert main(["simulate", *common, "--label", "oracle"]) == 0
        assert main(["simulate", *common, "--label", "policy", "--scheduler", "policy", "--policy-file", workspace["model"]]) == 0
        assert os.path.exists(root / "oracle" / "rate_1_seed_0_frames.csv")

        assert main(["compare", *common, "--a", str(root / "oracle"), "--b", str(root / "oracle"), "--out", str(root / "self.csv")]) == 0
        summary = pd.read_csv(root / "self_summary.csv")
        assert (summary["slowdown"] == 1.0).all()

        assert main(["compare", *common, "--a", str(root / "policy"), "--b", str(root / "oracle")]) == 0
        detail = pd.read_csv(root / "compare.csv")
        assert set(detail["app"]) == {"SC-TX", "RangeDet", "ALL"}

    def test_exact_scheduler(self, workspace):
        root = workspace["root"]
        assert main(["simulate", *workspace["common"], "--scheduler", "exact", "--apps", "RangeDet", "SC-TX", "--exact-time-limit", "10"]) == 0
        table = pd.read_csv(root / "exact_G1.csv")
        assert list(table["app"]) == ["RangeDet", "SC-TX"]
        assert (table["makespan_us"] <= table["etf_makespan_us"] + 1e-9).all()

    def test_dagger(self, workspace):
        root = workspace["root"]
        argv = ["dagger", *workspace["common"], "--dataset", str(root / "dataset_performance.csv"), "--dagger-iters", "2", "--min-leaf", "1"]
        assert main(argv) == 0
        stats = pd.read_csv(root / "model_performance_dagger_stats.csv")
        assert 1 <= len(stats) <= 2

    def test_bench_latency(self, workspace):
        root = workspace["root"]
        argv = ["bench-latency", *workspace["common"], "--policy-file", workspace["model"], "--iterations", "3", "--ready-sizes", "1", "4"]
        assert main(argv) == 0
        table = pd.read_csv(root / "bench_latency.csv")
        assert list(table["ready_size"]) == [1, 4]
        with open(root / "bench_latency.json") as f:
            assert json.load(f)["model_kb"] > 0

    def test_sweep(self, workspace):
        root = workspace["root"]
        argv = ["sweep", *workspace["common"], "--policy-file", workspace["model"], "--skip-saturation", "--noise-levels", "0", "0.05"]
        assert main(argv) == 0
        runs = pd.read_csv(root / "sweep" / "sweep_runs.csv")
        assert len(runs) == 2
        assert list(runs["job_id"]) == [0, 1]

    def test_gen_profiles(self, tmp_path):
        assert main(["gen-profiles", "--output-dir", str(tmp_path)]) == 0
        assert sorted(os.listdir(tmp_path / "profiles" / "platforms")) == [f"G{i}.json" for i in range(1, 6)]
        assert len(os.listdir(tmp_path / "profiles" / "apps")) == 7

    def test_policy_scheduler_without_model(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--scheduler", "policy", "--output-dir", str(tmp_path)])
        assert exc.value.code == 2

    def test_missing_dataset(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--dataset", str(tmp_path / "absent.csv"), "--output-dir", str(tmp_path)])
        assert exc.value.code == 2


class TestDeterminism:
    def test_train_files_are_byte_identical(self, workspace, tmp_path):
        argv = ["train", *workspace["common"], "--dataset", str(workspace["root"] / "dataset_performance.csv"), "--lenient", "--min-leaf", "1"]
        assert main([*argv, "--output-dir", str(tmp_path)]) == 0
        for name in ("model_performance.json", "model_performance_flat.json", "model_performance_accuracy.csv"):
            assert (tmp_path / name).read_bytes() == (workspace["root"] / name).read_bytes()

    def test_simulation_reports_repeat(self, workspace, tmp_path):
        argv = ["simulate", *workspace["common"], "--scheduler", "policy", "--policy-file", workspace["model"], "--label", "run"]
        assert main([*argv, "--output-dir", str(tmp_path / "a")]) == 0
        assert main([*argv, "--output-dir", str(tmp_path / "b")]) == 0
        a, b = tmp_path / "a" / "run", tmp_path / "b" / "run"
        assert (a / "rate_1_seed_0_frames.csv").read_bytes() == (b / "rate_1_seed_0_frames.csv").read_bytes()
        summaries = []
        for directory in (a, b):
            with open(directory / "rate_1_seed_0.json") as f:
                doc = json.load(f)
            doc.pop("wall_clock")
            summaries.append(doc)
        assert summaries[0] == summaries[1]


class TestReproduceScript:
    SCRIPT = os.path.join(os.path.dirname(os.path.dirname(__file__)), "scripts", "reproduce.sh")

    def test_covers_every_objective(self):
        with open(self.SCRIPT) as f:
            loop = next(line for line in f if line.startswith("for OBJ in"))
        assert loop.replace(";", " ").split()[3:-1] == [o.value for o in Objective]

    def test_noise_levels(self):
        with open(self.SCRIPT) as f:
            text = f.read()
        assert "--noise-levels 0.01 0.05 0.10 0.15" in text
