import json

import pytest

from sarsim.cli import main
from sarsim.engine import config_to_json
from sarsim.environment import load_fields

from conftest import make_config
from sarsim.engine import TargetSpec
from sarsim.planners import PlannerSpec


def small_config_dict():
    cfg = make_config(
        planner=PlannerSpec(name="spiral"),
        targets=[TargetSpec(center=(3050.0, 3050.0), sigma_m=300.0, particles=200)],
        endurance_s=1200.0,
        seed=4,
    )
    return config_to_json(cfg)


class TestGenFields:
    def test_writes_loadable_container(self, tmp_path, capsys):
        out = tmp_path / "f.bin"
        rc = main(["gen-fields", "--seed", "3", "--out", str(out),
                   "--extent-km", "20", "--duration-h", "2"])
        assert rc == 0
        fp = load_fields(out)
        assert fp.current.nx >= 2
        assert "wrote" in capsys.readouterr().out

    def test_bad_params_exit_code_one(self, tmp_path):
        rc = main(["gen-fields", "--seed", "3", "--out", str(tmp_path / "f.bin"),
                   "--current-max", "-5"])
        assert rc == 1


class TestSimulate:
    def test_runs_and_writes_outputs(self, tmp_path, capsys):
        cfg_path = tmp_path / "mission.json"
        cfg_path.write_text(json.dumps(small_config_dict()))
        out_dir = tmp_path / "out"
        plot_dir = tmp_path / "plots"
        rc = main(["simulate", "--config", str(cfg_path), "--out", str(out_dir),
                   "--plot", str(plot_dir)])
        assert rc == 0
        assert (out_dir / "summary.json").exists()
        assert (out_dir / "runlog.jsonl").exists()
        assert (plot_dir / "run.svg").exists()
        summary = json.loads((out_dir / "summary.json").read_text())
        assert "termination" in summary

    def test_invalid_config_exit_code_one(self, tmp_path):
        cfg = small_config_dict()
        cfg["targets"] = []
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps(cfg))
        rc = main(["simulate", "--config", str(cfg_path)])
        assert rc == 1

    def test_missing_file_exit_code_two(self, tmp_path):
        rc = main(["simulate", "--config", str(tmp_path / "nope.json")])
        assert rc == 2

    def test_usage_error_exit_code_one(self, capsys):
        assert main(["simulate"]) == 1
        assert main(["no-such-command"]) == 1


class TestExperimentAndCompare:
    def test_experiment_writes_metrics(self, tmp_path, capsys):
        out = tmp_path / "exp"
        rc = main(["experiment", "--planner", "spiral", "--distance-km", "2",
                   "--runs", "2", "--seed", "9", "--endurance-h", "0.3",
                   "--workers", "1", "--out", str(out)])
        assert rc == 0
        assert (out / "metrics.csv").exists()
        assert (out / "metrics.txt").exists()
        assert "spiral" in capsys.readouterr().out

    def test_compare_emits_tables_and_svg(self, tmp_path, capsys):
        out = tmp_path / "cmp"
        rc = main(["compare", "--distances", "2", "--runs", "1", "--seed", "9",
                   "--workers", "1", "--bnb-horizon", "4", "--bnb-beam", "8",
                   "--out", str(out)])
        assert rc == 0
        assert (out / "metrics.csv").exists()
        assert (out / "success_2km.svg").exists()
        text = capsys.readouterr().out
        assert "Boustrophedon" in text
