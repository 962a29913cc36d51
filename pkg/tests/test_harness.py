"""
Pruebas del harness: configuración, ejecuciones, determinismo del stream de
métricas, informes y CLI.
"""
import json

import numpy as np
import pandas as pd
import pytest

import main
from src.block_mdp.io import load_mdp
from src.harness.config import RESOLVED_CONFIG, load_config, parse_config, run_directory
from src.harness.metrics import MetricsStream, read_metrics
from src.harness.reports import ERROR_RECORD, load_summary, visitation_trace
from src.harness.runner import load_run, mean_validation_loss, restart_homer, run
from src.utils.db import METRICS_FILE, episodes_by_event
from src.utils.errors import AlgorithmError, ConfigurationError

from conftest import MDPS_DIR


def psdp_only_document(output_dir, name="psdp"):
    return {
        "name": name,
        "algorithm": "psdp-only",
        "environment": {"kind": "random", "params": {"horizon": 2, "max_states": 2, "max_actions": 2}},
        "hyperparameters": {"n_psdp": 400, "policy_class": "tabular", "cb_backend": "exact"},
        "evaluation": {"value_episodes": 200, "visitation_episodes": 200},
        "seed": 3,
        "output_dir": str(output_dir),
    }


@pytest.fixture
def psdp_run(tmp_path):
    return run(parse_config(psdp_only_document(tmp_path)))


class TestConfiguration:
    def test_field_path_of_invalid_value(self):
        with pytest.raises(ConfigurationError) as info:
            parse_config({"hyperparameters": {"N": 0}})
        assert info.value.field_path == "hyperparameters.N"

    def test_unknown_key_is_rejected(self):
        with pytest.raises(ConfigurationError) as info:
            parse_config({"hyperparameter": {}})
        assert info.value.field_path == "hyperparameter"

    def test_file_environment_needs_path(self):
        with pytest.raises(ConfigurationError):
            parse_config({"environment": {"kind": "file"}})

    def test_load_with_overrides(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text("name: demo\nalgorithm: exp_oracle\nseed: 1\n", encoding="utf-8")
        config = load_config(path, {"seed": 7, "output_dir": None})
        assert config.seed == 7
        assert run_directory(config.model_copy(update={"output_dir": "out"})).as_posix() == "out/demo-seed7"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "nope.yaml")


class TestRuns:
    def test_ki_analyze_on_fig1_right(self, tmp_path):
        config = parse_config({"name": "ki", "algorithm": "ki-analyze", "environment": {"kind": "fig1-right"}, "output_dir": str(tmp_path)})
        run_dir, outcome = run(config)
        assert run_dir == tmp_path / "ki-seed0"
        for name in (RESOLVED_CONFIG, METRICS_FILE, "summary.json", "summary.txt", "ki_report.yaml"):
            assert (run_dir / name).exists()
        assert [step["n_kd"] for step in outcome.summary["steps"]] == [1, 1, 1]
        assert load_summary(run_dir)["status"] == "completed"
        events = episodes_by_event(run_dir)
        assert events.loc[0, "event"] == "ki_step"
        assert int(events.loc[0, "records"]) == 3

    def test_canonicalize_writes_canonical_mdp(self, tmp_path):
        config = parse_config(
            {"name": "canon", "algorithm": "canonicalize", "environment": {"kind": "file", "path": str(MDPS_DIR / "fig1_right.yaml")}, "output_dir": str(tmp_path)}
        )
        run_dir, outcome = run(config)
        assert outcome.summary["mapping"]["2:s2a"] == outcome.summary["mapping"]["2:s2b"]
        assert load_mdp(run_dir / "canonical.yaml").n_states(2) == 1

    def test_counterexample_report(self, tmp_path):
        config = parse_config(
            {"name": "cx", "algorithm": "counterexample-report", "environment": {"kind": "fig4a", "params": {"max_depth": 3, "d": 6}}, "output_dir": str(tmp_path)}
        )
        run_dir, outcome = run(config)
        assert [row["abstract_reach"] for row in outcome.summary["fig4b_chain"]] == pytest.approx([0.5, 0.25, 0.125])
        assert (run_dir / "counterexamples.yaml").exists()

    def test_psdp_only_summary(self, psdp_run):
        run_dir, outcome = psdp_run
        summary = outcome.summary
        assert summary["value_exact"]
        assert summary["value"] <= summary["optimal_value"] + 1e-9
        assert (run_dir / "artifacts" / "manifest.json").exists()
        assert read_metrics(run_dir / METRICS_FILE)[-1]["event"] == "evaluation"

    def test_exact_backends_give_identical_metrics(self, tmp_path):
        first, _ = run(parse_config(psdp_only_document(tmp_path / "a")))
        second, _ = run(parse_config(psdp_only_document(tmp_path / "b")))
        assert (first / METRICS_FILE).read_bytes() == (second / METRICS_FILE).read_bytes()

    def test_failure_writes_error_record(self, tmp_path):
        config = parse_config(
            {
                "name": "broke",
                "algorithm": "exp_oracle",
                "environment": {"kind": "combolock", "params": {"H": 3, "K": 2, "emission": "discrete"}},
                "hyperparameters": {"n_psdp": 100, "workers": 1},
                "budget": {"max_episodes": 10},
                "output_dir": str(tmp_path),
            }
        )
        with pytest.raises(AlgorithmError):
            run(config)
        run_dir = run_directory(config)
        record = json.loads((run_dir / ERROR_RECORD).read_text(encoding="utf-8"))
        assert record["type"] == "AlgorithmError"
        assert record["cause"]["type"] == "BudgetExceededError"
        assert record["context"]["h"] == 2
        assert load_summary(run_dir)["status"] == "failed"

    def test_rerun_removes_stale_error_record(self, tmp_path):
        config = parse_config(psdp_only_document(tmp_path))
        stale = run_directory(config) / ERROR_RECORD
        stale.parent.mkdir(parents=True)
        stale.write_text("{}", encoding="utf-8")
        run(config)
        assert not stale.exists()

    def test_restart_only_for_homer(self, tmp_path):
        with pytest.raises(ConfigurationError):
            restart_homer(parse_config(psdp_only_document(tmp_path)))

    def test_restart_doubles_capacity_and_halves_eta(self, tmp_path):
        document = {
            "name": "restarts",
            "algorithm": "homer",
            "environment": {"kind": "combolock", "params": {"H": 2, "K": 2, "emission": "discrete", "observations_per_state": 1}},
            "hyperparameters": {"n_psdp": 300, "n_reg": 300, "gps_episodes": 200, "workers": 1, "reg": {"backend": "exact-erm"}},
            "evaluation": {"value_episodes": 100, "visitation_episodes": 100, "partition_samples": 100},
            "seed": 1,
            "output_dir": str(tmp_path),
        }
        run_dir, frame = restart_homer(parse_config(document), tol=-1.0, max_rounds=2)
        rounds = pd.read_csv(run_dir / "rounds.csv")
        assert rounds["N"].tolist() == [2, 4]
        assert rounds["eta"].tolist() == pytest.approx([0.5, 0.25])
        assert rounds["round"].tolist() == frame["round"].tolist() == [0, 1]
        assert (run_dir / "round_1" / "summary.json").exists()

    def test_mean_validation_loss_without_reg(self, psdp_run):
        _, outcome = psdp_run
        assert mean_validation_loss(outcome.result) is None


class TestReports:
    def test_visitation_trace(self, psdp_run):
        run_dir, _ = psdp_run
        _, mdp, result = load_run(run_dir)
        empty = visitation_trace(mdp, result, 0)
        assert (empty["count"] == 0).all()
        assert np.allclose(empty["weight"], 0.0)
        frame = visitation_trace(mdp, result, 300, seed=1)
        assert (frame.groupby("h")["count"].sum() == 300).all()
        assert np.allclose(frame["weight"], np.log(frame["count"] + 1))

    def test_metrics_stream_in_memory(self):
        stream = MetricsStream()
        stream.emit("cover", 10, h=np.int64(2), sizes=np.array([1, 2]))
        record = stream.emit("cover", 20, h=3)
        assert record["ordinal"] == 1
        assert stream.last("cover")["metrics"] == {"h": 3}
        assert stream.records[0]["metrics"] == {"h": 2, "sizes": [1, 2]}
        assert stream.last("final_policy") is None

    def test_load_run_without_artifacts(self, tmp_path):
        config = parse_config({"name": "ki", "algorithm": "ki-analyze", "environment": {"kind": "fig1-left"}, "output_dir": str(tmp_path)})
        run_dir, _ = run(config)
        with pytest.raises(ConfigurationError):
            load_run(run_dir)


class TestCli:
    def test_theory_sizes(self, capsys):
        assert main.main(["theory-sizes", "--variant", "exp_oracle", "--H", "4"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["variant"] == "exp_oracle"
        assert document["n_reg"] == 0.0

    def test_theory_sizes_rejects_non_positive(self, capsys):
        assert main.main(["theory-sizes", "--N", "0"]) == 1
        assert "N" in capsys.readouterr().err

    def test_combolock_info(self, capsys):
        assert main.main(["combolock-info", "--H", "3", "--K", "2", "--emission", "discrete", "--seed", "7"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["uniform_success_probability"] == pytest.approx(0.125)
        assert len(document["u"]) == 3

    def test_eval_policy_within_band(self, psdp_run, capsys):
        run_dir, _ = psdp_run
        capsys.readouterr()
        assert main.main(["eval-policy", "--run", str(run_dir), "--episodes", "4000", "--seed", "2"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["exact"] is not None
        assert document["within_band"]

    def test_no_command_prints_help(self, capsys):
        assert main.main([]) == 0
        assert "KinoPanda" in capsys.readouterr().out
