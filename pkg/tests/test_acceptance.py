"""
Experimentos de extremo a extremo sobre la cerradura combinatoria.

Tardan de minutos a horas; sólo se ejecutan con ``pytest --runslow``.
"""
from pathlib import Path

import pytest

from src.harness.config import load_config
from src.harness.runner import run

EXPERIMENTS = Path(__file__).resolve().parent.parent / "config" / "experiments"
SEEDS = range(10)


def run_experiment(name, seed, output_dir):
    config = load_config(EXPERIMENTS / name, {"seed": seed, "output_dir": str(output_dir)})
    _, outcome = run(config)
    return outcome.summary


@pytest.mark.slow
def test_exp_oracle_builds_half_cover(tmp_path):
    passed = 0
    for seed in SEEDS:
        summary = run_experiment("acc06_exp_oracle_combolock.yaml", seed, tmp_path)
        if summary["min_reachable_visitation"] >= 0.25 and summary["value"] >= 0.5:
            passed += 1
    assert passed >= 9


@pytest.mark.slow
def test_homer_solves_combination_lock(tmp_path):
    solved = []
    for seed in SEEDS:
        summary = run_experiment("acc07_homer_combolock.yaml", seed, tmp_path)
        if summary["value"] >= 0.5 and summary["episodes"] <= 500_000:
            solved.append(summary)
    assert len(solved) >= 7
    for summary in solved:
        assert summary["partition_steps_matched"] >= summary["partition_steps"] - 1


@pytest.mark.slow
def test_recovered_dynamics_after_successful_run(tmp_path):
    for seed in SEEDS:
        summary = run_experiment("acc08_dynamics_recovery.yaml", seed, tmp_path)
        if summary["value"] >= 0.5:
            assert summary["dynamics_max_tv"] is not None
            assert summary["dynamics_max_tv"] <= 0.1
            return
    pytest.fail("ninguna semilla resolvió la cerradura")
