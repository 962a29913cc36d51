"""
Pruebas de los exploradores: recompensas internas, datos contrastivos,
resultados persistidos, evaluación de particiones y dinámica abstracta.
"""
import numpy as np
import pytest

from src.block_mdp.dynamics import exact_value, optimal_value, value_of
from src.block_mdp.environment import EnvironmentAccess
from src.block_mdp.rewards import ExternalReward
from src.envs.combolock import make_combolock
from src.envs.random_mdp import make_random_block_mdp
from src.explorers.abstraction import backward_ki_abstraction, oracle_abstraction
from src.explorers.contrastive import (
    build_contrastive_dataset,
    latent_population,
    marginal_chi_square,
    observation_population,
    rho_lower_bound_gap,
)
from src.explorers.dto import HyperparametersDTO, ImposterMode
from src.explorers.dynamics import recover_dynamics
from src.explorers.evaluation import dynamics_tv, evaluate_backward_partitions, match_labels, partition_accuracy
from src.explorers.exp_oracle import COVER_ALPHA, exp_oracle
from src.explorers.homer import homer
from src.explorers.result import AbstractDynamics, ExplorationResult
from src.explorers.rewards import InternalReward, make_internal_reward
from src.kinematics.partition import backward_ki_partition, ki_partition
from src.psdp.cover import homing_covers
from src.utils.errors import ConfigurationError
from src.utils.seeding import derive_rng

RHO_INSTANCES = 50


class TestInternalRewards:
    def test_first_step_has_no_internal_reward(self, small_lock):
        abstraction = backward_ki_abstraction(small_lock)
        with pytest.raises(ConfigurationError):
            InternalReward(abstraction.decoder(1), 0, 1)
        with pytest.raises(ConfigurationError):
            make_internal_reward(abstraction, abstraction.capacity(2), 2)

    def test_reward_fires_only_on_arrival(self, small_lock):
        abstraction = backward_ki_abstraction(small_lock)
        reward = make_internal_reward(abstraction, 0, 2)
        assert reward.last_transition == 1
        batch = EnvironmentAccess(small_lock).start(200, derive_rng(0))
        first = batch.observation
        actions = np.zeros(200, dtype=np.int64)
        batch.step(actions)
        arrived = reward.realized(1, first, actions, batch.observation, np.zeros(200))
        expected = (abstraction.decode(batch.observation) == 0).astype(float)
        assert np.array_equal(arrived, expected)
        assert not reward.realized(2, batch.observation, actions, None, np.zeros(200)).any()

    def test_expected_latent_matches_membership(self, small_lock):
        abstraction = backward_ki_abstraction(small_lock)
        reward = make_internal_reward(abstraction, 0, 3)
        table = reward.expected_latent(small_lock, 2)
        hit = (backward_ki_partition(small_lock, 3).labels() == 0).astype(float)
        assert table.shape == (3, small_lock.n_actions, 3)
        assert np.array_equal(table, np.broadcast_to(hit, table.shape))
        assert not reward.expected_latent(small_lock, 1).any()


class TestContrastiveData:
    def test_population_masses(self, small_lock):
        real, imposter = latent_population(small_lock, [], 2)
        assert real.sum() == pytest.approx(0.5)
        assert imposter.sum() == pytest.approx(0.5)

    @pytest.mark.parametrize("label", [0, 1])
    def test_literal_dataset_follows_population(self, small_lock, label):
        env = EnvironmentAccess(small_lock)
        dataset, real = build_contrastive_dataset(env, [], 2, 20_000, mode=ImposterMode.LITERAL, seed=3)
        assert len(real) == 20_000
        population = observation_population(small_lock, [], 2)[1 - label]
        result = marginal_chi_square(dataset, population, label)
        assert result["p_value"] > 1e-4

    def test_resample_dataset_is_balanced(self, small_lock):
        env = EnvironmentAccess(small_lock)
        dataset, real = build_contrastive_dataset(env, [], 2, 1_000, seed=0)
        assert len(dataset) == 2 * len(real)
        assert dataset.labels.sum() == len(real)
        assert dataset.step == 2

    def test_recycle_adds_positives(self, small_lock):
        env = EnvironmentAccess(small_lock)
        dataset, _ = build_contrastive_dataset(env, [], 2, 1_000, mode=ImposterMode.LITERAL, recycle=True, seed=0)
        assert len(dataset) == 2_000
        assert dataset.labels.sum() > 1_000

    def test_imposter_marginal_lower_bound_on_random_instances(self):
        for seed in range(RHO_INSTANCES):
            mdp = make_random_block_mdp(seed)
            covers = homing_covers(mdp)
            for h in range(2, mdp.horizon + 1):
                policies = covers[h - 1].policies
                gap = rho_lower_bound_gap(mdp, policies, h, alpha=1.0, N=max(len(policies), 1))
                assert gap >= -1e-12, f"semilla {seed}, paso {h}"


class TestExplorationResult:
    def test_save_and_load(self, tmp_path, two_step_mdp):
        _, policy = optimal_value(two_step_mdp)
        result = ExplorationResult(
            "exp_oracle",
            homing_covers(two_step_mdp),
            policy,
            backward=backward_ki_abstraction(two_step_mdp),
            iterations=[{"h": 2, "cover_size": 2}],
            episodes=123,
        )
        loaded = ExplorationResult.load(result.save(tmp_path / "result"))
        assert loaded.episodes == 123
        assert loaded.iterations == result.iterations
        assert {h: len(c) for h, c in loaded.covers.items()} == {h: len(c) for h, c in result.covers.items()}
        assert exact_value(two_step_mdp, loaded.policy, ExternalReward()) == pytest.approx(0.8)
        batch = EnvironmentAccess(two_step_mdp).start(50, derive_rng(1)).observation
        assert np.array_equal(loaded.abstraction.decode(batch), result.abstraction.decode(batch))


class TestExpOracle:
    def test_small_lock_is_solved(self, small_lock):
        hp = HyperparametersDTO(n_psdp=3_000, workers=2)
        env = EnvironmentAccess(small_lock)
        result = exp_oracle(env, backward_ki_abstraction(small_lock), hp, seed=1)
        assert result.covers[3].alpha == COVER_ALPHA
        assert result.episodes == env.episodes_consumed
        assert exact_value(small_lock, result.policy, ExternalReward()) >= 0.9

    def test_worker_count_does_not_change_policy(self, small_lock):
        policies = []
        for workers in (1, 3):
            hp = HyperparametersDTO(n_psdp=500, workers=workers)
            policies.append(exp_oracle(EnvironmentAccess(small_lock), backward_ki_abstraction(small_lock), hp, seed=4).policy)
        for t in range(1, small_lock.horizon + 1):
            assert np.array_equal(policies[0].decider(t).table, policies[1].decider(t).table)


class TestHomer:
    def test_short_lock_is_solved(self):
        mdp = make_combolock(4, 2, seed=0)
        hp = HyperparametersDTO(n_psdp=3_000, n_reg=3_000, gps_episodes=500, workers=2)
        result = homer(EnvironmentAccess(mdp), hp, seed=0)
        assert value_of(mdp, result.policy, monte_carlo_episodes=2_000, seed=0).value >= 0.5
        steps = [it for it in result.iterations if it["h"] != "final"]
        assert [it["h"] for it in steps] == [2, 3, 4]
        assert any(it["gps_used"] > 0 for it in steps)
        partitions = evaluate_backward_partitions(mdp, result.backward, result.covers, n=1_000)
        assert partitions["matched"].all()


class TestEvaluation:
    def test_labels_are_matched_one_to_one(self):
        learned = np.array([1, 1, 0, 0, 2])
        truth = np.array([0, 0, 1, 1, 1])
        assert match_labels(learned, truth, 4, 2).tolist() == [1, 0, 1, -1]
        assert partition_accuracy(learned, truth, 4, 2) == pytest.approx(0.8)

    def test_oracle_abstraction_matches_backward_partition(self, small_lock):
        frame = evaluate_backward_partitions(small_lock, backward_ki_abstraction(small_lock), homing_covers(small_lock), n=500)
        assert list(frame["h"]) == [2, 3]
        assert frame["matched"].all()

    def test_recovered_dynamics_close_to_canonical(self, tmp_path, small_lock):
        covers = homing_covers(small_lock)
        abstraction = oracle_abstraction(small_lock, {h: ki_partition(small_lock, h) for h in range(1, small_lock.horizon + 1)})
        dynamics = recover_dynamics(EnvironmentAccess(small_lock), covers, abstraction, 5_000, seed=2)
        assert sorted(dynamics.counts) == [1, 2]
        assert dynamics.row_sum_error() <= 1e-12
        frame = dynamics_tv(small_lock, dynamics, abstraction, covers, n=500, seed=2)
        assert len(frame) > 0
        assert frame["tv"].max() <= 0.1
        loaded = AbstractDynamics.load(dynamics.save(tmp_path / "dynamics.npz"))
        assert np.array_equal(loaded.counts[2], dynamics.counts[2])

    def test_sparse_rows_are_skipped(self, small_lock):
        covers = homing_covers(small_lock)
        abstraction = backward_ki_abstraction(small_lock)
        dynamics = recover_dynamics(EnvironmentAccess(small_lock), covers, abstraction, 20, seed=0)
        frame = dynamics_tv(small_lock, dynamics, abstraction, covers, n=200, min_count=50)
        assert frame.empty
