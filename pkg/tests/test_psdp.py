"""
Pruebas de PSDP, GPS, coberturas y tamaños de muestra teóricos.
"""
import numpy as np
import pytest

from src.block_mdp.dynamics import exact_value, mixture_visitation, optimal_value
from src.block_mdp.environment import EnvironmentAccess
from src.block_mdp.io import load_mdp
from src.block_mdp.mdp import LatentBlockMDP, RewardTable
from src.block_mdp.policies import uniform_policy
from src.block_mdp.rewards import ExternalReward
from src.envs.random_mdp import make_random_block_mdp
from src.explorers.abstraction import backward_ki_abstraction
from src.explorers.rewards import make_internal_reward
from src.kinematics.partition import backward_ki_partition
from src.psdp.cover import PolicyCover, certify_cover, degrade_cover, homing_covers
from src.psdp.gps import gps_try
from src.psdp.psdp import PsdpConfig, psdp
from src.psdp.sample_sizes import SizeVariant, theory_sample_sizes
from src.utils.errors import ConfigurationError, CoverError

from conftest import MDPS_DIR, one_symbol_emission


def bound_of(run):
    """Ejecuta PSDP capturando la cota del registro final"""
    records = []
    policy = run(records.append)
    return policy, [r["psdp_bound"] for r in records if r["level"] == 0][0]


@pytest.fixture
def one_step_bandit():
    """H = 1: s1 paga con a1, s2 paga con a0"""
    scale = np.zeros((2, 2, 1))
    scale[0, 1, 0] = scale[1, 0, 0] = 1.0
    return LatentBlockMDP(
        states=[["s1", "s2"]],
        actions=["a0", "a1"],
        start=[0.5, 0.5],
        transitions=[],
        rewards=[RewardTable(scale, np.ones_like(scale))],
        emission=one_symbol_emission([2]),
        name="bandit",
    )


class TestPsdp:
    def test_single_step_is_a_contextual_bandit(self, one_step_bandit):
        policy = psdp(EnvironmentAccess(one_step_bandit), {}, ExternalReward(), 1, PsdpConfig(n=2_000))
        assert len(policy) == 1
        assert exact_value(one_step_bandit, policy, ExternalReward()) == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_two_step_value_close_to_optimum(self, two_step_mdp, seed):
        covers = homing_covers(two_step_mdp)
        config = PsdpConfig(n=2_000, seed=seed)
        policy, bound = bound_of(
            lambda cb: psdp(EnvironmentAccess(two_step_mdp), covers, ExternalReward(), 2, config, on_level=cb)
        )
        optimum, _ = optimal_value(two_step_mdp)
        value = exact_value(two_step_mdp, policy, ExternalReward())
        assert abs(value - optimum) <= 0.05
        assert optimum - value <= bound

    def test_level_records(self, two_step_mdp):
        records = []
        psdp(EnvironmentAccess(two_step_mdp), homing_covers(two_step_mdp), ExternalReward(), 2, PsdpConfig(n=500), on_level=records.append)
        assert [r["level"] for r in records] == [2, 1, 0]
        assert all(r["dataset_size"] == 500 for r in records[:2])
        assert records[0]["csc_band"] > 0
        # la tabla exacta domina al promedio uniforme de acciones
        for record in records[:2]:
            assert record["cb_objective"] >= record["uniform_value"] - 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_each_level_beats_constant_actions(self, seed):
        mdp = make_random_block_mdp(seed, horizon=3)
        covers = homing_covers(mdp)
        policy = psdp(EnvironmentAccess(mdp), covers, ExternalReward(), 3, PsdpConfig(n=50_000, seed=seed))
        future = np.zeros(1)
        for t in range(3, 0, -1):
            q = np.einsum("sau,sau->sa", mdp.transition(t), ExternalReward().expected_latent(mdp, t) + future[None, None, :])
            probs = policy.decider(t).latent_action_probs(mdp, t)
            visitation = mixture_visitation(mdp, covers[t].policies, t)
            learned = float(visitation @ np.sum(probs * q, axis=1))
            assert learned >= float((visitation @ q).max()) - 0.05
            future = np.sum(probs * q, axis=1)

    def test_internal_reward_on_small_lock(self, small_lock):
        abstraction = backward_ki_abstraction(small_lock)
        target = int(backward_ki_partition(small_lock, 3).labels()[0])
        reward = make_internal_reward(abstraction, target, 3)
        covers = homing_covers(small_lock)
        policy = psdp(EnvironmentAccess(small_lock), covers, reward, 2, PsdpConfig(n=2_000, seed=5))
        assert exact_value(small_lock, policy, reward) >= 0.9

    def test_same_seed_same_policy(self, two_step_mdp):
        covers = homing_covers(two_step_mdp)
        runs = [
            psdp(EnvironmentAccess(two_step_mdp), covers, ExternalReward(), 2, PsdpConfig(n=300, seed=9))
            for _ in range(2)
        ]
        for t in (1, 2):
            assert np.array_equal(runs[0].decider(t).table, runs[1].decider(t).table)

    def test_empty_cover_beyond_first_step(self, two_step_mdp):
        covers = {2: PolicyCover(2, [], 1.0)}
        with pytest.raises(CoverError):
            psdp(EnvironmentAccess(two_step_mdp), covers, ExternalReward(), 2, PsdpConfig(n=100))


class TestGps:
    def test_gps_rejects_and_psdp_recovers(self):
        mdp = load_mdp(MDPS_DIR / "gps_split.yaml")
        covers = homing_covers(mdp)
        outcome = gps_try(EnvironmentAccess(mdp), covers, ExternalReward(), 2, PsdpConfig(n=2_000))
        assert not outcome.accepted
        assert outcome.value < 0.9
        assert outcome.to_record()["gps_accepted"] is False
        policy = psdp(EnvironmentAccess(mdp), covers, ExternalReward(), 2, PsdpConfig(n=2_000))
        assert exact_value(mdp, policy, ExternalReward()) == pytest.approx(1.0)

    def test_gps_accepts_when_a_prefix_suffices(self, one_step_bandit):
        outcome = gps_try(EnvironmentAccess(one_step_bandit), {}, ExternalReward(), 1, PsdpConfig(n=2_000))
        assert outcome.accepted
        assert outcome.value >= 0.9
        assert len(outcome.policy) == 1


class TestCoverQuality:
    def test_degraded_cover_halves_alpha_and_doubles_bound(self, two_step_mdp):
        covers = homing_covers(two_step_mdp)
        useless = uniform_policy(two_step_mdp.n_actions, 1)
        degraded = {1: covers[1], 2: degrade_cover(covers[2], useless)}
        assert len(degraded[2]) == 2 * len(covers[2])
        assert degraded[2].alpha == pytest.approx(0.5)
        assert certify_cover(two_step_mdp, degraded[2], degraded[2].alpha).holds
        config = PsdpConfig(n=1_000, capacity=2)
        env = EnvironmentAccess(two_step_mdp)
        _, base = bound_of(lambda cb: psdp(env, covers, ExternalReward(), 2, config, on_level=cb))
        _, worse = bound_of(lambda cb: psdp(env, degraded, ExternalReward(), 2, config, on_level=cb))
        assert worse == pytest.approx(2 * base)

    def test_homing_covers_are_exact(self, small_lock):
        covers = homing_covers(small_lock)
        for h in range(2, small_lock.horizon + 1):
            certificate = certify_cover(small_lock, covers[h], 1.0)
            assert certificate.holds
            assert certificate.worst_ratio == pytest.approx(1.0)


class TestTheorySizes:
    ARGS = dict(N=2, H=5, n_actions=4, eta=0.5, epsilon=0.1, delta=0.1, n_policies=1e6)

    def test_exp_oracle_eval_size_scales_with_horizon_squared(self):
        short = theory_sample_sizes(**self.ARGS, variant=SizeVariant.EXP_ORACLE)
        long = theory_sample_sizes(**{**self.ARGS, "H": 10}, variant=SizeVariant.EXP_ORACLE)
        assert long.n_eval == pytest.approx(4 * short.n_eval)
        assert short.n_reg == 0.0

    def test_sizes_decrease_with_epsilon(self):
        tight = theory_sample_sizes(**self.ARGS)
        loose = theory_sample_sizes(**{**self.ARGS, "epsilon": 0.2})
        assert loose.n_eval < tight.n_eval
        assert tight.n_reg > 0

    @pytest.mark.parametrize("field", ["N", "eta", "delta"])
    def test_non_positive_arguments(self, field):
        with pytest.raises(ConfigurationError) as info:
            theory_sample_sizes(**{**self.ARGS, field: 0})
        assert info.value.field_path == field
