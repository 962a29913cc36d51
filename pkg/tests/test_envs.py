"""
Pruebas de los entornos: cerradura combinatoria, fig1 y contraejemplos.
"""
import numpy as np
import pytest

from src.block_mdp.dynamics import eta_exact, exact_value
from src.block_mdp.emissions import observation_dim
from src.block_mdp.mdp import LatentBlockMDP
from src.block_mdp.policies import latent_policy
from src.block_mdp.rewards import ExternalReward
from src.envs.analyses import (
    autoencoder_loss_compare,
    autoencoder_monte_carlo,
    bayes_prev_action_collapse,
    counterexample_report,
    fig4b_reach,
)
from src.envs.combolock import (
    lock_summary,
    make_combolock,
    make_combolock_spec,
    optimal_policy,
    uniform_success_probability,
)
from src.envs.counterexamples import CounterexampleKind, make_counterexample, make_fig4a, make_noisy_bits
from src.envs.fig1 import SPLIT, make_fig1
from src.kinematics.partition import ki_partition
from src.utils.errors import ConfigurationError, EnumerationBudgetError

from conftest import one_symbol_emission, zero_rewards

REACH_DEPTHS = range(1, 7)


class TestCombinationLock:
    def test_optimal_policy_collects_reward(self, small_lock):
        assert exact_value(small_lock, optimal_policy(small_lock), ExternalReward()) == pytest.approx(1.0)

    def test_wrong_first_action_only_gets_decoy(self, small_lock):
        spec = small_lock.metadata["combolock"]
        K = small_lock.n_actions
        per_step = [[(spec["u"][0] + 1) % K, (spec["v"][0] + 1) % K]]
        per_step += [[spec["u"][h], spec["v"][h], 0] for h in range(1, small_lock.horizon)]
        policy = latent_policy(per_step, K)
        assert exact_value(small_lock, policy, ExternalReward()) == pytest.approx(0.05)

    def test_good_states_are_split_evenly(self, small_lock):
        eta = eta_exact(small_lock)
        for h in range(2, small_lock.horizon + 1):
            assert eta.eta[h - 1][:2] == pytest.approx([0.5, 0.5])
            assert eta.eta[h - 1][2] == pytest.approx(1.0)

    def test_lock_is_reproducible_from_seed(self):
        first, second = make_combolock(5, 3, seed=11), make_combolock(5, 3, seed=11)
        assert first.metadata["combolock"]["u"] == second.metadata["combolock"]["u"]
        assert lock_summary(first) == lock_summary(second)

    def test_gaussian_summary(self, gaussian_lock):
        summary = lock_summary(gaussian_lock)
        assert summary["d"] == observation_dim(4)
        assert summary["orthogonality_error"] == pytest.approx(0.0)
        assert "hadamard_checksum" in summary

    def test_uniform_success_probability(self):
        assert uniform_success_probability(10, 4) == pytest.approx(4.0 ** -10)

    @pytest.mark.parametrize("kwargs", [{"H": 0, "K": 2}, {"H": 3, "K": 1}, {"H": 2, "K": 2, "u": [0, 5]}])
    def test_invalid_lock(self, kwargs):
        with pytest.raises(ConfigurationError):
            make_combolock_spec(seed=0, **kwargs)


class TestFig1:
    def test_split_mass(self):
        right = make_fig1("right")
        assert right.transition(1)[0, 0, :2] == pytest.approx([SPLIT, 1 - SPLIT])
        assert make_fig1("left").n_states(2) == 1

    def test_unknown_variant(self):
        with pytest.raises(ConfigurationError):
            make_fig1("middle")


class TestCounterexamples:
    def test_fig4a_collapse_is_coarser_than_ki(self):
        mdp = make_fig4a()
        assert bayes_prev_action_collapse(mdp, 2).named_blocks() == [["s3", "s4"], ["s5", "s6"]]
        assert bayes_prev_action_collapse(mdp, 3).named_blocks() == [["s7", "s8"], ["s9"]]
        assert ki_partition(mdp, 3).labels()[0] != ki_partition(mdp, 3).labels()[1]

    @staticmethod
    def conflict_mdp():
        """
        Cada estado previo separa un par de siguientes con acciones distintas:
        p_a -> (t1, t2), p_b -> (t0, t3), p_c -> (t2, t3). En orden, t0 y t1 son
        compatibles pero la única partición en dos grupos es {t0, t2}, {t1, t3}.
        """
        T = np.zeros((3, 2, 4))
        for prev, (left, right) in enumerate([(1, 2), (0, 3), (2, 3)]):
            T[prev, 0, left] = 1.0
            T[prev, 1, right] = 1.0
        return LatentBlockMDP(
            states=[["p_a", "p_b", "p_c"], ["t0", "t1", "t2", "t3"]],
            actions=["a0", "a1"],
            start=np.full(3, 1 / 3),
            transitions=[T],
            rewards=zero_rewards([3, 4], 2),
            emission=one_symbol_emission([3, 4]),
            name="prev-action-conflicts",
        )

    def test_collapse_uses_fewest_groups(self):
        partition = bayes_prev_action_collapse(self.conflict_mdp(), 2)
        assert partition.named_blocks() == [["t0", "t2"], ["t1", "t3"]]

    def test_collapse_merges_equal_stochastic_posteriors(self):
        T = np.zeros((1, 2, 3))
        T[0, 0] = [0.2, 0.4, 0.4]
        T[0, 1] = [0.1, 0.2, 0.7]
        mdp = LatentBlockMDP(
            states=[["s"], ["t0", "t1", "t2"]],
            actions=["a0", "a1"],
            start=[1.0],
            transitions=[T],
            rewards=zero_rewards([1, 3], 2),
            emission=one_symbol_emission([1, 3]),
            name="stochastic-posterior",
        )
        assert bayes_prev_action_collapse(mdp, 2).named_blocks() == [["t0", "t1"], ["t2"]]

    def test_collapse_budget(self):
        with pytest.raises(EnumerationBudgetError):
            bayes_prev_action_collapse(self.conflict_mdp(), 2, budget=2)

    @pytest.mark.parametrize("depth", REACH_DEPTHS)
    def test_abstract_reach_halves_per_level(self, depth):
        reach = fig4b_reach(depth)
        assert reach["observation_reach"] == pytest.approx(1.0)
        assert reach["abstract_reach"] == pytest.approx(2.0 ** (-depth), abs=1e-12)

    @pytest.mark.parametrize("p", [0.6, 0.8, 0.9])
    def test_autoencoder_prefers_noise(self, p):
        keep_state, keep_noise = autoencoder_loss_compare(16, p)
        assert keep_noise < keep_state

    def test_autoencoder_tie_at_half(self):
        keep_state, keep_noise = autoencoder_loss_compare(16, 0.5)
        assert keep_noise == keep_state

    def test_autoencoder_monte_carlo_within_band(self):
        expected = autoencoder_loss_compare(8, 0.8)
        sampled = autoencoder_monte_carlo(8, 0.8, 20_000, seed=0)
        assert abs(sampled["keep_state"] - expected[0]) <= sampled["band"]
        assert abs(sampled["keep_noise"] - expected[1]) <= sampled["band"]

    def test_noisy_bits_first_bit_encodes_state(self):
        mdp = make_noisy_bits(4, 0.7)
        table = mdp.emission.table(1)
        assert table[0, :8].sum() == pytest.approx(1.0)
        assert table[1, 8:].sum() == pytest.approx(1.0)
        with pytest.raises(ConfigurationError):
            make_noisy_bits(1, 0.5)
        with pytest.raises(ConfigurationError):
            autoencoder_loss_compare(4, 1.5)

    def test_counterexample_by_name(self):
        chain = make_counterexample(CounterexampleKind("fig4b_chain", {"depth": 2}))
        assert chain.horizon == 3
        assert make_counterexample("fig4a").n_states(3) == 3

    def test_report_document(self):
        report = counterexample_report(depths=range(1, 3), noisy_d=6)
        assert report["fig4a"]["path_policy"] == {"P(s7)": 1.0, "P(s8)": 0.0}
        assert [row["depth"] for row in report["fig4b_chain"]] == [1, 2]
        assert len(report["noisy_bits"]) == 4
