"""
Pruebas del modelo latente: validación, DP exacta frente a Monte Carlo,
acceso al entorno y persistencia.
"""
import itertools

import numpy as np
import pytest

from src.block_mdp.dynamics import eta_exact, exact_value, exact_visitation, optimal_value, value_of
from src.block_mdp.emissions import DiscreteEmission, observation_dim
from src.block_mdp.environment import EnvironmentAccess
from src.block_mdp.io import load_mdp, read_trajectories, save_mdp, write_trajectories
from src.block_mdp.mdp import LatentBlockMDP, RewardTable
from src.block_mdp.observations import g_star, strip_latent
from src.block_mdp.policies import LinearArgmaxDecider, NonstationaryPolicy, latent_policy, uniform_policy
from src.block_mdp.rewards import ExternalReward
from src.block_mdp.sampling import monte_carlo_visitation, sample_trajectories, sample_trajectory
from src.envs.analyses import FIG4A_PATH_POLICY
from src.envs.counterexamples import make_fig4a
from src.utils.errors import BudgetExceededError, ConfigurationError, MalformedMDPError, UnsupportedOperationError
from src.utils.seeding import derive_rng

from conftest import MDPS_DIR, one_symbol_emission, zero_rewards


def deterministic_latent_policies(mdp, length=None):
    """Todas las políticas latentes deterministas de la longitud dada (H - 1 por defecto)"""
    length = mdp.horizon - 1 if length is None else length
    per_step = [list(itertools.product(range(mdp.n_actions), repeat=mdp.n_states(h))) for h in range(1, length + 1)]
    for choice in itertools.product(*per_step):
        yield latent_policy([list(c) for c in choice], mdp.n_actions)


class TestValidation:
    def test_rows_must_sum_to_one(self):
        T = np.full((1, 1, 2), 0.4)
        with pytest.raises(MalformedMDPError):
            LatentBlockMDP([["s"], ["t", "u"]], ["a"], [1.0], [T], zero_rewards([1, 2], 1), one_symbol_emission([1, 2]))

    def test_emission_supports_must_be_disjoint(self):
        emission = DiscreteEmission([np.array([[0.5, 0.5], [0.0, 1.0]])], [["o1", "o2"]])
        with pytest.raises(MalformedMDPError):
            LatentBlockMDP([["s1", "s2"]], ["a"], [0.5, 0.5], [], zero_rewards([2], 1), emission)

    def test_trajectory_reward_is_bounded_by_one(self):
        rewards = zero_rewards([1, 1], 1)
        rewards = [RewardTable(np.full((1, 1, 1), 0.6), np.ones((1, 1, 1))) for _ in rewards]
        with pytest.raises(MalformedMDPError):
            LatentBlockMDP([["s"], ["t"]], ["a"], [1.0], [np.ones((1, 1, 1))], rewards, one_symbol_emission([1, 1]))


class TestExactDynamics:
    def test_monte_carlo_visitation_within_hoeffding_band(self, small_lock):
        policy = uniform_policy(small_lock.n_actions, small_lock.horizon)
        n, delta = 100_000, 1e-3
        band = 4 * np.sqrt(np.log(2 / delta) / (2 * n))
        exact = exact_visitation(small_lock, policy)
        sampled = monte_carlo_visitation(small_lock, policy, n, seed=3)
        for h in range(small_lock.horizon):
            assert np.all(np.abs(exact[h] - sampled[h]) <= band)

    def test_eta_dominates_every_deterministic_policy(self, two_step_mdp):
        eta = eta_exact(two_step_mdp)
        for policy in deterministic_latent_policies(two_step_mdp):
            visitation = exact_visitation(two_step_mdp, policy)
            for h in range(two_step_mdp.horizon):
                assert np.all(eta.eta[h] >= visitation[h] - 1e-12)

    def test_homing_policy_attains_eta(self, two_step_mdp):
        eta = eta_exact(two_step_mdp)
        homing = eta.homing[(2, 0)]
        assert exact_visitation(two_step_mdp, homing)[1][0] == pytest.approx(eta.eta[1][0])
        assert eta.eta[1][0] == pytest.approx(0.8)

    def test_fig4a_path_policy_reaches_s7_never_s8(self):
        mdp = make_fig4a()
        policy = latent_policy(FIG4A_PATH_POLICY, mdp.n_actions)
        final = exact_visitation(mdp, policy)[2]
        assert final[0] == pytest.approx(1.0)
        assert final[1] == 0.0
        for log in sample_trajectories(mdp, policy, 20, seed=0):
            assert log.states[2] == "s7"

    def test_optimal_value_matches_enumeration(self, two_step_mdp):
        optimum, policy = optimal_value(two_step_mdp)
        best = max(
            exact_value(two_step_mdp, p, ExternalReward())
            for p in deterministic_latent_policies(two_step_mdp, two_step_mdp.horizon)
        )
        assert optimum == pytest.approx(0.8)
        assert best == pytest.approx(optimum)
        assert exact_value(two_step_mdp, policy, ExternalReward()) == pytest.approx(optimum)

    def test_value_of_falls_back_to_monte_carlo_for_vector_policies(self, gaussian_lock):
        dim = gaussian_lock.emission.dim
        deciders = [LinearArgmaxDecider(np.zeros((gaussian_lock.n_actions, dim))) for _ in range(gaussian_lock.horizon)]
        policy = NonstationaryPolicy(deciders)
        with pytest.raises(UnsupportedOperationError):
            value_of(gaussian_lock, policy)
        estimate = value_of(gaussian_lock, policy, monte_carlo_episodes=2000, seed=1)
        assert not estimate.exact
        assert estimate.band > 0


class TestEnvironmentAccess:
    def test_counts_episodes_and_enforces_budget(self, two_step_mdp):
        env = EnvironmentAccess(two_step_mdp, max_episodes=100)
        env.start(60, derive_rng(0, "a"))
        assert env.episodes_consumed == 60
        with pytest.raises(BudgetExceededError):
            env.start(60, derive_rng(0, "b"))

    def test_episode_ends_after_horizon(self, two_step_mdp):
        batch = EnvironmentAccess(two_step_mdp).start(10, derive_rng(0))
        batch.step(np.zeros(10, dtype=np.int64))
        rewards = batch.step(np.ones(10, dtype=np.int64))
        assert batch.finished
        assert set(np.unique(rewards)) <= {0.0, 1.0}

    def test_stripped_batches_hide_latent_states(self, two_step_mdp):
        batch = EnvironmentAccess(two_step_mdp).start(5, derive_rng(0))
        with pytest.raises(UnsupportedOperationError):
            g_star(strip_latent(batch.observation))

    def test_gaussian_observation_dimension(self, gaussian_lock):
        batch = EnvironmentAccess(gaussian_lock).start(4, derive_rng(0))
        assert batch.observation.payload.shape == (4, observation_dim(gaussian_lock.horizon))
        assert observation_dim(10) == 16


class TestPersistence:
    def test_tabular_document_is_loaded_and_saved(self, tmp_path):
        mdp = load_mdp(MDPS_DIR / "gps_split.yaml")
        assert mdp.horizon == 2
        assert mdp.state_names(2) == ["p", "q", "r"]
        again = load_mdp(save_mdp(mdp, tmp_path / "copy.yaml"))
        assert np.array_equal(again.transition(1), mdp.transition(1))
        assert np.array_equal(again.reward_table(2).expected(), mdp.reward_table(2).expected())

    def test_unknown_state_in_document(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text(
            "horizon: 1\nactions: [a]\nstates: [[s]]\nstart: {nope: 1.0}\n"
            "emissions: [{step: 1, state: s, observations: {o: 1.0}}]\n",
            encoding="utf-8",
        )
        with pytest.raises(MalformedMDPError):
            load_mdp(path)

    def test_trajectory_logs(self, tmp_path, small_lock):
        policy = uniform_policy(small_lock.n_actions, small_lock.horizon)
        logs = sample_trajectories(small_lock, policy, 5, seed=2)
        assert write_trajectories(logs, tmp_path / "t.jsonl") == 5
        loaded = read_trajectories(tmp_path / "t.jsonl")
        assert [log.states for log in loaded] == [log.states for log in logs]
        assert loaded[0].seed == {"master": 2, "episode": 0}

    def test_short_policy_cannot_sample_full_trajectory(self, small_lock):
        with pytest.raises(ConfigurationError):
            sample_trajectory(small_lock, uniform_policy(small_lock.n_actions, 1), derive_rng(0))
