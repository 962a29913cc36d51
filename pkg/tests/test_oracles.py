"""
Pruebas de los oráculos: bandido contextual, regresión con cuello de botella,
gradiente manual y cotas.
"""
import numpy as np
import pytest
from scipy.special import expit

from src.block_mdp.emissions import DiscreteEmission
from src.block_mdp.environment import EnvironmentAccess
from src.block_mdp.mdp import LatentBlockMDP
from src.block_mdp.observations import ObservationBatch
from src.block_mdp.policies import ObservationTableDecider, one_hot_rows
from src.envs.combolock import make_combolock
from src.explorers.contrastive import bayes_optimal, build_contrastive_dataset, observation_population
from src.explorers.dto import ImposterMode
from src.oracles.bounds import bernstein_band, csc_band, hoeffding_band, psdp_bound, reg_excess_risk_bound
from src.oracles.cb import EnumeratedClass, LinearClass, TabularClass, cb_optimize, iw_objective
from src.oracles.dto import CBBackend, CBDataset, ContrastiveDataset, LossKind, RegBackend, RegConfigDTO
from src.oracles.gradcheck import grad_check
from src.oracles.network import LEAKY_SLOPE, PLAIN, GumbelBottleneckNetwork
from src.oracles.regression import AbstractionClass, CellStatistics, EarlyStopping, label_baseline, reg_fit, reg_fit_population
from src.psdp.cover import homing_covers
from src.utils.errors import ConfigurationError, EmptyDatasetError, EnumerationBudgetError, UnsupportedOperationError

from conftest import zero_rewards

N_PREV, N_NEXT = 2, 6


@pytest.fixture
def three_state_mdp():
    """Dos estados iniciales, tres estados en el paso 2 con dos símbolos cada uno"""
    T = np.array(
        [
            [[0.6, 0.3, 0.1], [0.1, 0.1, 0.8]],
            [[0.2, 0.5, 0.3], [0.0, 0.7, 0.3]],
        ]
    )
    emission = DiscreteEmission(
        [np.eye(2), np.kron(np.eye(3), np.array([[0.4, 0.6]]))],
        [["u", "v"], [f"o{k}" for k in range(N_NEXT)]],
    )
    return LatentBlockMDP(
        states=[["s1", "s2"], ["p", "q", "r"]],
        actions=["a0", "a1"],
        start=[0.3, 0.7],
        transitions=[T],
        rewards=zero_rewards([2, 3], 2),
        emission=emission,
        name="three-state",
    )


def analytic_bayes_optimal(mdp):
    """f*(x, a, x') = T(s'|s,a) / (T(s'|s,a) + ρ(s')) sobre símbolos"""
    T = mdp.transition(1)
    rho = np.einsum("s,sat->t", mdp.start, T) / mdp.n_actions
    latent = T / (T + rho[None, None, :])
    owners_next = np.repeat(np.arange(3), 2)
    return latent[:, :, owners_next]


def all_cells():
    prev, actions, nxt = np.meshgrid(np.arange(N_PREV), np.arange(2), np.arange(N_NEXT), indexing="ij")
    return ObservationBatch(1, prev.ravel()), actions.ravel(), ObservationBatch(2, nxt.ravel())


class TestRegression:
    def test_population_erm_matches_bayes_optimal(self, three_state_mdp):
        real, imposter = observation_population(three_state_mdp, [], 2)
        phi_class = AbstractionClass.all_maps(N_PREV, N_NEXT, M=2, N=3, budget=100_000)
        regressor = reg_fit_population(CellStatistics.from_population(real, imposter), phi_class)
        prev, actions, nxt = all_cells()
        predicted = regressor.predict(prev, actions, nxt).reshape(N_PREV, 2, N_NEXT)
        expected = analytic_bayes_optimal(three_state_mdp)
        mass = (real + imposter) > 0
        assert np.abs(predicted - expected)[mass].max() <= 1e-9
        assert np.allclose(bayes_optimal(real, imposter)[mass], expected[mass], atol=1e-12)

    def test_finite_sample_error_below_excess_risk_bound(self, three_state_mdp):
        env = EnvironmentAccess(three_state_mdp)
        dataset, _ = build_contrastive_dataset(env, [], 2, 8_000, mode=ImposterMode.LITERAL, seed=4)
        config = RegConfigDTO(backend=RegBackend.EXACT_ERM)
        regressor, report = reg_fit(dataset, N=3, M=2, config=config, widths=(N_PREV, N_NEXT))
        real, imposter = observation_population(three_state_mdp, [], 2)
        prev, actions, nxt = all_cells()
        predicted = regressor.predict(prev, actions, nxt).reshape(N_PREV, 2, N_NEXT)
        expected = analytic_bayes_optimal(three_state_mdp)
        mass = real + imposter
        squared_error = float(np.sum(mass * np.nan_to_num((predicted - expected) ** 2)))
        assert report.generalization_bound is not None
        assert squared_error <= report.generalization_bound

    def test_prediction_depends_only_on_indices(self, three_state_mdp):
        env = EnvironmentAccess(three_state_mdp)
        dataset, _ = build_contrastive_dataset(env, [], 2, 400, seed=1)
        config = RegConfigDTO(hidden=8, max_epochs=3, patience=2)
        regressor, report = reg_fit(dataset, N=3, M=2, config=config, widths=(N_PREV, N_NEXT), seed=2)
        prev, actions, nxt = all_cells()
        f_idx, a_idx, b_idx = regressor.cells(prev, actions, nxt)
        predicted = regressor.predict(prev, actions, nxt)
        assert np.array_equal(predicted, regressor.w[f_idx, a_idx, b_idx])
        assert report.final_val_loss is not None
        assert report.extra["form"] == "two-model"

    def test_exact_backend_rejects_vector_observations(self):
        prev = ObservationBatch(1, np.zeros((4, 3)))
        dataset = ContrastiveDataset(prev, np.zeros(4, dtype=np.int64), ObservationBatch(2, np.zeros((4, 3))), np.ones(4), 2)
        with pytest.raises(UnsupportedOperationError):
            reg_fit(dataset, N=2, M=2, config=RegConfigDTO(backend=RegBackend.EXACT_ERM))

    def test_abstraction_budget(self):
        with pytest.raises(EnumerationBudgetError):
            AbstractionClass.all_maps(6, 6, M=3, N=3, budget=10)

    def test_excess_risk_shrinks_with_more_data(self, three_state_mdp):
        env = EnvironmentAccess(three_state_mdp)
        config = RegConfigDTO(backend=RegBackend.EXACT_ERM)
        real, imposter = observation_population(three_state_mdp, [], 2)
        mass = real + imposter
        expected = analytic_bayes_optimal(three_state_mdp)
        prev, actions, nxt = all_cells()
        risks = []
        for n in (500, 2_000, 8_000):
            errors = []
            for seed in range(5):
                dataset, _ = build_contrastive_dataset(env, [], 2, n, mode=ImposterMode.LITERAL, seed=seed)
                regressor, report = reg_fit(dataset, N=3, M=2, config=config, widths=(N_PREV, N_NEXT))
                predicted = regressor.predict(prev, actions, nxt).reshape(N_PREV, 2, N_NEXT)
                errors.append(float(np.sum(mass * np.nan_to_num((predicted - expected) ** 2))))
            risks.append(np.mean(errors))
        assert risks[0] >= risks[1] >= risks[2]
        assert risks[2] <= report.generalization_bound

    def test_sgd_backend_beats_constant_predictor_on_small_lock(self):
        mdp = make_combolock(3, 2, seed=0)
        covers = homing_covers(mdp)
        dataset, _ = build_contrastive_dataset(EnvironmentAccess(mdp), covers[2].policies, 3, 10_000, seed=1)
        _, report = reg_fit(dataset, N=2, M=3, seed=0)
        assert report.final_val_loss < 0.25


class TestEarlyStopping:
    def test_plateau_does_not_consume_patience(self):
        stopping = EarlyStopping(baseline=0.25, patience=3, margin=1e-3)
        for epoch in range(21):
            stopping.update(epoch, 0.2505)
        assert not stopping.escaped
        assert not stopping.should_stop

    def test_stops_after_escaping(self):
        stopping = EarlyStopping(baseline=0.25, patience=3, margin=1e-3)
        assert stopping.update(0, 0.20)
        for epoch in range(1, 4):
            assert not stopping.update(epoch, 0.21)
        assert stopping.should_stop
        assert stopping.best_epoch == 0

    def test_uncounted_epochs_do_not_stop(self):
        stopping = EarlyStopping(baseline=0.25, patience=1, margin=0.0)
        stopping.update(0, 0.1)
        stopping.update(1, 0.2, counting=False)
        assert not stopping.should_stop

    def test_label_baseline(self):
        labels = np.array([0.0, 1.0] * 50)
        assert label_baseline(labels, labels, LossKind.SQUARE) == pytest.approx(0.25)
        assert label_baseline(labels, labels, LossKind.CROSS_ENTROPY) == pytest.approx(np.log(2.0))


class TestGradientCheck:
    @pytest.mark.parametrize("init", range(10))
    def test_manual_gradients_match_finite_differences(self, init):
        rng = np.random.default_rng(100 + init)
        n = 12
        network = GumbelBottleneckNetwork(
            prev_dim=4, next_dim=5, n_actions=3, prev_bottleneck=2, next_bottleneck=3, hidden=8, temperature=1.0, seed=init
        )
        x_prev, x_next = rng.normal(size=(n, 4)), rng.normal(size=(n, 5))
        actions = rng.integers(3, size=n)
        labels = rng.integers(2, size=n).astype(np.float64)
        errors = grad_check(network, x_prev, actions, x_next, labels, eps=1e-5)
        assert max(errors.values()) <= 1e-4

    @staticmethod
    def head_only(seed=0):
        return GumbelBottleneckNetwork(prev_dim=4, next_dim=5, n_actions=3, hidden=8, seed=seed)

    def test_zero_input_bias_gradient(self):
        network = self.head_only()
        n = 10
        zeros_prev, zeros_next = np.zeros((n, 4)), np.zeros((n, 5))
        actions = np.zeros(n, dtype=np.int64)
        _, grads = network.loss_and_grads(zeros_prev, actions, zeros_next, np.zeros(n), mode=PLAIN)
        # todas las filas ven la misma entrada: sólo la columna de la acción 0
        pre = network.params["w1"][4] + network.params["b1"]
        p = expit(float(np.where(pre > 0, pre, LEAKY_SLOPE * pre) @ network.params["w2"][:, 0] + network.params["b2"][0]))
        assert abs(grads["b2"][0] - 2 * p * p * (1 - p)) <= 1e-10

    def test_head_gradients_match_closed_form(self):
        rng = np.random.default_rng(3)
        n = 16
        network = self.head_only(seed=3)
        x_prev, x_next = rng.normal(size=(n, 4)), rng.normal(size=(n, 5))
        actions = rng.integers(3, size=n)
        labels = rng.integers(2, size=n).astype(np.float64)
        _, grads = network.loss_and_grads(x_prev, actions, x_next, labels, mode=PLAIN)
        head_in = np.hstack([x_prev, np.eye(3)[actions], x_next])
        pre = head_in @ network.params["w1"] + network.params["b1"]
        act = np.where(pre > 0, pre, LEAKY_SLOPE * pre)
        p = expit(act @ network.params["w2"][:, 0] + network.params["b2"][0])
        residual = 2 * (p - labels) * p * (1 - p) / n
        slope = np.where(pre > 0, 1.0, LEAKY_SLOPE)
        expected = {
            "b2": np.array([residual.sum()]),
            "w2": np.einsum("i,ij->j", residual, act)[:, None],
            "b1": np.einsum("i,j,ij->j", residual, network.params["w2"][:, 0], slope),
            "w1": np.einsum("i,ik,j,ij->kj", residual, head_in, network.params["w2"][:, 0], slope),
        }
        assert set(grads) == set(expected)
        for name, value in expected.items():
            assert np.abs(grads[name] - value).max() <= 1e-7, name


class TestContextualBandit:
    @staticmethod
    def dataset(n=3_000, seed=0):
        """Contexto c y acción óptima c; recompensa 1 sólo si a = c"""
        rng = np.random.default_rng(seed)
        contexts = rng.integers(3, size=n)
        actions = rng.integers(3, size=n)
        rewards = (actions == contexts).astype(np.float64)
        return CBDataset(ObservationBatch(1, contexts), actions, np.full(n, 1 / 3), rewards, 3)

    def test_tabular_exact_recovers_best_action(self):
        decider = cb_optimize(self.dataset(), TabularClass(3, 3), CBBackend.EXACT)
        assert decider.act(ObservationBatch(1, np.arange(3))).tolist() == [0, 1, 2]

    def test_iw_estimate_within_bernstein_band(self):
        data = self.dataset(n=10_000, seed=4)
        policy_class = TabularClass(3, 3)
        decider = cb_optimize(data, policy_class, CBBackend.EXACT)
        band = bernstein_band(len(data), 3, policy_class.log_size(), 0.1)
        assert abs(iw_objective(data, decider) - 1.0) <= band

    def test_enumerated_class_picks_highest_objective(self):
        data = self.dataset()
        members = [ObservationTableDecider(one_hot_rows(np.array(acts), 3)) for acts in ([0, 0, 0], [0, 1, 2], [2, 1, 0])]
        chosen = cb_optimize(data, EnumeratedClass(members), CBBackend.EXACT)
        assert chosen is members[1]
        assert iw_objective(data, chosen) == pytest.approx(1.0, abs=0.1)

    def test_enumerated_class_budget(self):
        members = [ObservationTableDecider(one_hot_rows(np.zeros(3, dtype=np.int64), 3))] * 5
        with pytest.raises(EnumerationBudgetError):
            cb_optimize(self.dataset(100), EnumeratedClass(members, budget=2), CBBackend.EXACT)

    def test_enumerated_class_matches_brute_force(self):
        rng = np.random.default_rng(8)
        n = 600
        contexts = rng.integers(4, size=n)
        actions = rng.integers(3, size=n)
        rewards = rng.random(n)
        data = CBDataset(ObservationBatch(1, contexts), actions, np.full(n, 1 / 3), rewards, 3)
        tables = rng.integers(3, size=(50, 4))
        members = [ObservationTableDecider(one_hot_rows(table, 3)) for table in tables]
        brute_force = [float(np.mean(rewards * (table[contexts] == actions) * 3)) for table in tables]
        chosen = cb_optimize(data, EnumeratedClass(members), CBBackend.EXACT)
        assert chosen is members[int(np.argmax(brute_force))]

    def test_linear_class_on_vector_contexts(self):
        data = self.dataset()
        vectors = ObservationBatch(1, np.eye(3)[data.observations.payload])
        vector_data = CBDataset(vectors, data.actions, data.propensities, data.rewards, 3)
        decider = cb_optimize(vector_data, LinearClass(3, 3), CBBackend.SGD)
        assert decider.act(ObservationBatch(1, np.eye(3))).tolist() == [0, 1, 2]

    def test_sgd_backend_requires_linear_class(self):
        with pytest.raises(ConfigurationError):
            cb_optimize(self.dataset(100), TabularClass(3, 3), CBBackend.SGD)

    def test_empty_dataset(self):
        empty = CBDataset(ObservationBatch(1, np.zeros(0, dtype=np.int64)), np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0), 3)
        with pytest.raises(EmptyDatasetError):
            cb_optimize(empty, TabularClass(3, 3))


class TestBounds:
    def test_hoeffding_band(self):
        assert hoeffding_band(0, 0.1) == float("inf")
        assert hoeffding_band(2_000, 1e-3) == pytest.approx(np.sqrt(np.log(2e3) / 4_000))

    def test_bands_shrink_with_more_data(self):
        assert csc_band(10_000, 4, np.log(100), 0.1) < csc_band(1_000, 4, np.log(100), 0.1)
        assert reg_excess_risk_bound(10_000, 2, 4, 3.0, 0.1) < reg_excess_risk_bound(1_000, 2, 4, 3.0, 0.1)

    def test_psdp_bound_scales_with_capacity_and_step(self):
        base = psdp_bound(1, 1, 5_000, 2, 2.0, 0.1, 1.0)
        assert psdp_bound(2, 3, 5_000, 2, 2.0, 0.1, 0.5) == pytest.approx(12 * base)
