"""
Oráculo de optimización offline de bandido contextual (CB).

El objetivo de una política π sobre un dataset de cuádruplas (x, a, p, r) es
el valor por ponderación de importancia:

    V̂(π) = 1/n Σ_i r_i · π(a_i | x_i) / p_i

Backends:
- ``exact``: argmax exacto sobre una clase enumerable (tabular por contexto,
  o lista explícita de políticas);
- ``sgd``: regresión cuadrática de Q(x, a) lineal y política greedy.
"""
from abc import ABC
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve

from ..block_mdp.observations import DISCRETE
from ..block_mdp.policies import Decider, LinearArgmaxDecider, ObservationTableDecider, one_hot_rows
from ..utils.errors import ConfigurationError, EnumerationBudgetError, UnsupportedOperationError
from ..utils.logging_config import get_logger, log_training_epoch
from ..utils.seeding import derive_rng
from .dto import CBBackend, CBConfigDTO, CBDataset
from .network import featurize
from .optim import make_optimizer

logger = get_logger("cb")


class PolicyClass(ABC):
    name: str = "policy-class"

    def log_size(self) -> float:
        """ln|Π| para las cotas"""
        return float("nan")


class TabularClass(PolicyClass):
    """Todas las tablas símbolo -> acción de un paso con ``n_contexts`` símbolos"""

    name = "tabular"

    def __init__(self, n_contexts: int, n_actions: int):
        self.n_contexts = int(n_contexts)
        self.n_actions = int(n_actions)

    def log_size(self) -> float:
        return float(self.n_contexts * np.log(self.n_actions))


class EnumeratedClass(PolicyClass):
    """Lista explícita de decisores"""

    name = "enumerated"

    def __init__(self, members: Sequence[Decider], budget: int = 1000):
        self.members = list(members)
        self.budget = int(budget)

    def log_size(self) -> float:
        return float(np.log(max(len(self.members), 1)))


class LinearClass(PolicyClass):
    """argmax_a (W x + b)_a sobre observaciones vectoriales"""

    name = "linear"

    def __init__(self, dim: int, n_actions: int, config: Optional[CBConfigDTO] = None):
        self.dim = int(dim)
        self.n_actions = int(n_actions)
        self.config = config or CBConfigDTO()

    def log_size(self) -> float:
        """ln|Π| de la discretización de parámetros a 0.01 en [-1, 1]"""
        return float(self.n_actions * (self.dim + 1) * np.log(200.0))


def iw_objective(dataset: CBDataset, decider: Decider) -> float:
    """Valor por ponderación de importancia de un decisor"""
    probs = decider.action_probs(dataset.observations)
    chosen = probs[np.arange(len(dataset)), dataset.actions]
    return float(np.mean(dataset.rewards * chosen / dataset.propensities))


def _iw_table(dataset: CBDataset, n_contexts: int) -> np.ndarray:
    table = np.zeros((n_contexts, dataset.n_actions))
    np.add.at(table, (dataset.observations.payload, dataset.actions), dataset.rewards / dataset.propensities)
    return table / len(dataset)


def _exact(dataset: CBDataset, policy_class: PolicyClass) -> Decider:
    if isinstance(policy_class, TabularClass):
        if dataset.observations.kind != DISCRETE:
            raise UnsupportedOperationError("La clase tabular requiere observaciones discretas")
        table = _iw_table(dataset, policy_class.n_contexts)
        return ObservationTableDecider(one_hot_rows(np.argmax(table, axis=1), dataset.n_actions))
    if isinstance(policy_class, EnumeratedClass):
        if len(policy_class.members) > policy_class.budget:
            raise EnumerationBudgetError("Clase de políticas del CB exacto", len(policy_class.members), policy_class.budget)
        values = [iw_objective(dataset, member) for member in policy_class.members]
        return policy_class.members[int(np.argmax(values))]
    raise UnsupportedOperationError(f"El backend exacto no admite la clase {policy_class.name}")


def _design(dataset: CBDataset, width: int) -> np.ndarray:
    X = featurize(dataset.observations, width)
    return np.concatenate([X, np.ones((len(X), 1))], axis=1)


def _fit_lstsq(X: np.ndarray, dataset: CBDataset, ridge: float) -> np.ndarray:
    """θ_a por mínimos cuadrados ponderados por 1/p, un ajuste por acción"""
    d = X.shape[1]
    theta = np.zeros((dataset.n_actions, d))
    penalty = ridge * np.eye(d)
    penalty[-1, -1] = 0.0
    weights = 1.0 / dataset.propensities
    for a in range(dataset.n_actions):
        mask = dataset.actions == a
        if not mask.any():
            continue
        Xa, wa = X[mask], weights[mask]
        gram = Xa.T @ (Xa * wa[:, None]) + penalty
        rhs = Xa.T @ (wa * dataset.rewards[mask])
        theta[a] = solve(gram + 1e-12 * np.eye(d), rhs, assume_a="sym")
    return theta


def _fit_sgd(X: np.ndarray, dataset: CBDataset, config: CBConfigDTO, seed: int) -> np.ndarray:
    """Minimiza 1/n Σ (θ_{a_i}·x_i - r_i)² con parada temprana"""
    rng = derive_rng(seed, "cb-sgd")
    order = rng.permutation(len(dataset))
    n_val = int(round(config.validation_fraction * len(dataset)))
    val, train = order[:n_val], order[n_val:]
    params = {"theta": np.zeros((dataset.n_actions, X.shape[1]))}
    optimizer = make_optimizer(config.optimizer, config.learning_rate)

    def loss(index):
        pred = np.einsum("nd,nd->n", X[index], params["theta"][dataset.actions[index]])
        return float(np.mean((pred - dataset.rewards[index]) ** 2))

    best, best_theta, waited = np.inf, params["theta"].copy(), 0
    for epoch in range(config.max_epochs):
        shuffled = rng.permutation(train)
        for start in range(0, len(shuffled), config.batch_size):
            index = shuffled[start:start + config.batch_size]
            residual = np.einsum("nd,nd->n", X[index], params["theta"][dataset.actions[index]]) - dataset.rewards[index]
            grad = np.zeros_like(params["theta"])
            np.add.at(grad, dataset.actions[index], 2.0 * residual[:, None] * X[index] / len(index))
            optimizer.step(params, {"theta": grad})
        current = loss(val) if n_val else loss(train)
        log_training_epoch(logger, "cb-linear", epoch, loss(train), current)
        if current < best - 1e-12:
            best, best_theta, waited = current, params["theta"].copy(), 0
        else:
            waited += 1
            if waited >= config.patience:
                break
    return best_theta


def cb_optimize(
    dataset: CBDataset,
    policy_class: PolicyClass,
    backend: CBBackend = CBBackend.EXACT,
    seed: int = 0,
) -> Decider:
    """
    Política de un paso que maximiza el objetivo IW (exacto) o greedy sobre Q̂ (sgd).

    Raises:
        EmptyDatasetError: dataset vacío
        EnumerationBudgetError: clase enumerada demasiado grande para el backend exacto
    """
    dataset.validate()
    backend = CBBackend(backend)
    if backend == CBBackend.EXACT:
        return _exact(dataset, policy_class)
    if not isinstance(policy_class, LinearClass):
        raise ConfigurationError("El backend sgd requiere la clase lineal", field_path="policy_class")
    if dataset.observations.kind == DISCRETE:
        raise ConfigurationError("La clase lineal requiere observaciones vectoriales", field_path="policy_class")
    X = _design(dataset, policy_class.dim)
    config = policy_class.config
    theta = _fit_lstsq(X, dataset, config.ridge) if config.solver == "lstsq" else _fit_sgd(X, dataset, config, seed)
    return LinearArgmaxDecider(theta[:, :-1], theta[:, -1])
