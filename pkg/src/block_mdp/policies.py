"""
Políticas no estacionarias: un decisor por paso temporal.

Representaciones:
- ``latent-table``: actúa sobre g*(x); sólo para DP exacta y oráculos.
- ``observation-table``: tabla explícita sobre símbolos discretos.
- ``linear-argmax``: argmax_a (W x + b)_a sobre observaciones vectoriales.
- ``explicit-function``: función arbitraria (uniforme, clases enumeradas).
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ConfigurationError, UnsupportedOperationError
from .emissions import DiscreteEmission
from .observations import DISCRETE, VECTOR, ObservationBatch, g_star

LATENT_TABLE = "latent-table"
OBSERVATION_TABLE = "observation-table"
LINEAR_ARGMAX = "linear-argmax"
EXPLICIT_FUNCTION = "explicit-function"


def sample_actions(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Muestrear una acción por fila de una matriz (n, A) de probabilidades"""
    cumulative = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])
    actions = (u[:, None] >= cumulative).sum(axis=1)
    return np.minimum(actions, probs.shape[1] - 1).astype(np.int64)


def one_hot_rows(indices: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((len(indices), width))
    out[np.arange(len(indices)), indices] = 1.0
    return out


class Decider(ABC):
    """Decisor de un paso: observación -> distribución sobre acciones"""

    representation: str = EXPLICIT_FUNCTION
    deterministic: bool = True

    def __init__(self, n_actions: int):
        self.n_actions = int(n_actions)

    @abstractmethod
    def action_probs(self, obs: ObservationBatch) -> np.ndarray:
        """Matriz (n, A) de probabilidades de acción"""

    def act(self, obs: ObservationBatch, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        probs = self.action_probs(obs)
        if self.deterministic:
            return np.argmax(probs, axis=1).astype(np.int64)
        if rng is None:
            raise ValueError("Un decisor estocástico necesita un generador aleatorio")
        return sample_actions(probs, rng)

    def latent_action_probs(self, mdp, h: int) -> np.ndarray:
        """Probabilidades (n_h, A) marginalizadas sobre la emisión del paso h"""
        raise UnsupportedOperationError(
            f"La representación {self.representation} no admite marginalización exacta"
        )

    def check_payload(self, payload_kind: str) -> None:
        """Error de configuración si el decisor no puede leer este tipo de observación"""

    def to_artifact(self) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        raise UnsupportedOperationError(f"La representación {self.representation} no es serializable")


class UniformDecider(Decider):
    deterministic = False

    def action_probs(self, obs: ObservationBatch) -> np.ndarray:
        return np.full((len(obs), self.n_actions), 1.0 / self.n_actions)

    def latent_action_probs(self, mdp, h: int) -> np.ndarray:
        return np.full((mdp.n_states(h), self.n_actions), 1.0 / self.n_actions)

    def to_artifact(self):
        return {"representation": "uniform", "n_actions": self.n_actions}, {}


class LatentTableDecider(Decider):
    """Tabla (n_h, A) indexada por el estado latente decodificado"""

    representation = LATENT_TABLE

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=np.float64)
        super().__init__(table.shape[1])
        self.table = table
        self.deterministic = bool(np.all(np.isclose(table.max(axis=1), 1.0)))

    @classmethod
    def from_actions(cls, actions: Sequence[int], n_actions: int) -> "LatentTableDecider":
        return cls(one_hot_rows(np.asarray(actions, dtype=np.int64), n_actions))

    def action_probs(self, obs: ObservationBatch) -> np.ndarray:
        return self.table[g_star(obs)]

    def latent_action_probs(self, mdp, h: int) -> np.ndarray:
        if self.table.shape[0] != mdp.n_states(h):
            raise ConfigurationError(f"Tabla latente con {self.table.shape[0]} filas para {mdp.n_states(h)} estados")
        return self.table

    def to_artifact(self):
        return {"representation": self.representation, "n_actions": self.n_actions}, {"table": self.table}


class ObservationTableDecider(Decider):
    """Tabla (n_obs_h, A) sobre símbolos discretos"""

    representation = OBSERVATION_TABLE

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=np.float64)
        super().__init__(table.shape[1])
        self.table = table
        self.deterministic = bool(np.all(np.isclose(table.max(axis=1), 1.0)))

    @classmethod
    def from_actions(cls, actions: Sequence[int], n_actions: int) -> "ObservationTableDecider":
        return cls(one_hot_rows(np.asarray(actions, dtype=np.int64), n_actions))

    def check_payload(self, payload_kind: str) -> None:
        if payload_kind != DISCRETE:
            raise ConfigurationError("Una tabla de observaciones requiere emisiones discretas")

    def action_probs(self, obs: ObservationBatch) -> np.ndarray:
        self.check_payload(obs.kind)
        return self.table[obs.payload]

    def latent_action_probs(self, mdp, h: int) -> np.ndarray:
        if not isinstance(mdp.emission, DiscreteEmission):
            raise UnsupportedOperationError("Marginalización exacta sólo con emisiones discretas")
        return mdp.emission.table(h) @ self.table

    def to_artifact(self):
        return {"representation": self.representation, "n_actions": self.n_actions}, {"table": self.table}


class LinearArgmaxDecider(Decider):
    """argmax_a (W x + b)_a; empates a favor de la acción de menor id"""

    representation = LINEAR_ARGMAX

    def __init__(self, weights: np.ndarray, bias: Optional[np.ndarray] = None):
        weights = np.asarray(weights, dtype=np.float64)
        super().__init__(weights.shape[0])
        self.weights = weights
        self.bias = np.zeros(weights.shape[0]) if bias is None else np.asarray(bias, dtype=np.float64)

    def check_payload(self, payload_kind: str) -> None:
        if payload_kind != VECTOR:
            raise ConfigurationError("Una política lineal requiere observaciones vectoriales")

    def scores(self, obs: ObservationBatch) -> np.ndarray:
        self.check_payload(obs.kind)
        return obs.payload @ self.weights.T + self.bias

    def action_probs(self, obs: ObservationBatch) -> np.ndarray:
        return one_hot_rows(np.argmax(self.scores(obs), axis=1), self.n_actions)

    def to_artifact(self):
        return (
            {"representation": self.representation, "n_actions": self.n_actions},
            {"weights": self.weights, "bias": self.bias},
        )


class NonstationaryPolicy:
    """Secuencia de decisores π_1..π_k (k puede ser menor que H en prefijos)"""

    def __init__(self, deciders: Sequence[Decider], label: str = ""):
        self.deciders: List[Decider] = list(deciders)
        self.label = label

    def __len__(self) -> int:
        return len(self.deciders)

    @property
    def representation(self) -> str:
        kinds = {d.representation for d in self.deciders}
        if len(kinds) == 1:
            return kinds.pop()
        return "mixed" if kinds else "empty"

    def decider(self, h: int) -> Decider:
        if not 1 <= h <= len(self.deciders):
            raise IndexError(f"La política no cubre el paso {h} (longitud {len(self.deciders)})")
        return self.deciders[h - 1]

    def act(self, obs: ObservationBatch, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        return self.decider(obs.timestep).act(obs, rng)

    def prefix(self, k: int) -> "NonstationaryPolicy":
        return NonstationaryPolicy(self.deciders[:k], label=self.label)

    def then(self, *deciders: Decider) -> "NonstationaryPolicy":
        return NonstationaryPolicy(self.deciders + list(deciders), label=self.label)

    def replace(self, h: int, decider: Decider) -> "NonstationaryPolicy":
        deciders = list(self.deciders)
        deciders[h - 1] = decider
        return NonstationaryPolicy(deciders, label=self.label)

    def check_emission(self, payload_kind: str) -> None:
        for decider in self.deciders:
            decider.check_payload(payload_kind)

    def __repr__(self) -> str:
        return f"NonstationaryPolicy(len={len(self)}, repr={self.representation}, label={self.label!r})"


def uniform_policy(n_actions: int, length: int) -> NonstationaryPolicy:
    return NonstationaryPolicy([UniformDecider(n_actions) for _ in range(length)], label="uniform")


def latent_policy(actions_per_step: Sequence[Sequence[int]], n_actions: int, label: str = "") -> NonstationaryPolicy:
    """Política latente determinista a partir de listas de acciones por estado"""
    return NonstationaryPolicy(
        [LatentTableDecider.from_actions(actions, n_actions) for actions in actions_per_step], label=label
    )


def decider_from_artifact(meta: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> Decider:
    kind = meta["representation"]
    if kind == "uniform":
        return UniformDecider(meta["n_actions"])
    if kind == LATENT_TABLE:
        return LatentTableDecider(arrays["table"])
    if kind == OBSERVATION_TABLE:
        return ObservationTableDecider(arrays["table"])
    if kind == LINEAR_ARGMAX:
        return LinearArgmaxDecider(arrays["weights"], arrays["bias"])
    raise ConfigurationError(f"Representación de política desconocida: {kind}")
