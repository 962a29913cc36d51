"""
Interfaz del agente con el entorno.

Los algoritmos de aprendizaje (psdp, explorers, oracles) sólo usan
``EnvironmentAccess`` y ``EpisodeBatch``: ven lotes de observaciones y
recompensas realizadas, nunca los estados latentes. El acceso es seguro para
muestreo concurrente: el contador de episodios va protegido por un lock.
"""
import threading
from typing import Optional

import numpy as np

from ..utils.errors import BudgetExceededError
from ..utils.logging_config import get_logger
from .observations import ObservationBatch

logger = get_logger("environment")


class EpisodeBatch:
    """Lote de episodios en curso; avanza paso a paso con ``step``"""

    def __init__(self, mdp, states: np.ndarray, rng: np.random.Generator):
        self._mdp = mdp
        self._states = states
        self._rng = rng
        self.timestep = 1
        self.observation: Optional[ObservationBatch] = self._observe()

    def __len__(self) -> int:
        return len(self._states)

    @property
    def n_actions(self) -> int:
        return self._mdp.n_actions

    @property
    def finished(self) -> bool:
        return self.observation is None

    def _observe(self) -> ObservationBatch:
        payload = self._mdp.emit(self.timestep, self._states, self._rng)
        return ObservationBatch(self.timestep, payload, self._states)

    def step(self, actions: np.ndarray) -> np.ndarray:
        """Ejecutar acciones; devuelve recompensas realizadas del entorno"""
        if self.finished:
            raise RuntimeError("El episodio ya terminó")
        actions = np.asarray(actions, dtype=np.int64)
        h = self.timestep
        next_states = self._mdp.sample_next(h, self._states, actions, self._rng)
        rewards = self._mdp.reward_table(h).realize(self._states, actions, next_states, self._rng)
        if h == self._mdp.horizon:
            self.observation = None
        else:
            self._states = next_states
            self.timestep = h + 1
            self.observation = self._observe()
        return rewards


class EnvironmentAccess:
    """
    Acceso de muestreo a un Block MDP.

    Args:
        mdp: modelo del mundo (inmutable)
        max_episodes: presupuesto opcional de episodios
    """

    def __init__(self, mdp, max_episodes: Optional[int] = None):
        self._mdp = mdp
        self.max_episodes = max_episodes
        self._lock = threading.Lock()
        self._episodes = 0

    @property
    def horizon(self) -> int:
        return self._mdp.horizon

    @property
    def n_actions(self) -> int:
        return self._mdp.n_actions

    @property
    def payload_kind(self) -> str:
        return self._mdp.emission.payload_kind

    @property
    def observation_dim(self) -> int:
        return int(getattr(self._mdp.emission, "dim", 1))

    def n_observations(self, h: int) -> int:
        """Tamaño del alfabeto de observaciones del paso h (emisiones discretas)"""
        return self._mdp.emission.n_observations(h)

    @property
    def episodes_consumed(self) -> int:
        with self._lock:
            return self._episodes

    def start(self, n: int, rng: np.random.Generator) -> EpisodeBatch:
        """Iniciar n episodios con estado inicial s_1 ~ μ"""
        with self._lock:
            self._episodes += n
            consumed = self._episodes
        if self.max_episodes is not None and consumed > self.max_episodes:
            raise BudgetExceededError(consumed, self.max_episodes)
        states = self._mdp.sample_start(n, rng)
        return EpisodeBatch(self._mdp, states, rng)
