"""
Funciones de recompensa sobre transiciones (x_t, a_t, x_{t+1}).

La transición t va del paso t al paso t + 1; en t = H el siguiente estado es
el centinela terminal y ``next_obs`` es ``None``.
"""
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from ..utils.errors import UnsupportedOperationError
from .observations import ObservationBatch


class RewardFunction(ABC):
    """Recompensa realizable en simulación y, cuando se puede, esperada sobre latentes"""

    name: str = "reward"

    @property
    def last_transition(self) -> Optional[int]:
        """Última transición con recompensa posiblemente no nula (None = hasta H)"""
        return None

    @abstractmethod
    def realized(
        self,
        t: int,
        obs: ObservationBatch,
        actions: np.ndarray,
        next_obs: Optional[ObservationBatch],
        env_rewards: np.ndarray,
    ) -> np.ndarray:
        """Recompensa realizada en la transición t para un lote de episodios"""

    def expected_latent(self, mdp, t: int) -> np.ndarray:
        """Recompensa esperada (n_t, A, n_{t+1}) en la transición t"""
        raise UnsupportedOperationError(f"La recompensa {self.name} no tiene forma latente exacta")


class ExternalReward(RewardFunction):
    """La recompensa del entorno"""

    name = "external"

    def realized(self, t, obs, actions, next_obs, env_rewards):
        return env_rewards

    def expected_latent(self, mdp, t: int) -> np.ndarray:
        return mdp.reward_table(t).expected()

