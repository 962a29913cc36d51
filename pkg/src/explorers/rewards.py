"""
Recompensas internas R_{i,h}(x, a, x') = 1{τ(x') = h ∧ φ(x') = i}.

La llegada al paso h ocurre en la transición h - 1.
"""
from typing import Optional

import numpy as np

from ..block_mdp.observations import ObservationBatch
from ..block_mdp.rewards import RewardFunction
from ..oracles.encoders import Encoder
from ..utils.errors import ConfigurationError
from .abstraction import Abstraction, latent_membership


class InternalReward(RewardFunction):
    def __init__(self, decoder: Encoder, index: int, h: int):
        if h < 2:
            raise ConfigurationError("Una recompensa interna apunta a un paso h >= 2", field_path="h")
        self.decoder = decoder
        self.index = int(index)
        self.h = int(h)
        self.name = f"internal:{self.h}:{self.index}"

    @property
    def last_transition(self) -> Optional[int]:
        return self.h - 1

    def realized(self, t, obs, actions, next_obs: Optional[ObservationBatch], env_rewards) -> np.ndarray:
        if t != self.h - 1 or next_obs is None or next_obs.timestep != self.h:
            return np.zeros(len(obs))
        return (self.decoder.encode(next_obs) == self.index).astype(np.float64)

    def expected_latent(self, mdp, t: int) -> np.ndarray:
        n_next = 1 if t == mdp.horizon else mdp.n_states(t + 1)
        out = np.zeros((mdp.n_states(t), mdp.n_actions, n_next))
        if t == self.h - 1:
            hit = latent_membership(self.decoder, mdp, self.h)[:, self.index]
            out[:] = hit[None, None, :]
        return out


def make_internal_reward(abstraction: Abstraction, index: int, h: int) -> InternalReward:
    """R_{i,h} para el decodificador del paso h de la abstracción"""
    capacity = abstraction.capacity(h)
    if not 0 <= index < capacity:
        raise ConfigurationError(f"Índice {index} fuera de la capacidad {capacity} del paso {h}", field_path="index")
    return InternalReward(abstraction.decoder(h), index, h)
