"""
Par de MDPs indistinguibles: forma canónica (izquierda) y su versión con un
estado partido (derecha).

Izquierda: cadena s1 -> s2 -> s3 con una sola acción y dos símbolos por
estado; s2 emite o3 el 80% de las veces y o4 el resto. Derecha: s2 se parte en
s2a (emite o3) y s2b (emite o4), alcanzados con probabilidades 0.8 y 0.2 y
con la misma dinámica hacia delante.
"""
import numpy as np

from ..block_mdp.emissions import DiscreteEmission
from ..block_mdp.mdp import LatentBlockMDP, RewardTable
from ..utils.errors import ConfigurationError

SPLIT = 0.8


def _zeros(n_states: int, n_next: int) -> RewardTable:
    return RewardTable(np.zeros((n_states, 1, n_next)), np.ones((n_states, 1, n_next)))


def make_fig1(variant: str) -> LatentBlockMDP:
    if variant == "left":
        states = [["s1"], ["s2"], ["s3"]]
        transitions = [np.ones((1, 1, 1)), np.ones((1, 1, 1))]
        tables = [
            np.array([[0.5, 0.5]]),
            np.array([[SPLIT, 1 - SPLIT]]),
            np.array([[0.5, 0.5]]),
        ]
        rewards = [_zeros(1, 1), _zeros(1, 1), _zeros(1, 1)]
    elif variant == "right":
        states = [["s1"], ["s2a", "s2b"], ["s3"]]
        transitions = [np.array([[[SPLIT, 1 - SPLIT]]]), np.ones((2, 1, 1))]
        tables = [
            np.array([[0.5, 0.5]]),
            np.array([[1.0, 0.0], [0.0, 1.0]]),
            np.array([[0.5, 0.5]]),
        ]
        rewards = [_zeros(1, 2), _zeros(2, 1), _zeros(1, 1)]
    else:
        raise ConfigurationError(f"Variante desconocida: {variant}", field_path="variant")
    names = [["o1", "o2"], ["o3", "o4"], ["o5", "o6"]]
    return LatentBlockMDP(
        states=states,
        actions=["a"],
        start=[1.0],
        transitions=transitions,
        rewards=rewards,
        emission=DiscreteEmission(tables, names),
        name=f"fig1-{variant}",
    )
