"""
Instancias ejecutables de los contraejemplos de abstracción.

- ``fig4a``: predecir la acción previa colapsa estados separables.
- ``fig4b_chain(L)``: una política sobre estados abstractos pierde la mitad
  del alcance por nivel frente a una política sobre observaciones.
- ``noisy_bits(d, p)``: un autoencoder de un bit prefiere memorizar ruido.
"""
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from ..block_mdp.emissions import DiscreteEmission
from ..block_mdp.mdp import LatentBlockMDP, RewardTable
from ..utils.errors import ConfigurationError

MAX_NOISY_BITS = 20


@dataclass(frozen=True)
class CounterexampleKind:
    name: str
    params: Dict[str, Any] = field(default_factory=dict)


def _one_symbol_emission(states):
    tables = [np.eye(len(step)) for step in states]
    names = [[f"x_{name}" for name in step] for step in states]
    return DiscreteEmission(tables, names)


def _zero_rewards(states, n_actions):
    H = len(states)
    out = []
    for h in range(1, H + 1):
        n_next = 1 if h == H else len(states[h])
        shape = (len(states[h - 1]), n_actions, n_next)
        out.append(RewardTable(np.zeros(shape), np.ones(shape)))
    return out


def make_fig4a() -> LatentBlockMDP:
    states = [["s1", "s2"], ["s3", "s4", "s5", "s6"], ["s7", "s8", "s9"]]
    a1, a2 = 0, 1
    T1 = np.zeros((2, 2, 4))
    T1[0, a1, 0] = T1[0, a2, 2] = 1.0  # s1: a1->s3, a2->s5
    T1[1, a1, 1] = T1[1, a2, 3] = 1.0  # s2: a1->s4, a2->s6
    T2 = np.zeros((4, 2, 3))
    s7, s8, s9 = 0, 1, 2
    T2[0, a1, s7] = T2[0, a2, s9] = 1.0
    T2[1, a1, s9] = T2[1, a2, s8] = 1.0
    T2[2, a1, s8] = T2[2, a2, s9] = 1.0
    T2[3, a1, s9] = T2[3, a2, s7] = 1.0
    return LatentBlockMDP(
        states=states,
        actions=["a1", "a2"],
        start=[0.5, 0.5],
        transitions=[T1, T2],
        rewards=_zero_rewards(states, 2),
        emission=_one_symbol_emission(states),
        name="fig4a",
    )


def make_fig4b_chain(depth: int) -> LatentBlockMDP:
    """
    Cadena de ``depth`` niveles con un par inicial estocástico en cada uno.

    El primer estado del par sigue en la rama buena con a1, el segundo con a2;
    la otra acción lleva al sumidero. Recompensa 1 al llegar al par final.
    """
    if depth < 1:
        raise ConfigurationError("La cadena necesita al menos un nivel", field_path="depth")
    H = depth + 1
    states = [["s1", "s2"]]
    for level in range(1, depth + 1):
        states.append([f"s{2 * level + 1}", f"s{2 * level + 2}", f"sink{level + 1}"])
    transitions = []
    for h in range(1, H):
        n_h = len(states[h - 1])
        T = np.zeros((n_h, 2, 3))
        T[0, 0, :2] = 0.5
        T[0, 1, 2] = 1.0
        T[1, 1, :2] = 0.5
        T[1, 0, 2] = 1.0
        if n_h == 3:
            T[2, :, 2] = 1.0
        transitions.append(T)
    rewards = _zero_rewards(states, 2)
    final = rewards[-1]
    scale = np.array(final.scale)
    scale[:2, :, 0] = 1.0
    rewards[-1] = RewardTable(scale, final.prob)
    return LatentBlockMDP(
        states=states,
        actions=["a1", "a2"],
        start=[0.5, 0.5],
        transitions=transitions,
        rewards=rewards,
        emission=_one_symbol_emission(states),
        name=f"fig4b-chain-{depth}",
    )


def make_noisy_bits(d: int, state_prob: float) -> LatentBlockMDP:
    """
    Dos estados; observación de d bits cuyo primer bit (el más significativo)
    codifica el estado y el resto son Ber(1/2).
    """
    if not 2 <= d <= MAX_NOISY_BITS:
        raise ConfigurationError(f"d debe estar en [2, {MAX_NOISY_BITS}]", field_path="d")
    if not 0.0 <= state_prob <= 1.0:
        raise ConfigurationError("state_prob fuera de [0, 1]", field_path="state_prob")
    half = 1 << (d - 1)
    table = np.zeros((2, 2 * half))
    table[0, :half] = 1.0 / half
    table[1, half:] = 1.0 / half
    names = [format(o, f"0{d}b") for o in range(2 * half)]
    states = [["s0", "s1"]]
    return LatentBlockMDP(
        states=states,
        actions=["a"],
        start=[1.0 - state_prob, state_prob],
        transitions=[],
        rewards=_zero_rewards(states, 1),
        emission=DiscreteEmission([table], [names]),
        name=f"noisy-bits-{d}",
        metadata={"noisy_bits": {"d": d, "state_prob": state_prob}},
    )


def make_counterexample(kind) -> LatentBlockMDP:
    """Construir un contraejemplo a partir de un ``CounterexampleKind`` o de su nombre"""
    if isinstance(kind, str):
        kind = CounterexampleKind(kind)
    if kind.name == "fig4a":
        return make_fig4a()
    if kind.name == "fig4b_chain":
        return make_fig4b_chain(int(kind.params.get("depth", 1)))
    if kind.name == "noisy_bits":
        return make_noisy_bits(int(kind.params.get("d", 16)), float(kind.params.get("state_prob", 0.8)))
    raise ConfigurationError(f"Contraejemplo desconocido: {kind.name}", field_path="kind")
