"""
Enumeración vectorizada de políticas latentes deterministas.

Una política sobre los pasos 1..k-1 fija una acción por estado (o por bloque,
si se dan etiquetas de abstracción) en cada paso. Las visitaciones de todas
las políticas se propagan a la vez como una matriz (P, n_h).
"""
import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..block_mdp.policies import NonstationaryPolicy, latent_policy
from ..utils.errors import EnumerationBudgetError
from ..utils.logging_config import get_logger

logger = get_logger("enumeration")

DEFAULT_BUDGET = 100_000


def step_choices(n_states: int, n_actions: int, labels: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Asignaciones de acción de un paso, forma (C, n_states).

    Con ``labels`` los estados de un mismo bloque comparten acción.
    """
    labels = np.arange(n_states) if labels is None else np.asarray(labels, dtype=np.int64)
    n_blocks = int(labels.max()) + 1 if labels.size else 0
    combos = np.array(list(itertools.product(range(n_actions), repeat=n_blocks)), dtype=np.int64)
    return combos.reshape(-1, n_blocks)[:, labels]


def count_policies(mdp, step: int, block_labels: Optional[Sequence[Sequence[int]]] = None) -> int:
    """Número de políticas que deciden en los pasos 1..step-1"""
    total = 1
    for t in range(1, step):
        labels = None if block_labels is None else block_labels[t - 1]
        n_blocks = mdp.n_states(t) if labels is None else int(np.max(labels)) + 1
        total *= mdp.n_actions ** n_blocks
    return total


@dataclass
class PolicyEnumeration:
    """Visitación en ``step`` de cada política enumerada, con sus acciones por paso"""

    step: int
    n_actions: int
    actions: List[np.ndarray]
    visitation: np.ndarray

    def __len__(self) -> int:
        return int(self.visitation.shape[0])

    def policy(self, index: int) -> NonstationaryPolicy:
        return latent_policy(
            [acts[index].tolist() for acts in self.actions], self.n_actions, label=f"enum:{self.step}:{index}"
        )


def enumerate_visitation(
    mdp,
    step: int,
    block_labels: Optional[Sequence[Sequence[int]]] = None,
    budget: int = DEFAULT_BUDGET,
) -> PolicyEnumeration:
    """
    Visitación exacta en el paso ``step`` para todas las políticas deterministas.

    Args:
        mdp: Block MDP tabular
        step: paso cuya visitación se calcula (1..H)
        block_labels: por paso t < step, etiqueta de bloque de cada estado
        budget: máximo número de políticas

    Raises:
        EnumerationBudgetError: si el número de políticas excede ``budget``
    """
    total = count_policies(mdp, step, block_labels)
    if total > budget:
        raise EnumerationBudgetError(f"Políticas deterministas hasta el paso {step}", total, budget)
    dists = mdp.start[None, :].copy()
    actions: List[np.ndarray] = []
    for t in range(1, step):
        labels = None if block_labels is None else block_labels[t - 1]
        choices = step_choices(mdp.n_states(t), mdp.n_actions, labels)
        T = mdp.transition(t)
        chosen = T[np.arange(mdp.n_states(t))[None, :], choices]
        P, C = dists.shape[0], choices.shape[0]
        dists = np.einsum("ps,cst->pct", dists, chosen).reshape(P * C, -1)
        actions = [np.repeat(acts, C, axis=0) for acts in actions]
        actions.append(np.tile(choices, (P, 1)))
    logger.debug("Políticas enumeradas", extra_data={"step": step, "count": int(dists.shape[0])})
    return PolicyEnumeration(step=step, n_actions=mdp.n_actions, actions=actions, visitation=dists)


def exhaustive_optimum(mdp, budget: int = DEFAULT_BUDGET) -> float:
    """
    Valor óptimo externo por fuerza bruta sobre políticas latentes deterministas.

    La acción del último paso se elige estado a estado: sólo afecta a la
    recompensa terminal, que depende de (s_H, a_H).
    """
    enum = enumerate_visitation(mdp, mdp.horizon, budget=budget)
    last = mdp.reward_table(mdp.horizon).expected()[:, :, 0]
    values = np.zeros(len(enum))
    dists = mdp.start[None, :].copy()
    for t in range(1, mdp.horizon):
        acts = enum.actions[t - 1]
        idx = np.arange(mdp.n_states(t))[None, :]
        rows = mdp.transition(t)[idx, acts]
        rewards = mdp.reward_table(t).expected()[idx, acts]
        values += np.einsum("ps,pst,pst->p", dists, rows, rewards)
        dists = np.einsum("ps,pst->pt", dists, rows)
    return float((values + dists @ last.max(axis=1)).max())
