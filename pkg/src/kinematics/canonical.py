"""
Forma canónica: cociente del Block MDP por la partición KI completa.

Los estados de un bloque comparten filas de transición (KI hacia delante), así
que T'(C'|C, a) se lee de cualquier miembro. La emisión del bloque es la
mezcla de emisiones de sus miembros con pesos proporcionales al flujo entrante
(en el paso 1, proporcionales a μ).
"""
import itertools
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..block_mdp.emissions import DiscreteEmission
from ..block_mdp.mdp import LatentBlockMDP, RewardTable
from ..utils.errors import EnumerationBudgetError, UnsupportedOperationError
from ..utils.logging_config import get_logger, log_validation_warning
from .partition import DEFAULT_TOL, KIPartition, inflow_vectors, ki_partition

logger = get_logger("canonical")

OBSERVATION_POLICY_BUDGET = 10_000


@dataclass
class CanonicalForm:
    mdp: LatentBlockMDP
    partitions: List[KIPartition]
    mapping: Dict[Tuple[int, str], str]
    weights: List[np.ndarray]

    def labels(self, h: int) -> np.ndarray:
        """Estado canónico de cada estado original del paso h"""
        return self.partitions[h - 1].labels()

    def to_document(self) -> Dict:
        return {
            "name": self.mdp.name,
            "mapping": {f"{h}:{name}": target for (h, name), target in sorted(self.mapping.items())},
            "weights": [w.tolist() for w in self.weights],
            "states_per_step": [self.mdp.n_states(h) for h in range(1, self.mdp.horizon + 1)],
        }


def _require_discrete(mdp) -> DiscreteEmission:
    if not isinstance(mdp.emission, DiscreteEmission):
        raise UnsupportedOperationError(f"{mdp.name}: la forma canónica requiere emisiones discretas")
    return mdp.emission


def _member_weights(mdp, h: int, partition: KIPartition) -> np.ndarray:
    """Peso de cada estado dentro de su bloque"""
    mass = mdp.start.copy() if h == 1 else inflow_vectors(mdp, h).sum(axis=1)
    weights = np.zeros(mdp.n_states(h))
    for block in partition.blocks:
        members = list(block)
        total = mass[members].sum()
        weights[members] = mass[members] / total if total > 0 else 1.0 / len(members)
    return weights


def _aggregate(values: np.ndarray, labels: np.ndarray, n_blocks: int, axis: int) -> np.ndarray:
    moved = np.moveaxis(values, axis, 0)
    out = np.zeros((n_blocks,) + moved.shape[1:])
    np.add.at(out, labels, moved)
    return np.moveaxis(out, 0, axis)


def quotient_dynamics(mdp, partitions: Sequence[KIPartition]) -> Tuple[np.ndarray, List[np.ndarray], List[RewardTable], List[np.ndarray]]:
    """
    μ', T' y recompensas del cociente, más los pesos de mezcla por paso.

    Las recompensas de cada celda (C, a, C') se promedian con los pesos de
    los miembros y la masa de transición; si todas las escalas con masa
    coinciden se conserva la forma escala·Ber(p), si no queda constante.
    """
    H = mdp.horizon
    labels = [p.labels() for p in partitions]
    sizes = [p.n_blocks for p in partitions]
    weights = [_member_weights(mdp, h, partitions[h - 1]) for h in range(1, H + 1)]
    start = _aggregate(mdp.start, labels[0], sizes[0], 0)
    transitions, rewards = [], []
    for h in range(1, H + 1):
        T = mdp.transition(h)
        table = mdp.reward_table(h)
        if h < H:
            merged_next = _aggregate(T, labels[h], sizes[h], 2)
            next_labels, n_next = labels[h], sizes[h]
        else:
            merged_next = T
            next_labels, n_next = np.zeros(1, dtype=np.int64), 1
        w = weights[h - 1][:, None, None]
        mass = _aggregate(w * T, labels[h - 1], sizes[h - 1], 0)
        mass = _aggregate(mass, next_labels, n_next, 2)
        paid = _aggregate(w * T * table.expected(), labels[h - 1], sizes[h - 1], 0)
        paid = _aggregate(paid, next_labels, n_next, 2)
        expected = np.divide(paid, mass, out=np.zeros_like(paid), where=mass > 0)

        scale = np.zeros_like(expected)
        prob = np.ones_like(expected)
        support = T > 0
        for C, a, D in zip(*np.nonzero(mass > 0)):
            members = labels[h - 1] == C
            targets = next_labels == D
            cell = support[members][:, a][:, targets]
            scales = np.unique(table.scale[members][:, a][:, targets][cell])
            if len(scales) == 1 and scales[0] > 0:
                scale[C, a, D] = scales[0]
                prob[C, a, D] = min(expected[C, a, D] / scales[0], 1.0)
            else:
                scale[C, a, D] = expected[C, a, D]
        if h < H:
            representative = np.array([block[0] for block in partitions[h - 1].blocks])
            forward = merged_next[representative]
            spread = np.abs(_aggregate(w * merged_next, labels[h - 1], sizes[h - 1], 0) - forward).max()
            if spread > DEFAULT_TOL * 10:
                log_validation_warning(logger, f"paso {h}", "filas de transición distintas dentro de un bloque", spread=spread)
            transitions.append(forward)
        rewards.append(RewardTable(scale, prob))
    return start, transitions, rewards, weights


def canonicalize(mdp, tol: float = DEFAULT_TOL) -> CanonicalForm:
    """Fusionar todos los estados KI del MDP"""
    emission = _require_discrete(mdp)
    H = mdp.horizon
    partitions = [ki_partition(mdp, h, tol) for h in range(1, H + 1)]
    start, transitions, rewards, weights = quotient_dynamics(mdp, partitions)
    states, tables, mapping = [], [], {}
    for h in range(1, H + 1):
        partition = partitions[h - 1]
        names = ["+".join(block) for block in partition.named_blocks()]
        table = np.zeros((partition.n_blocks, emission.n_observations(h)))
        for index, block in enumerate(partition.blocks):
            for s in block:
                table[index] += weights[h - 1][s] * emission.table(h)[s]
                mapping[(h, mdp.state_names(h)[s])] = names[index]
        table /= table.sum(axis=1, keepdims=True)
        states.append(names)
        tables.append(table)
    canonical = LatentBlockMDP(
        states=states,
        actions=mdp.actions,
        start=start,
        transitions=transitions,
        rewards=rewards,
        emission=DiscreteEmission(tables, emission.observation_names),
        name=f"{mdp.name}-canonical",
        metadata={"canonical_of": mdp.name},
    )
    merged = sum(mdp.n_states(h) - canonical.n_states(h) for h in range(1, H + 1))
    logger.info("Forma canónica construida", extra_data={"mdp": mdp.name, "merged_states": merged})
    return CanonicalForm(mdp=canonical, partitions=partitions, mapping=mapping, weights=weights)


def observation_policies(mdp, budget: int = OBSERVATION_POLICY_BUDGET) -> Iterator[List[np.ndarray]]:
    """
    Todas las políticas deterministas sobre observaciones de los pasos 1..H-1
    (la acción del paso H no cambia las observaciones).
    """
    emission = _require_discrete(mdp)
    sizes = [emission.n_observations(h) for h in range(1, mdp.horizon)]
    total = mdp.n_actions ** sum(sizes)
    if total > budget:
        raise EnumerationBudgetError("Políticas sobre observaciones", total, budget)
    for flat in itertools.product(range(mdp.n_actions), repeat=sum(sizes)):
        out, offset = [], 0
        for size in sizes:
            out.append(np.array(flat[offset:offset + size], dtype=np.int64))
            offset += size
        yield out


def observation_process(mdp, actions: Sequence[np.ndarray]) -> np.ndarray:
    """
    Distribución conjunta de (x_1, ..., x_H) bajo una política determinista
    sobre observaciones; ``actions[h-1][o]`` es la acción ante el símbolo o.
    Devuelve un array de forma (n_obs_1, ..., n_obs_H).
    """
    emission = _require_discrete(mdp)
    joint = mdp.start.copy()
    for h in range(1, mdp.horizon):
        E = emission.table(h)
        T = mdp.transition(h)
        step = E[:, :, None] * T[:, np.asarray(actions[h - 1]), :]
        joint = np.einsum("...s,sot->...ot", joint, step)
    return np.einsum("...s,so->...o", joint, emission.table(mdp.horizon))


def _emission_matching(first: DiscreteEmission, second: DiscreteEmission, h: int, tol: float) -> Optional[np.ndarray]:
    names = first.observation_names[h - 1]
    if sorted(names) != sorted(second.observation_names[h - 1]):
        return None
    columns = [second.observation_names[h - 1].index(name) for name in names]
    rows_a, rows_b = first.table(h), second.table(h)[:, columns]
    if rows_a.shape[0] != rows_b.shape[0]:
        return None
    gap = np.abs(rows_a[:, None, :] - rows_b[None, :, :]).max(axis=2)
    match = np.argmin(gap, axis=1)
    if len(set(match.tolist())) != len(match) or gap[np.arange(len(match)), match].max() > tol:
        return None
    return match


def isomorphic(first, second, tol: float = DEFAULT_TOL) -> bool:
    """
    Isomorfismo de Block MDPs discretos que respeta los símbolos observables:
    los estados se emparejan por su fila de emisión y se comparan μ, T y la
    recompensa esperada.
    """
    e1, e2 = _require_discrete(first), _require_discrete(second)
    if first.horizon != second.horizon or first.n_actions != second.n_actions:
        return False
    matches = []
    for h in range(1, first.horizon + 1):
        match = _emission_matching(e1, e2, h, tol)
        if match is None:
            return False
        matches.append(match)
    if np.abs(first.start - second.start[matches[0]]).max() > tol:
        return False
    for h in range(1, first.horizon + 1):
        nxt = matches[h] if h < first.horizon else np.zeros(1, dtype=np.int64)
        T1 = first.transition(h)
        T2 = second.transition(h)[matches[h - 1]][:, :, nxt]
        R1 = first.reward_table(h).expected()
        R2 = second.reward_table(h).expected()[matches[h - 1]][:, :, nxt]
        if np.abs(T1 - T2).max() > tol or np.abs(T1 * R1 - T2 * R2).max() > tol:
            return False
    return True
