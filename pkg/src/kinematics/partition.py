"""
Particiones por inseparabilidad cinemática (KI) sobre estados latentes.

Las observaciones de un mismo estado son KI entre sí, así que una partición de
S_h induce la partición de X_h. La relación por pares se cierra
transitivamente con componentes conexas y los bloques se ordenan por su menor
miembro.
"""
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..utils.logging_config import get_logger, log_validation_warning

logger = get_logger("kinematics")

DEFAULT_TOL = 1e-9
FORWARD, BACKWARD, FULL = "forward", "backward", "full"


@dataclass(frozen=True)
class KIPartition:
    h: int
    blocks: Tuple[Tuple[int, ...], ...]
    kind: str
    tol: float
    state_names: Tuple[str, ...] = ()
    unreachable: Tuple[int, ...] = ()

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def n_states(self) -> int:
        return sum(len(b) for b in self.blocks)

    def labels(self) -> np.ndarray:
        """Índice de bloque de cada estado (el mapa φ* del paso)"""
        out = np.empty(self.n_states, dtype=np.int64)
        for index, block in enumerate(self.blocks):
            out[list(block)] = index
        return out

    def block_of(self, state: int) -> int:
        return int(self.labels()[state])

    def named_blocks(self) -> List[List[str]]:
        return [[self.state_names[i] for i in block] for block in self.blocks]

    def as_name_sets(self) -> FrozenSet[FrozenSet[str]]:
        """Partición como conjunto de conjuntos de nombres (invariante al orden)"""
        return frozenset(frozenset(block) for block in self.named_blocks())

    def to_document(self) -> Dict:
        return {
            "h": self.h,
            "kind": self.kind,
            "tol": self.tol,
            "blocks": self.named_blocks(),
            "unreachable": [self.state_names[i] for i in self.unreachable],
        }


def partition_from_labels(labels: Sequence[int]) -> Tuple[Tuple[int, ...], ...]:
    """Bloques a partir de etiquetas arbitrarias, ordenados por menor miembro"""
    groups: Dict[int, List[int]] = {}
    for state, label in enumerate(labels):
        groups.setdefault(int(label), []).append(state)
    return tuple(sorted((tuple(members) for members in groups.values()), key=lambda b: b[0]))


def _close(related: np.ndarray) -> Tuple[Tuple[int, ...], ...]:
    n = related.shape[0]
    adjacency = csr_matrix(related | np.eye(n, dtype=bool))
    _, labels = connected_components(adjacency, directed=False)
    return partition_from_labels(labels)


def _make(mdp, h: int, blocks, kind: str, tol: float, unreachable=()) -> KIPartition:
    return KIPartition(
        h=h, blocks=blocks, kind=kind, tol=tol,
        state_names=tuple(mdp.state_names(h)), unreachable=tuple(unreachable),
    )


def forward_ki_partition(mdp, h: int, tol: float = DEFAULT_TOL) -> KIPartition:
    """Fusiona s1, s2 si T(·|s1,a) = T(·|s2,a) para toda a (coordenada a coordenada, con tolerancia)"""
    n = mdp.n_states(h)
    if h == mdp.horizon:
        return _make(mdp, h, (tuple(range(n)),), FORWARD, tol)
    rows = mdp.transition(h).reshape(n, -1)
    gap = np.abs(rows[:, None, :] - rows[None, :, :]).max(axis=2)
    return _make(mdp, h, _close(gap <= tol), FORWARD, tol)


def inflow_vectors(mdp, h: int) -> np.ndarray:
    """Vectores de entrada [T(s'|s,a)]_{(s,a)}, una fila por s' en S_h"""
    prev = mdp.transition(h - 1)
    return prev.reshape(-1, prev.shape[2]).T


def backward_ki_partition(mdp, h: int, tol: float = DEFAULT_TOL) -> KIPartition:
    """
    Fusiona s1', s2' si sus vectores de entrada son proporcionales:
    |v1·c2 - v2·c1| <= tol·max(c1, c2), con c_i la suma de entrada.
    Los estados sin entrada quedan aislados y se reportan.
    """
    n = mdp.n_states(h)
    if h == 1:
        return _make(mdp, h, (tuple(range(n)),), BACKWARD, tol)
    inflow = inflow_vectors(mdp, h)
    mass = inflow.sum(axis=1)
    cross = np.abs(inflow[:, None, :] * mass[None, :, None] - inflow[None, :, :] * mass[:, None, None]).max(axis=2)
    scale = np.maximum(mass[:, None], mass[None, :])
    reachable = mass > 0
    related = (cross <= tol * scale) & reachable[:, None] & reachable[None, :]
    unreachable = np.where(~reachable)[0].tolist()
    if unreachable:
        log_validation_warning(
            logger, f"paso {h}", "estados sin flujo entrante aislados",
            states=[mdp.state_names(h)[i] for i in unreachable],
        )
    return _make(mdp, h, _close(related), BACKWARD, tol, unreachable)


def meet(first: KIPartition, second: KIPartition, kind: str = FULL) -> KIPartition:
    """Refinamiento común de dos particiones del mismo paso"""
    a, b = first.labels(), second.labels()
    keys = {pair: i for i, pair in enumerate(sorted(set(zip(a.tolist(), b.tolist()))))}
    labels = [keys[pair] for pair in zip(a.tolist(), b.tolist())]
    return KIPartition(
        h=first.h,
        blocks=partition_from_labels(labels),
        kind=kind,
        tol=first.tol,
        state_names=first.state_names,
        unreachable=tuple(sorted(set(first.unreachable) | set(second.unreachable))),
    )


def ki_partition(mdp, h: int, tol: float = DEFAULT_TOL) -> KIPartition:
    """Partición KI completa: encuentro de la hacia delante y la hacia atrás"""
    forward = forward_ki_partition(mdp, h, tol)
    backward = backward_ki_partition(mdp, h, tol)
    full = meet(forward, backward)
    if not max(forward.n_blocks, backward.n_blocks) <= full.n_blocks <= mdp.n_states(h):
        raise AssertionError(f"Paso {h}: cotas de dimensión KI violadas")
    return full


@dataclass(frozen=True)
class KIDimensions:
    h: int
    n_fd: int
    n_bd: int
    n_kd: int
    n_states: int


def ki_dimensions(mdp, tol: float = DEFAULT_TOL) -> List[KIDimensions]:
    """N_FD, N_BD y N_KD por paso"""
    out = []
    for h in range(1, mdp.horizon + 1):
        out.append(
            KIDimensions(
                h=h,
                n_fd=forward_ki_partition(mdp, h, tol).n_blocks,
                n_bd=backward_ki_partition(mdp, h, tol).n_blocks,
                n_kd=ki_partition(mdp, h, tol).n_blocks,
                n_states=mdp.n_states(h),
            )
        )
    return out
