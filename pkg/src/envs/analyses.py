"""
Análisis exactos de los contraejemplos de abstracción.

- colapso por predicción de la acción previa (fig4a);
- alcance de políticas sobre estados abstractos frente a observaciones (fig4b);
- pérdida de reconstrucción de autoencoders de un bit (noisy_bits).
"""
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..block_mdp.dynamics import exact_visitation
from ..block_mdp.policies import latent_policy
from ..kinematics.enumeration import DEFAULT_BUDGET, enumerate_visitation
from ..kinematics.partition import KIPartition, backward_ki_partition, ki_partition, partition_from_labels
from ..oracles.bounds import hoeffding_band
from ..utils.errors import ConfigurationError, EnumerationBudgetError
from ..utils.logging_config import get_logger, log_metric
from ..utils.seeding import derive_rng, episode_chunks
from .counterexamples import make_fig4a, make_fig4b_chain, make_noisy_bits

logger = get_logger("analyses")

POSTERIOR_TOL = 1e-12
PREV_ACTION = "bayes-prev-action"


def _posterior_conflicts(T: np.ndarray, tol: float) -> np.ndarray:
    """conflict[i, j]: algún s alcanza s'_i y s'_j con posteriores distintos"""
    mass = T.sum(axis=1)
    posterior = np.divide(T, mass[:, None, :], out=np.zeros_like(T), where=mass[:, None, :] > 0)
    reached = mass > 0
    gap = np.abs(posterior[:, :, :, None] - posterior[:, :, None, :]).max(axis=1)
    shared = reached[:, :, None] & reached[:, None, :]
    return np.any(shared & (gap > tol), axis=0)


def _fewest_groups(conflict: np.ndarray, budget: int) -> np.ndarray:
    """Coloreo mínimo del grafo de conflictos por búsqueda exhaustiva con k creciente"""
    n = len(conflict)
    visited = 0

    def assign(labels: List[int], k: int) -> bool:
        nonlocal visited
        visited += 1
        if visited > budget:
            raise EnumerationBudgetError("Agrupaciones de estados siguientes", visited, budget)
        s = len(labels)
        if s == n:
            return True
        # un grupo nuevo sólo como el siguiente índice libre
        for g in range(min(k, max(labels, default=-1) + 2)):
            if any(labels[t] == g and conflict[s, t] for t in range(s)):
                continue
            labels.append(g)
            if assign(labels, k):
                return True
            labels.pop()
        return False

    for k in range(1, n + 1):
        labels: List[int] = []
        if assign(labels, k):
            return np.array(labels, dtype=np.int64)
    raise AssertionError("n grupos siempre bastan")


def bayes_prev_action_collapse(mdp, h: int, tol: float = POSTERIOR_TOL, budget: int = DEFAULT_BUDGET) -> KIPartition:
    """
    Partición más gruesa de S_h que preserva el posterior bayesiano de la acción previa.

    Con acciones uniformes, P(a | x, x') ∝ T(s'|s, a). Un grupo G es válido si
    todos sus miembros alcanzados desde un mismo s comparten posterior; el
    posterior de G fusionado es entonces el mismo. Los grupos válidos son las
    clases de color del grafo de conflictos, y se devuelve un coloreo con el
    mínimo de grupos (el primero en orden lexicográfico).

    Raises:
        EnumerationBudgetError: la búsqueda visita más de `budget` nodos
    """
    n = mdp.n_states(h)
    if h == 1:
        return KIPartition(h, (tuple(range(n)),), PREV_ACTION, tol, tuple(mdp.state_names(h)))
    labels = _fewest_groups(_posterior_conflicts(mdp.transition(h - 1), tol), budget)
    log_metric(logger, "prev_action_groups", int(labels.max()) + 1, h=h, states=n)
    return KIPartition(h, partition_from_labels(labels), PREV_ACTION, tol, tuple(mdp.state_names(h)))


def best_latent_reach(mdp, h: int, targets: Sequence[str]) -> float:
    """max_π P_π(s_h ∈ targets) sobre políticas latentes (DP hacia atrás)"""
    names = mdp.state_names(h)
    values = np.array([1.0 if name in set(targets) else 0.0 for name in names])
    for t in range(h - 1, 0, -1):
        values = np.einsum("sau,u->sa", mdp.transition(t), values).max(axis=1)
    return float(mdp.start @ values)


def best_abstract_reach(
    mdp,
    h: int,
    targets: Sequence[str],
    block_labels: Optional[Sequence[Sequence[int]]] = None,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """
    max_π P_π(s_h ∈ targets) sobre políticas deterministas que sólo ven el
    índice de bloque. Por defecto, los bloques son la KI hacia atrás de cada paso.
    """
    if block_labels is None:
        block_labels = [backward_ki_partition(mdp, t).labels() for t in range(1, h)]
    enum = enumerate_visitation(mdp, h, block_labels=block_labels, budget=budget)
    index = [mdp.state_index(h, name) for name in targets]
    return float(enum.visitation[:, index].sum(axis=1).max())


def fig4b_final_pair(depth: int) -> Tuple[str, str]:
    return f"s{2 * depth + 1}", f"s{2 * depth + 2}"


def fig4b_reach(depth: int) -> Dict[str, float]:
    """Alcance del par final con políticas sobre observaciones y sobre bloques KI hacia atrás"""
    mdp = make_fig4b_chain(depth)
    targets = fig4b_final_pair(depth)
    return {
        "depth": depth,
        "observation_reach": best_latent_reach(mdp, mdp.horizon, targets),
        "abstract_reach": best_abstract_reach(mdp, mdp.horizon, targets),
        "expected_abstract_reach": 2.0 ** (-depth),
    }


def autoencoder_loss_compare(d: int, state_prob: float) -> Tuple[float, float]:
    """
    Pérdida de Hamming esperada de un código de un bit que guarda el bit de
    estado frente a uno que guarda un bit de ruido fijo: (d-1)/2 frente a
    (d-2)/2 + min(p, 1-p).
    """
    if d < 2:
        raise ConfigurationError("d debe ser al menos 2", field_path="d")
    if not 0.0 <= state_prob <= 1.0:
        raise ConfigurationError("state_prob fuera de [0, 1]", field_path="state_prob")
    keep_state = (d - 1) / 2.0
    keep_noise = (d - 2) / 2.0 + min(state_prob, 1.0 - state_prob)
    return keep_state, keep_noise


def autoencoder_monte_carlo(d: int, state_prob: float, n: int, seed: int, delta: float = 1e-3) -> Dict[str, float]:
    """
    Pérdidas empíricas de ambos códigos sobre observaciones muestreadas del
    MDP noisy_bits, con su banda de Hoeffding (pérdidas en [0, d]).
    """
    mdp = make_noisy_bits(d, state_prob)
    majority = 1 if state_prob >= 0.5 else 0
    shifts = np.arange(d - 1, -1, -1)
    totals = np.zeros(2)
    for chunk, _, size in episode_chunks(n):
        rng = derive_rng(seed, "noisy-bits", chunk)
        states = mdp.sample_start(size, rng)
        bits = (mdp.emit(1, states, rng)[:, None] >> shifts[None, :]) & 1
        keep_state = np.zeros_like(bits)
        keep_state[:, 0] = bits[:, 0]
        keep_noise = np.zeros_like(bits)
        keep_noise[:, 0] = majority
        keep_noise[:, 1] = bits[:, 1]
        # los bits de ruido no codificados se reconstruyen con 0 (pérdida 1/2 cada uno)
        totals += [(bits != keep_state).sum(), (bits != keep_noise).sum()]
    return {
        "keep_state": float(totals[0] / max(n, 1)),
        "keep_noise": float(totals[1] / max(n, 1)),
        "band": hoeffding_band(n, delta, width=d),
    }


FIG4A_PATH_POLICY = [[0, 1], [0, 0, 0, 1], [0, 0, 0]]


def fig4a_analysis() -> Dict[str, Any]:
    """Colapso por acción previa frente a KI en fig4a, y la política que alcanza s7"""
    mdp = make_fig4a()
    policy = latent_policy(FIG4A_PATH_POLICY, mdp.n_actions, label="fig4a-path")
    final = exact_visitation(mdp, policy)[2]
    return {
        "collapse": {h: bayes_prev_action_collapse(mdp, h).named_blocks() for h in (2, 3)},
        "ki": {h: ki_partition(mdp, h).named_blocks() for h in (2, 3)},
        "path_policy": {"P(s7)": float(final[0]), "P(s8)": float(final[1])},
    }


def counterexample_report(
    depths: Iterable[int] = range(1, 7),
    noisy_d: int = 16,
    state_probs: Iterable[float] = (0.5, 0.6, 0.8, 0.9),
) -> Dict[str, Any]:
    """Documento con los tres contraejemplos evaluados exactamente"""
    reach = [fig4b_reach(depth) for depth in depths]
    losses = []
    for p in state_probs:
        keep_state, keep_noise = autoencoder_loss_compare(noisy_d, p)
        losses.append({"d": noisy_d, "p": p, "keep_state": keep_state, "keep_noise": keep_noise})
    for row in reach:
        log_metric(logger, "fig4b_abstract_reach", row["abstract_reach"], depth=row["depth"])
    return {"fig4a": fig4a_analysis(), "fig4b_chain": reach, "noisy_bits": losses}
