"""
Diagnósticos de abstracciones aprendidas frente a la verdad latente.

Los índices aprendidos se reetiquetan con un emparejamiento bipartito de peso
máximo sobre la tabla de contingencia (índice aprendido × bloque verdadero)
de una muestra decodificada. Los índices sobrantes van a su bloque mayoritario.
"""
from typing import Dict, List, Mapping

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment

from ..block_mdp.observations import ObservationBatch, g_star
from ..block_mdp.policies import NonstationaryPolicy
from ..block_mdp.sampling import monte_carlo_visitation, rollout_batch
from ..kinematics.canonical import quotient_dynamics
from ..kinematics.partition import backward_ki_partition, ki_partition
from ..psdp.cover import PolicyCover
from ..utils.logging_config import get_logger, log_metric
from ..utils.seeding import derive_rng
from .abstraction import Abstraction
from .result import AbstractDynamics

logger = get_logger("evaluation")

MATCH_THRESHOLD = 0.95
MIN_ROW_COUNT = 50


def sample_observations(mdp, covers: Mapping[int, PolicyCover], h: int, n: int, seed: int) -> ObservationBatch:
    """n observaciones del paso h con roll-in Unf(Ψ_h) (μ si h = 1)"""
    cover = covers.get(h)
    policies = list(cover.policies) if cover and cover.policies else [NonstationaryPolicy([])]
    picks = derive_rng(seed, "eval-choice", h).integers(len(policies), size=n)
    batches = []
    for index, policy in enumerate(policies):
        size = int((picks == index).sum())
        if size == 0:
            continue
        out = rollout_batch(mdp, policy.prefix(h - 1), size, derive_rng(seed, "eval", h, index), keep_observations=True)
        batches.append(out.observations[h - 1])
    return ObservationBatch.concat(batches)


def contingency(learned: np.ndarray, truth: np.ndarray, n_learned: int, n_truth: int) -> np.ndarray:
    table = np.zeros((n_learned, n_truth))
    np.add.at(table, (learned, truth), 1.0)
    return table


def match_labels(learned: np.ndarray, truth: np.ndarray, n_learned: int, n_truth: int) -> np.ndarray:
    """Mapa índice aprendido -> bloque verdadero (-1 si el índice no aparece)"""
    table = contingency(learned, truth, n_learned, n_truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    mapping = np.where(table.sum(axis=1) > 0, np.argmax(table, axis=1), -1)
    for r, c in zip(rows, cols):
        if table[r, c] > 0:
            mapping[r] = c
    return mapping


def partition_accuracy(learned: np.ndarray, truth: np.ndarray, n_learned: int, n_truth: int) -> float:
    """Fracción de la muestra bien etiquetada tras el emparejamiento uno a uno"""
    table = contingency(learned, truth, n_learned, n_truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / max(len(learned), 1))


def evaluate_backward_partitions(
    mdp,
    abstraction: Abstraction,
    covers: Mapping[int, PolicyCover],
    n: int = 1000,
    seed: int = 0,
    threshold: float = MATCH_THRESHOLD,
) -> pd.DataFrame:
    """Exactitud de φ̂_B_h frente a la partición backward KI, pasos 2..H"""
    rows = []
    for h in range(2, mdp.horizon + 1):
        batch = sample_observations(mdp, covers, h, n, seed)
        truth_partition = backward_ki_partition(mdp, h)
        truth = truth_partition.labels()[g_star(batch)]
        learned = abstraction.decode(batch)
        accuracy = partition_accuracy(learned, truth, abstraction.capacity(h), truth_partition.n_blocks)
        rows.append({"h": h, "accuracy": accuracy, "matched": accuracy >= threshold, "true_blocks": truth_partition.n_blocks})
        log_metric(logger, "partition_accuracy", accuracy, h=h)
    return pd.DataFrame(rows, columns=["h", "accuracy", "matched", "true_blocks"])


def dynamics_tv(
    mdp,
    dynamics: AbstractDynamics,
    abstraction: Abstraction,
    covers: Mapping[int, PolicyCover],
    n: int = 1000,
    seed: int = 0,
    min_count: int = MIN_ROW_COUNT,
) -> pd.DataFrame:
    """
    Distancia de variación total por fila (bloque, acción) entre T̂ reetiquetada
    y la dinámica latente canónica (cociente por KI completa).
    """
    H = mdp.horizon
    partitions = [ki_partition(mdp, h) for h in range(1, H + 1)]
    _, transitions, _, _ = quotient_dynamics(mdp, partitions)
    mappings: Dict[int, np.ndarray] = {}
    for h in range(1, H + 1):
        batch = sample_observations(mdp, covers, h, n, seed)
        truth = partitions[h - 1].labels()[g_star(batch)]
        mappings[h] = match_labels(abstraction.decode(batch), truth, abstraction.capacity(h), partitions[h - 1].n_blocks)
    rows: List[Dict] = []
    for t, counts in sorted(dynamics.counts.items()):
        n_from, n_to = partitions[t - 1].n_blocks, partitions[t].n_blocks
        merged = np.zeros((n_from, counts.shape[1], n_to))
        for i, a, j in zip(*np.nonzero(counts)):
            s, s_next = mappings[t][i], mappings[t + 1][j]
            if s >= 0 and s_next >= 0:
                merged[s, a, s_next] += counts[i, a, j]
        totals = merged.sum(axis=2)
        for s, a in zip(*np.nonzero(totals >= min_count)):
            estimate = merged[s, a] / totals[s, a]
            tv = 0.5 * float(np.abs(estimate - transitions[t - 1][s, a]).sum())
            rows.append({"t": t, "block": int(s), "action": int(a), "count": int(totals[s, a]), "tv": tv})
    frame = pd.DataFrame(rows, columns=["t", "block", "action", "count", "tv"])
    if len(frame):
        log_metric(logger, "dynamics_max_tv", float(frame["tv"].max()), rows=len(frame))
    return frame


def best_cover_visitation(mdp, covers: Mapping[int, PolicyCover], n: int, seed: int) -> List[np.ndarray]:
    """Por paso y estado, la visitación Monte Carlo máxima entre las políticas de Ψ_h"""
    out = [mdp.start.copy()]
    for h in range(2, mdp.horizon + 1):
        per_policy = [
            monte_carlo_visitation(mdp, policy.prefix(h - 1), n, seed + k)[h - 1]
            for k, policy in enumerate(covers[h].policies)
        ]
        out.append(np.max(per_policy, axis=0))
    return out
