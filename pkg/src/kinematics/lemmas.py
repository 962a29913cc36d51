"""
Verificación por fuerza bruta de las propiedades estructurales de la KI hacia atrás.
"""
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..utils.logging_config import get_logger, log_metric
from .enumeration import DEFAULT_BUDGET, enumerate_visitation
from .partition import KIPartition

logger = get_logger("lemmas")

BRUTE_FORCE_POINTS = 64


def _extreme_candidates(points: np.ndarray) -> np.ndarray:
    x, y = points[:, 0], points[:, 1]
    picks = [f(v) for v in (x, y, x + y, x - y) for f in (np.argmin, np.argmax)]
    return np.unique(picks)


def _candidate_points(points: np.ndarray) -> np.ndarray:
    """Puntos donde se alcanza el máximo de |u × v|: vértices de la envolvente convexa"""
    if len(points) <= BRUTE_FORCE_POINTS:
        return points
    try:
        hull = ConvexHull(points)
    except QhullError:
        # entrada colineal: los extremos de una función lineal no constante son los dos extremos del segmento
        return points[_extreme_candidates(points)]
    return points[np.union1d(hull.vertices, _extreme_candidates(points))]


def max_cross_deviation(points: np.ndarray) -> float:
    """
    max_{i,j} |p_i[0]·p_j[1] - p_j[0]·p_i[1]| sobre filas de ``points``.

    El producto cruzado es lineal en cada argumento, así que el máximo sobre
    la envolvente convexa se alcanza en un par de vértices.
    """
    points = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(points) < 2:
        return 0.0
    cand = _candidate_points(points)
    cross = np.outer(cand[:, 0], cand[:, 1]) - np.outer(cand[:, 1], cand[:, 0])
    return float(np.abs(cross).max())


def check_policy_ratio(mdp, partition: KIPartition, budget: int = DEFAULT_BUDGET) -> float:
    """
    Máxima desviación |P_π1(s1)·P_π2(s2) - P_π1(s2)·P_π2(s1)| sobre pares de
    estados del mismo bloque y pares de políticas deterministas enumeradas.

    Raises:
        EnumerationBudgetError: si hay demasiadas políticas que enumerar
    """
    if all(len(block) < 2 for block in partition.blocks):
        return 0.0
    enum = enumerate_visitation(mdp, partition.h, budget=budget)
    worst = 0.0
    for block in partition.blocks:
        for s1, s2 in itertools.combinations(block, 2):
            worst = max(worst, max_cross_deviation(enum.visitation[:, [s1, s2]]))
    log_metric(logger, "policy_ratio_deviation", worst, h=partition.h, policies=len(enum))
    return worst


@dataclass
class SimultaneousMaxReport:
    """Por bloque: si los conjuntos argmax de sus estados se intersecan"""

    h: int
    holds: bool
    blocks: Dict[Tuple[int, ...], bool] = field(default_factory=dict)
    witnesses: Dict[Tuple[int, ...], List[int]] = field(default_factory=dict)


def check_simultaneous_maximization(
    mdp, partition: KIPartition, tol: float = 1e-12, budget: int = DEFAULT_BUDGET
) -> SimultaneousMaxReport:
    """
    En un bloque de KI hacia atrás, la política que maximiza P_π(s1) maximiza
    también P_π(s2) para todo s2 del bloque.
    """
    enum = enumerate_visitation(mdp, partition.h, budget=budget)
    best = enum.visitation.max(axis=0)
    argmax = enum.visitation >= best[None, :] - tol
    report = SimultaneousMaxReport(h=partition.h, holds=True)
    for block in partition.blocks:
        common = np.all(argmax[:, list(block)], axis=1)
        ok = bool(common.any())
        report.blocks[block] = ok
        report.witnesses[block] = np.where(common)[0][:5].tolist()
        report.holds = report.holds and ok
    return report
