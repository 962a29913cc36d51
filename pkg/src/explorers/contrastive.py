"""
Datasets contrastivos de transiciones reales e impostoras.

Transición h-1 -> h con Unf(Ψ_{h-1}) ∘ Unf(𝒜). Una impostora conserva
(x, a) y cambia x' por una observación del paso h extraída de forma
independiente:
- ``resample``: x' remuestreado dentro del propio conjunto de transiciones
  (n reales + n impostoras);
- ``literal``: dos transiciones independientes por ejemplo y una moneda
  Bernoulli(1/2) decide si x' viene de la primera o de la segunda. Con
  ``recycle`` la segunda transición se añade además como ejemplo real.

Las herramientas poblacionales calculan de forma exacta, en MDPs tabulares,
la distribución D sobre (x, a, x', y), ρ_h y el regresor Bayes-óptimo.
"""
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chisquare

from ..block_mdp.dynamics import EtaResult, eta_exact, mixture_visitation
from ..block_mdp.emissions import DiscreteEmission
from ..block_mdp.environment import EnvironmentAccess
from ..block_mdp.observations import ObservationBatch
from ..block_mdp.policies import NonstationaryPolicy
from ..oracles.dto import ContrastiveDataset
from ..psdp.rollout import TransitionSample, sample_transitions
from ..utils.errors import UnsupportedOperationError
from ..utils.logging_config import get_logger, log_data_loaded
from ..utils.seeding import derive_rng
from .dto import ImposterMode

logger = get_logger("contrastive")

MIN_EXPECTED = 5.0


def _labelled(sample: TransitionSample, next_obs: ObservationBatch, label: int, n_actions: int) -> ContrastiveDataset:
    return ContrastiveDataset(sample.prev, sample.actions, next_obs, np.full(len(sample), label, dtype=np.int64), n_actions)


def build_contrastive_dataset(
    env: EnvironmentAccess,
    policies: Sequence[NonstationaryPolicy],
    h: int,
    n: int,
    mode: ImposterMode = ImposterMode.RESAMPLE,
    recycle: bool = False,
    seed: int = 0,
) -> Tuple[ContrastiveDataset, TransitionSample]:
    """
    Returns:
        (dataset etiquetado, transiciones reales de h-1 -> h reutilizables por GPS)
    """
    A = env.n_actions
    rng = derive_rng(seed, "imposter", h)
    if ImposterMode(mode) == ImposterMode.RESAMPLE:
        real = sample_transitions(env, policies, h - 1, n, seed, "reg", h)
        swap = rng.integers(len(real), size=len(real))
        parts = [_labelled(real, real.next, 1, A), _labelled(real, real.next.take(swap), 0, A)]
    else:
        real = sample_transitions(env, policies, h - 1, n, seed, "reg-first", h)
        other = sample_transitions(env, policies, h - 1, n, seed, "reg-second", h)
        keep = rng.random(n) < 0.5
        mixed = ObservationBatch.where(keep, real.next, other.next)
        parts = [ContrastiveDataset(real.prev, real.actions, mixed, keep.astype(np.int64), A)]
        if recycle:
            parts.append(_labelled(other, other.next, 1, A))
    dataset = ContrastiveDataset.concat(parts)
    log_data_loaded(logger, "dataset contrastivo", len(dataset), h=h, mode=ImposterMode(mode).value, positives=int(dataset.labels.sum()))
    return dataset, real


# =============================================================================
# DISTRIBUCIÓN POBLACIONAL (MDPs tabulares)
# =============================================================================


def rollin_marginal(mdp, policies: Sequence[NonstationaryPolicy], t: int) -> np.ndarray:
    """μ_t: distribución latente del paso t bajo Unf(Ψ_t)"""
    return mixture_visitation(mdp, list(policies), t)


def imposter_marginal(mdp, policies: Sequence[NonstationaryPolicy], h: int) -> np.ndarray:
    """ρ_h(s') = Σ_{s,a} μ_{h-1}(s)/|𝒜| · T(s'|s,a)"""
    mu = rollin_marginal(mdp, policies, h - 1)
    return np.einsum("s,sat->t", mu, mdp.transition(h - 1)) / mdp.n_actions


def latent_population(mdp, policies: Sequence[NonstationaryPolicy], h: int) -> Tuple[np.ndarray, np.ndarray]:
    """Masas (n_{h-1}, A, n_h) de D para y = 1 y para y = 0"""
    mu = rollin_marginal(mdp, policies, h - 1)
    rho = imposter_marginal(mdp, policies, h)
    base = 0.5 * mu[:, None, None] / mdp.n_actions
    real = base * mdp.transition(h - 1)
    imposter = base * np.broadcast_to(rho[None, None, :], real.shape)
    return real, np.array(imposter)


def observation_population(mdp, policies: Sequence[NonstationaryPolicy], h: int) -> Tuple[np.ndarray, np.ndarray]:
    """Masas (n_obs_{h-1}, A, n_obs_h) de D sobre símbolos observables"""
    if not isinstance(mdp.emission, DiscreteEmission):
        raise UnsupportedOperationError("La población observable requiere emisiones discretas")
    real, imposter = latent_population(mdp, policies, h)
    Q_prev, Q_next = mdp.emission.table(h - 1), mdp.emission.table(h)
    return (
        np.einsum("so,sat,tp->oap", Q_prev, real, Q_next),
        np.einsum("so,sat,tp->oap", Q_prev, imposter, Q_next),
    )


def bayes_optimal(real: np.ndarray, imposter: np.ndarray) -> np.ndarray:
    """f* = P(y = 1 | x, a, x'); NaN en celdas sin masa"""
    total = real + imposter
    return np.divide(real, total, out=np.full(total.shape, np.nan), where=total > 0)


def rho_lower_bound_gap(
    mdp,
    policies: Sequence[NonstationaryPolicy],
    h: int,
    alpha: float,
    N: int,
    eta: Optional[EtaResult] = None,
) -> float:
    """min_s [ρ_h(s) - α·η(s)/(N|𝒜|)]; no negativo cuando Ψ_{h-1} es una α-cobertura con |Ψ| ≤ N"""
    eta = eta or eta_exact(mdp)
    rho = imposter_marginal(mdp, policies, h)
    return float(np.min(rho - alpha * eta.eta[h - 1] / (N * mdp.n_actions)))


def marginal_chi_square(dataset: ContrastiveDataset, population: np.ndarray, label: int) -> Dict[str, float]:
    """
    Bondad de ajuste de las frecuencias (o, a, o') de los ejemplos con etiqueta
    ``label`` frente a la masa poblacional. Las celdas con esperanza menor que
    5 se agrupan en una sola.
    """
    mask = dataset.labels == label
    observed = np.zeros(population.shape)
    np.add.at(observed, (dataset.prev.payload[mask], dataset.actions[mask], dataset.next.payload[mask]), 1.0)
    probs = population / population.sum()
    expected = probs * mask.sum()
    big = expected >= MIN_EXPECTED
    f_obs = np.append(observed[big], observed[~big].sum())
    f_exp = np.append(expected[big], expected[~big].sum())
    if f_exp[-1] == 0:
        f_obs, f_exp = f_obs[:-1], f_exp[:-1]
    statistic, p_value = chisquare(f_obs, f_exp)
    return {"statistic": float(statistic), "p_value": float(p_value), "cells": int(len(f_obs))}
