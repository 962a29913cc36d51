"""
Coberturas de políticas Ψ_h y su certificación exacta en MDPs tabulares.

Ψ_h contiene prefijos de longitud h-1. Es una α-cobertura si para todo
estado s del paso h: max_{π∈Ψ_h} P_π[s] ≥ α·η(s).
"""
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np

from ..block_mdp.dynamics import EtaResult, eta_exact, exact_visitation
from ..block_mdp.policies import NonstationaryPolicy
from ..utils.errors import CoverError
from ..utils.logging_config import get_logger, log_validation_warning

logger = get_logger("cover")


@dataclass
class PolicyCover:
    h: int
    policies: List[NonstationaryPolicy] = field(default_factory=list)
    alpha: Optional[float] = None

    def __len__(self) -> int:
        return len(self.policies)

    def check_prefixes(self) -> None:
        for policy in self.policies:
            if len(policy) < self.h - 1:
                raise CoverError(f"Política de longitud {len(policy)} en la cobertura del paso {self.h}")


Covers = Mapping[int, PolicyCover]


def cover_at(covers: Covers, h: int) -> PolicyCover:
    """Ψ_h; el paso 1 puede faltar o estar vacío (roll-in desde μ)"""
    cover = covers.get(h)
    if cover is None:
        if h == 1:
            return PolicyCover(1)
        raise CoverError(f"No hay cobertura para el paso {h}")
    if h > 1 and len(cover) == 0:
        raise CoverError(f"Cobertura vacía en el paso {h}")
    cover.check_prefixes()
    return cover


@dataclass
class CoverCertificate:
    h: int
    alpha: float
    holds: bool
    best_visitation: np.ndarray
    eta: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return np.divide(self.best_visitation, self.eta, out=np.ones_like(self.eta), where=self.eta > 0)

    @property
    def worst_ratio(self) -> float:
        return float(self.ratios.min()) if self.ratios.size else 1.0


def best_visitation(mdp, cover: PolicyCover) -> np.ndarray:
    """max_{π∈Ψ_h} P_π[s] por estado del paso h, por DP exacta"""
    if cover.h == 1 or not cover.policies:
        return mdp.start.copy()
    per_policy = [exact_visitation(mdp, policy.prefix(cover.h - 1))[cover.h - 1] for policy in cover.policies]
    return np.max(per_policy, axis=0)


def certify_cover(mdp, cover: PolicyCover, alpha: float, eta: Optional[EtaResult] = None) -> CoverCertificate:
    """Comprobar la propiedad de α-cobertura estado a estado, sin muestreo"""
    eta = eta or eta_exact(mdp)
    target = eta.eta[cover.h - 1]
    best = best_visitation(mdp, cover)
    holds = bool(np.all(best >= alpha * target - 1e-12))
    certificate = CoverCertificate(cover.h, alpha, holds, best, target)
    if not holds:
        log_validation_warning(logger, f"cover[{cover.h}]", "no es una α-cobertura", alpha=alpha, worst_ratio=certificate.worst_ratio)
    return certificate


def homing_covers(mdp, eta: Optional[EtaResult] = None) -> Dict[int, PolicyCover]:
    """Coberturas exactas (α = 1): una política homing por estado alcanzable"""
    eta = eta or eta_exact(mdp)
    covers: Dict[int, PolicyCover] = {1: PolicyCover(1, [], 1.0)}
    for h in range(2, mdp.horizon + 1):
        policies = [
            eta.homing[(h, s)] for s in range(mdp.n_states(h)) if (h, s) not in eta.unreachable
        ]
        covers[h] = PolicyCover(h, policies, 1.0)
    return covers


def degrade_cover(cover: PolicyCover, useless: NonstationaryPolicy) -> PolicyCover:
    """
    Cobertura degradada: por cada política se añade una copia de una política
    inútil, de modo que la masa de cada política útil en Unf(Ψ) se reduce a la
    mitad. Se declara α/2 para la cota.
    """
    policies = list(cover.policies) + [useless.prefix(cover.h - 1)] * len(cover.policies)
    alpha = None if cover.alpha is None else cover.alpha / 2
    return PolicyCover(cover.h, policies, alpha)
