"""
Programación dinámica exacta sobre la cadena latente: visitación, η, valor y óptimo.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..utils.errors import ConfigurationError, UnsupportedOperationError
from ..utils.logging_config import get_logger
from .policies import LatentTableDecider, NonstationaryPolicy, one_hot_rows
from .rewards import ExternalReward, RewardFunction

logger = get_logger("dynamics")


def latent_action_probs(mdp, policy: NonstationaryPolicy, h: int) -> np.ndarray:
    return policy.decider(h).latent_action_probs(mdp, h)


def step_distribution(mdp, dist: np.ndarray, action_probs: np.ndarray, h: int) -> np.ndarray:
    """Distribución sobre S_{h+1} dada la distribución sobre S_h y π_h latente"""
    return np.einsum("s,sa,sat->t", dist, action_probs, mdp.transition(h))


def exact_visitation(mdp, policy: NonstationaryPolicy) -> List[np.ndarray]:
    """
    P_π[s] por paso mediante DP hacia delante.

    Devuelve distribuciones para los pasos 1..min(H, len(π) + 1): un prefijo
    de longitud k determina la visitación hasta el paso k + 1.
    """
    dists = [mdp.start.copy()]
    last = min(mdp.horizon, len(policy) + 1)
    for h in range(1, last):
        dists.append(step_distribution(mdp, dists[-1], latent_action_probs(mdp, policy, h), h))
    return dists


def mixture_visitation(mdp, policies: List[NonstationaryPolicy], h: int) -> np.ndarray:
    """Visitación en el paso h bajo Unf(Ψ): promedio de las visitaciones"""
    if h == 1 or not policies:
        return mdp.start.copy()
    return np.mean([exact_visitation(mdp, p.prefix(h - 1))[h - 1] for p in policies], axis=0)


@dataclass
class EtaResult:
    """η(s) por paso, η_min sobre estados alcanzables y una política homing por estado"""

    eta: List[np.ndarray]
    eta_min: float
    homing: Dict[Tuple[int, int], NonstationaryPolicy] = field(default_factory=dict)
    unreachable: List[Tuple[int, int]] = field(default_factory=list)

    def as_map(self, mdp) -> Dict[Tuple[int, str], float]:
        return mdp.as_state_map(self.eta)


def _backward_max(mdp, h: int, terminal_values: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    DP hacia atrás con valores terminales (n_h, k) en el paso h.

    Devuelve valores en el paso 1, forma (n_1, k), y las acciones greedy por
    paso t < h, forma (n_t, k), con empates hacia la acción de menor id.
    """
    values = terminal_values
    greedy: List[np.ndarray] = []
    for t in range(h - 1, 0, -1):
        q = np.einsum("sau,uk->sak", mdp.transition(t), values)
        greedy.insert(0, np.argmax(q, axis=1))
        values = q.max(axis=1)
    return values, greedy


def eta_exact(mdp) -> EtaResult:
    """
    η(s) = max_π P_π[s] con políticas deterministas latentes.

    Para cada paso h se resuelven a la vez todos los objetivos indicadores
    1{s_h = s}: una columna de valores por estado objetivo.
    """
    eta: List[np.ndarray] = []
    homing: Dict[Tuple[int, int], NonstationaryPolicy] = {}
    for h in range(1, mdp.horizon + 1):
        n_h = mdp.n_states(h)
        values, greedy = _backward_max(mdp, h, np.eye(n_h))
        eta.append(mdp.start @ values)
        for target in range(n_h):
            deciders = [
                LatentTableDecider(one_hot_rows(greedy[t][:, target], mdp.n_actions)) for t in range(h - 1)
            ]
            homing[(h, target)] = NonstationaryPolicy(deciders, label=f"homing:{h}:{mdp.state_names(h)[target]}")
    unreachable = [(h, i) for h, values in enumerate(eta, start=1) for i, v in enumerate(values) if v <= 0]
    positive = np.concatenate([values[values > 0] for values in eta])
    eta_min = float(positive.min()) if positive.size else 0.0
    if unreachable:
        logger.debug("Estados inalcanzables en η", extra_data={"states": unreachable})
    return EtaResult(eta=eta, eta_min=eta_min, homing=homing, unreachable=unreachable)


def _expected_reward(mdp, reward: RewardFunction, t: int) -> np.ndarray:
    return reward.expected_latent(mdp, t)


def exact_value(mdp, policy: NonstationaryPolicy, reward: RewardFunction) -> float:
    """V(π) exacto; la recompensa debe anularse más allá de la longitud de π"""
    covered = len(policy)
    last = reward.last_transition if reward.last_transition is not None else mdp.horizon
    if last > covered:
        raise ConfigurationError(
            f"La política cubre {covered} pasos pero la recompensa llega hasta la transición {last}"
        )
    dist = mdp.start.copy()
    total = 0.0
    for t in range(1, last + 1):
        probs = latent_action_probs(mdp, policy, t)
        r = _expected_reward(mdp, reward, t)
        total += float(np.einsum("s,sa,sau,sau->", dist, probs, mdp.transition(t), r))
        if t < mdp.horizon:
            dist = step_distribution(mdp, dist, probs, t)
    return total


@dataclass
class ValueEstimate:
    """Valor exacto o estimación Monte Carlo con su banda de Hoeffding"""

    value: float
    exact: bool
    episodes: int = 0
    band: float = 0.0
    delta: Optional[float] = None

    def contains(self, other: float) -> bool:
        return abs(self.value - other) <= self.band + 1e-12


def value_of(
    mdp,
    policy: NonstationaryPolicy,
    reward: Optional[RewardFunction] = None,
    monte_carlo_episodes: int = 0,
    seed: int = 0,
    delta: float = 1e-3,
) -> ValueEstimate:
    """
    V(π) bajo una recompensa externa o interna.

    Usa DP exacta cuando la política lo permite; si no, y se pidieron
    episodios Monte Carlo, estima con banda de Hoeffding.
    """
    reward = reward or ExternalReward()
    try:
        return ValueEstimate(value=exact_value(mdp, policy, reward), exact=True)
    except UnsupportedOperationError:
        if monte_carlo_episodes <= 0:
            raise
    from .sampling import monte_carlo_value

    return monte_carlo_value(mdp, policy, reward, monte_carlo_episodes, seed=seed, delta=delta)


def optimal_value(mdp, reward: Optional[RewardFunction] = None, horizon: Optional[int] = None) -> Tuple[float, NonstationaryPolicy]:
    """Óptimo sobre políticas latentes deterministas y una política que lo alcanza"""
    reward = reward or ExternalReward()
    last = horizon or (reward.last_transition if reward.last_transition is not None else mdp.horizon)
    last = max(last, 0)
    future = np.zeros(1 if last == mdp.horizon else mdp.n_states(last + 1))
    deciders: List[LatentTableDecider] = []
    for t in range(last, 0, -1):
        q = np.einsum("sau,sau->sa", mdp.transition(t), _expected_reward(mdp, reward, t) + future[None, None, :])
        deciders.insert(0, LatentTableDecider(one_hot_rows(np.argmax(q, axis=1), mdp.n_actions)))
        future = q.max(axis=1)
    value = float(mdp.start @ future) if last > 0 else 0.0
    return value, NonstationaryPolicy(deciders, label="optimal")
