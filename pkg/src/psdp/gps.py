"""
Búsqueda greedy de políticas composicionales (GPS).

Sólo se aprende el último decisor π̂_h; se compone con cada prefijo de Ψ_h y
se acepta la mejor composición si su valor estimado alcanza 1 - ε. Si no, el
llamador recurre a PSDP completo.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..block_mdp.environment import EnvironmentAccess
from ..block_mdp.policies import NonstationaryPolicy
from ..block_mdp.rewards import RewardFunction
from ..oracles.cb import cb_optimize
from ..oracles.dto import CBDataset
from ..utils.logging_config import get_logger, log_metric
from ..utils.seeding import derive_child_seed
from .cover import Covers, cover_at
from .psdp import PsdpConfig, resolve_policy_class
from .rollout import TransitionSample, collect_level, estimate_value

logger = get_logger("gps")

DEFAULT_EPSILON = 0.1
DEFAULT_EPISODES = 2000


@dataclass
class GpsOutcome:
    accepted: bool
    value: float
    band: float
    policy: Optional[NonstationaryPolicy] = None
    prefix_index: Optional[int] = None

    def to_record(self) -> dict:
        return {"gps_accepted": self.accepted, "gps_value": self.value, "gps_band": self.band, "gps_prefix": self.prefix_index}


def last_step_dataset(reward: RewardFunction, h: int, sample: TransitionSample, n_actions: int) -> CBDataset:
    """Dataset CB del último paso a partir de transiciones ya muestreadas"""
    rewards = reward.realized(h, sample.prev, sample.actions, sample.next, sample.env_rewards)
    return CBDataset(sample.prev, sample.actions, np.full(len(sample), 1.0 / n_actions), rewards.astype(np.float64), n_actions)


def gps_try(
    env: EnvironmentAccess,
    covers: Covers,
    reward: RewardFunction,
    h: int,
    config: Optional[PsdpConfig] = None,
    epsilon: float = DEFAULT_EPSILON,
    episodes: int = DEFAULT_EPISODES,
    reuse: Optional[TransitionSample] = None,
    stream: Tuple = (),
) -> GpsOutcome:
    """
    Args:
        h: longitud de la política (paso del último decisor)
        reuse: transiciones reales de la transición h ya recogidas con
            Unf(Ψ_h) ∘ Unf(𝒜), reutilizadas como dataset del último paso
    """
    config = config or PsdpConfig()
    cover = cover_at(covers, h)
    seed = derive_child_seed(config.seed, "gps", *stream, h)
    if reuse is not None and reuse.t == h:
        dataset = last_step_dataset(reward, h, reuse, env.n_actions)
    else:
        dataset = collect_level(env, cover.policies, h, h, {}, reward, config.n, seed)
    policy_class, backend = resolve_policy_class(env, h, config)
    decider = cb_optimize(dataset, policy_class, backend, seed=seed)

    prefixes = [p.prefix(h - 1) for p in cover.policies] or [NonstationaryPolicy([])]
    best = GpsOutcome(accepted=False, value=-np.inf, band=0.0)
    for index, prefix in enumerate(prefixes):
        candidate = prefix.then(decider)
        value, band = estimate_value(env, candidate, reward, episodes, seed, "gps-eval", index)
        if value > best.value:
            best = GpsOutcome(False, value, band, candidate, index)
    best.accepted = bool(best.value >= 1.0 - epsilon)
    if best.policy is not None:
        best.policy.label = f"gps:{reward.name}"
    log_metric(logger, "gps_value", best.value, h=h, accepted=best.accepted, band=best.band)
    return best
