"""
Policy Search by Dynamic Programming.

Para t = h..1 se resuelve un problema de bandido contextual cuyos contextos
vienen del roll-in Unf(Ψ_t) y cuyas recompensas son la suma acumulada de la
transición t a h siguiendo los decisores ya aprendidos π̂_{t+1:h}.
"""
import time
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..block_mdp.environment import EnvironmentAccess
from ..block_mdp.observations import DISCRETE
from ..block_mdp.policies import Decider, NonstationaryPolicy
from ..block_mdp.rewards import RewardFunction
from ..oracles.bounds import csc_band, psdp_bound
from ..oracles.cb import LinearClass, PolicyClass, TabularClass, cb_optimize, iw_objective
from ..oracles.dto import CBBackend, CBConfigDTO
from ..utils.logging_config import get_logger, log_data_loaded, log_operation_start, log_operation_success
from ..utils.seeding import derive_child_seed
from .cover import Covers, cover_at
from .rollout import collect_level, reward_horizon

logger = get_logger("psdp")

LevelCallback = Callable[[Dict], None]


class PolicyClassKind(str, Enum):
    AUTO = "auto"
    TABULAR = "tabular"
    LINEAR = "linear"


class PsdpConfig(BaseModel):
    """Muestras por nivel, clase de políticas, backend del CB y semilla.

    ``capacity`` es la N de la cota; sin ella se usa el mayor |Ψ_t|.
    """

    n: int = Field(default=20_000, ge=1)
    capacity: Optional[int] = Field(default=None, ge=1)
    policy_class: PolicyClassKind = PolicyClassKind.AUTO
    backend: Optional[CBBackend] = None
    cb: CBConfigDTO = Field(default_factory=CBConfigDTO)
    seed: int = 0
    delta: float = Field(default=0.1, gt=0.0, lt=1.0)


def resolve_policy_class(env: EnvironmentAccess, t: int, config: PsdpConfig) -> Tuple[PolicyClass, CBBackend]:
    kind = config.policy_class
    if kind == PolicyClassKind.AUTO:
        kind = PolicyClassKind.TABULAR if env.payload_kind == DISCRETE else PolicyClassKind.LINEAR
    if kind == PolicyClassKind.TABULAR:
        return TabularClass(env.n_observations(t), env.n_actions), config.backend or CBBackend.EXACT
    return LinearClass(env.observation_dim, env.n_actions, config.cb), config.backend or CBBackend.SGD


def psdp(
    env: EnvironmentAccess,
    covers: Covers,
    reward: RewardFunction,
    h: int,
    config: Optional[PsdpConfig] = None,
    on_level: Optional[LevelCallback] = None,
    stream: Tuple = (),
) -> NonstationaryPolicy:
    """
    Optimizar ``reward`` con coberturas Ψ_1..Ψ_h.

    Args:
        env: acceso de muestreo al entorno
        covers: Ψ_t por paso; Ψ_1 puede faltar (roll-in desde μ)
        reward: recompensa externa o interna
        h: número de pasos de la política devuelta
        config: muestras por nivel y oráculo CB
        on_level: receptor de los registros por nivel
        stream: claves adicionales para derivar semillas

    Returns:
        Política (π̂_1, ..., π̂_h)

    Raises:
        CoverError: Ψ_t vacía para algún t > 1
    """
    config = config or PsdpConfig()
    started = time.time()
    last = reward_horizon(reward, h)
    log_operation_start(logger, "psdp", h=h, reward=reward.name, n=config.n)
    learned: Dict[int, Decider] = {}
    log_sizes: List[float] = []
    for t in range(h, 0, -1):
        cover = cover_at(covers, t)
        seed = derive_child_seed(config.seed, "psdp", *stream, t)
        dataset = collect_level(env, cover.policies, t, last, learned, reward, config.n, seed)
        log_data_loaded(logger, "dataset CB", len(dataset), level=t)
        policy_class, backend = resolve_policy_class(env, t, config)
        decider = cb_optimize(dataset, policy_class, backend, seed=seed)
        learned[t] = decider
        log_sizes.append(policy_class.log_size())
        objective = iw_objective(dataset, decider)
        record = {
            "level": t,
            "dataset_size": len(dataset),
            "cb_objective": objective,
            "uniform_value": float(np.mean(dataset.rewards)),
            "csc_band": csc_band(len(dataset), env.n_actions, log_sizes[-1], config.delta),
        }
        logger.debug("Nivel PSDP resuelto", extra_data=record)
        if on_level:
            on_level(record)
    policy = NonstationaryPolicy([learned[t] for t in range(1, h + 1)], label=f"psdp:{reward.name}")
    widths = [len(cover_at(covers, t)) for t in range(2, h + 1)]
    alphas = [covers[t].alpha for t in range(2, h + 1) if t in covers and covers[t].alpha]
    capacity = config.capacity or max(widths + [1])
    bound = psdp_bound(capacity, h, config.n, env.n_actions, max(log_sizes), config.delta, min(alphas + [1.0]))
    if on_level:
        on_level({"level": 0, "psdp_bound": bound})
    log_operation_success(logger, "psdp", time.time() - started, h=h, bound=bound)
    return policy
