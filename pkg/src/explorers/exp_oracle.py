"""
ExpOracle: exploración con acceso oráculo a una abstracción backward KI.

Para h = 2..H se optimiza cada recompensa interna R_{i,h} con PSDP sobre las
coberturas ya construidas; las políticas resultantes forman Ψ_h. Al final un
PSDP sobre la recompensa externa devuelve π̂.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple

from ..block_mdp.environment import EnvironmentAccess
from ..block_mdp.policies import NonstationaryPolicy
from ..block_mdp.rewards import ExternalReward
from ..psdp.cover import PolicyCover
from ..psdp.gps import gps_try
from ..psdp.psdp import psdp
from ..psdp.rollout import TransitionSample
from ..utils.errors import AlgorithmError, KinoPandaError
from ..utils.logging_config import get_logger, log_operation_error, log_operation_start, log_operation_success
from .abstraction import Abstraction
from .dto import HyperparametersDTO
from .result import ExplorationResult
from .rewards import InternalReward, make_internal_reward

logger = get_logger("exp_oracle")

COVER_ALPHA = 0.5


class MetricsSink(Protocol):
    def emit(self, event: str, episodes: int, **metrics: Any) -> None:
        ...


def optimize_internal_rewards(
    algorithm: str,
    env: EnvironmentAccess,
    covers: Dict[int, PolicyCover],
    rewards: Sequence[InternalReward],
    h: int,
    hp: HyperparametersDTO,
    seed: int,
    gps: bool = False,
    reuse: Optional[TransitionSample] = None,
) -> Tuple[List[NonstationaryPolicy], List[Dict[str, Any]]]:
    """
    Una política de longitud h-1 por recompensa interna, en paralelo. Cada
    tarea deriva sus semillas de (h, i), así que el número de workers no
    cambia el resultado.
    """
    config = hp.psdp_config(seed)

    def solve(i: int, reward: InternalReward) -> Tuple[NonstationaryPolicy, Dict[str, Any]]:
        record: Dict[str, Any] = {"h": h, "i": i, "gps_used": False}
        levels: List[Dict] = []
        try:
            if gps:
                outcome = gps_try(env, covers, reward, h - 1, config, hp.epsilon, hp.gps_episodes, reuse, stream=(algorithm, h, i))
                record.update(outcome.to_record())
                if outcome.accepted:
                    record["gps_used"] = True
                    return outcome.policy, record
            policy = psdp(env, covers, reward, h - 1, config, on_level=levels.append, stream=(algorithm, h, i))
        except KinoPandaError as e:
            raise AlgorithmError(algorithm, e, h=h, i=i) from e
        record["levels"] = levels
        return policy, record

    with ThreadPoolExecutor(max_workers=hp.workers) as pool:
        outcomes = list(pool.map(lambda pair: solve(*pair), enumerate(rewards)))
    return [policy for policy, _ in outcomes], [record for _, record in outcomes]


def final_policy(algorithm: str, env: EnvironmentAccess, covers, hp: HyperparametersDTO, seed: int, levels: List[Dict]) -> NonstationaryPolicy:
    """PSDP sensible a la recompensa externa sobre Ψ_1..Ψ_H"""
    try:
        return psdp(env, covers, ExternalReward(), env.horizon, hp.psdp_config(seed), on_level=levels.append, stream=(algorithm, "final"))
    except KinoPandaError as e:
        raise AlgorithmError(algorithm, e, h=env.horizon, i="final") from e


def level_summary(levels: List[Dict]) -> Dict[str, Any]:
    """Valor estimado en el nivel 1 y cota de PSDP"""
    summary: Dict[str, Any] = {}
    for record in levels:
        if record["level"] == 1:
            summary["estimated_value"] = record["cb_objective"]
        if record["level"] == 0:
            summary["psdp_bound"] = record["psdp_bound"]
    return summary


def emit(metrics: Optional[MetricsSink], event: str, env: EnvironmentAccess, **values) -> None:
    if metrics is not None:
        metrics.emit(event, env.episodes_consumed, **values)


def exp_oracle(
    env: EnvironmentAccess,
    phi_star: Abstraction,
    hp: Optional[HyperparametersDTO] = None,
    seed: int = 0,
    metrics: Optional[MetricsSink] = None,
) -> ExplorationResult:
    """
    Args:
        env: acceso de muestreo
        phi_star: abstracción oráculo backward KI (una por paso)
        hp: tamaños de muestra y oráculo CB
        seed: semilla maestra
        metrics: receptor de registros por iteración
    """
    hp = hp or HyperparametersDTO()
    started = time.time()
    log_operation_start(logger, "exp_oracle", horizon=env.horizon, n_psdp=hp.n_psdp)
    covers: Dict[int, PolicyCover] = {1: PolicyCover(1, [], 1.0)}
    iterations: List[Dict[str, Any]] = []
    try:
        for h in range(2, env.horizon + 1):
            rewards = [make_internal_reward(phi_star, i, h) for i in range(phi_star.capacity(h))]
            policies, records = optimize_internal_rewards("exp_oracle", env, covers, rewards, h, hp, seed)
            covers[h] = PolicyCover(h, policies, COVER_ALPHA)
            iteration = {"h": h, "cover_size": len(policies), "policies": records}
            iterations.append(iteration)
            emit(metrics, "cover", env, h=h, cover_size=len(policies))
        levels: List[Dict] = []
        policy = final_policy("exp_oracle", env, covers, hp, seed, levels)
        iterations.append({"h": "final", "levels": levels})
        emit(metrics, "final_policy", env, **level_summary(levels))
    except Exception as e:
        log_operation_error(logger, "exp_oracle", e)
        raise
    log_operation_success(logger, "exp_oracle", time.time() - started, episodes=env.episodes_consumed)
    return ExplorationResult("exp_oracle", covers, policy, backward=phi_star, iterations=iterations, episodes=env.episodes_consumed)
