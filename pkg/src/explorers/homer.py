"""
HOMER: aprendizaje conjunto de abstracciones y coberturas.

Para cada h = 2..H:
  1. transiciones reales e impostoras con Unf(Ψ_{h-1}) ∘ Unf(𝒜);
  2. regresor con cuello de botella -> φ̂_B_h (lado x') y φ̂_F_{h-1} (lado x);
  3. una política por índice de φ̂_B_h (GPS si está activo, PSDP si no) -> Ψ_h.
Al final PSDP sobre la recompensa externa. φ̂_B_1 y φ̂_F_H son constantes.
"""
import time
from typing import Any, Dict, List, Optional

import numpy as np

from ..block_mdp.environment import EnvironmentAccess
from ..block_mdp.observations import DISCRETE
from ..oracles.encoders import ConstantEncoder, Encoder
from ..oracles.regression import reg_fit
from ..psdp.cover import PolicyCover
from ..utils.errors import AlgorithmError, KinoPandaError
from ..utils.logging_config import (
    get_logger,
    log_metric,
    log_operation_error,
    log_operation_start,
    log_operation_success,
    log_validation_warning,
)
from ..utils.seeding import derive_child_seed
from .abstraction import LEARNED, Abstraction
from .contrastive import build_contrastive_dataset
from .dto import HyperparametersDTO
from .exp_oracle import COVER_ALPHA, MetricsSink, emit, final_policy, level_summary, optimize_internal_rewards
from .result import ExplorationResult
from .rewards import InternalReward

logger = get_logger("homer")


def feature_width(env: EnvironmentAccess, h: int) -> int:
    """Alfabeto del paso h (discretas) o dimensión de la observación"""
    return env.n_observations(h) if env.payload_kind == DISCRETE else env.observation_dim


def homer(
    env: EnvironmentAccess,
    hp: Optional[HyperparametersDTO] = None,
    seed: int = 0,
    metrics: Optional[MetricsSink] = None,
) -> ExplorationResult:
    """
    Args:
        env: acceso de muestreo
        hp: N, M, tamaños de muestra, backend de REG, GPS e impostoras
        seed: semilla maestra
        metrics: receptor de registros por iteración

    Raises:
        AlgorithmError: fallo de REG o de PSDP con el paso (y el índice) donde ocurrió
    """
    hp = hp or HyperparametersDTO()
    H = env.horizon
    started = time.time()
    log_operation_start(logger, "homer", horizon=H, N=hp.N, M=hp.M, n_reg=hp.n_reg, gps=hp.gps)
    covers: Dict[int, PolicyCover] = {1: PolicyCover(1, [], 1.0)}
    forward: Dict[int, Encoder] = {H: ConstantEncoder()}
    backward: Dict[int, Encoder] = {1: ConstantEncoder()}
    iterations: List[Dict[str, Any]] = []
    degenerate: List[int] = []
    try:
        for h in range(2, H + 1):
            dataset, real = build_contrastive_dataset(
                env,
                covers[h - 1].policies,
                h,
                hp.n_reg,
                hp.imposter_mode,
                hp.recycle,
                seed=derive_child_seed(seed, "contrastive", h),
            )
            try:
                regressor, report = reg_fit(
                    dataset,
                    hp.N,
                    hp.M,
                    hp.reg,
                    widths=(feature_width(env, h - 1), feature_width(env, h)),
                    seed=derive_child_seed(seed, "reg", h),
                )
            except KinoPandaError as e:
                raise AlgorithmError("homer", e, h=h, i="reg") from e
            backward[h] = regressor.backward
            forward[h - 1] = regressor.forward
            used = np.unique(regressor.backward.encode(dataset.next))
            if len(used) < 2:
                degenerate.append(h)
                log_validation_warning(logger, f"phi_B[{h}]", "abstracción constante; todas las recompensas internas coinciden")
            log_metric(logger, "reg_final_val_loss", report.final_val_loss, h=h)

            rewards = [InternalReward(regressor.backward, i, h) for i in range(regressor.backward.capacity)]
            policies, records = optimize_internal_rewards("homer", env, covers, rewards, h, hp, seed, gps=hp.gps, reuse=real)
            covers[h] = PolicyCover(h, policies, COVER_ALPHA)
            gps_used = sum(1 for r in records if r["gps_used"])
            iterations.append(
                {
                    "h": h,
                    "dataset_size": len(dataset),
                    "reg": report.to_record(),
                    "backward_indices_used": int(len(used)),
                    "cover_size": len(policies),
                    "gps_used": gps_used,
                    "policies": records,
                }
            )
            emit(
                metrics,
                "iteration",
                env,
                h=h,
                dataset_size=len(dataset),
                reg_val_loss=report.final_val_loss,
                reg_epochs=len(report.train_losses),
                backward_indices_used=int(len(used)),
                gps_used=gps_used,
            )
        levels: List[Dict] = []
        policy = final_policy("homer", env, covers, hp, seed, levels)
        iterations.append({"h": "final", "levels": levels})
        emit(metrics, "final_policy", env, **level_summary(levels))
    except Exception as e:
        log_operation_error(logger, "homer", e)
        raise
    log_operation_success(logger, "homer", time.time() - started, episodes=env.episodes_consumed, degenerate=degenerate)
    return ExplorationResult(
        "homer",
        covers,
        policy,
        forward=Abstraction(forward, LEARNED),
        backward=Abstraction(backward, LEARNED),
        iterations=iterations,
        episodes=env.episodes_consumed,
        flags={"degenerate_steps": degenerate, "N": hp.N, "M": hp.M, "eta": hp.eta},
    )
