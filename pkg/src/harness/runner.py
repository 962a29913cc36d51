"""
Ejecución de experimentos: un directorio por invocación con la configuración
resuelta, el stream de métricas, los artefactos y el resumen.
"""
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..explorers.result import ExplorationResult
from ..utils.errors import ConfigurationError
from ..utils.logging_config import (
    get_logger,
    log_cleanup_operation,
    log_metric,
    log_operation_error,
    log_operation_start,
    log_operation_success,
)
from .config import RESOLVED_CONFIG, load_config, run_directory, save_resolved
from .dto import AlgorithmType, ExperimentConfigDTO
from .metrics import MetricsStream
from .reports import ERROR_RECORD, write_error_record, write_summary
from .strategies import RunContext, StrategyOutcome, build_environment, environment_summary, strategy_for

logger = get_logger("runner")

PLATEAU_TOL = 1e-3
MAX_ROUNDS = 4


def run(config: ExperimentConfigDTO, run_dir: Optional[Path] = None) -> Tuple[Path, StrategyOutcome]:
    """
    Ejecutar un experimento completo.

    Args:
        config: experimento validado
        run_dir: directorio destino; por defecto <raíz de salida>/<nombre>-seed<semilla>

    Returns:
        (directorio de la ejecución, resultado de la estrategia)

    Raises:
        KinoPandaError: tras escribir error.json junto a los artefactos parciales
    """
    run_dir = Path(run_dir) if run_dir is not None else run_directory(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    log_operation_start(logger, "ejecución", algorithm=config.algorithm.value, run_dir=str(run_dir), seed=config.seed)
    stale = run_dir / ERROR_RECORD
    if stale.exists():
        stale.unlink()
        log_cleanup_operation(logger, "del error de una ejecución anterior", path=str(stale))
    save_resolved(config, run_dir)
    metrics = MetricsStream.in_run(run_dir)
    try:
        mdp = build_environment(config.environment, config.env_seed)
        context = RunContext(config, mdp, run_dir, metrics)
        outcome = strategy_for(config.algorithm).execute(context)
        summary = {
            "status": "completed",
            "name": config.name,
            "seed": config.seed,
            "environment": environment_summary(mdp),
            "result": outcome.summary,
        }
        write_summary(run_dir, summary, outcome.tables)
    except Exception as e:
        write_error_record(run_dir, e)
        write_summary(run_dir, {"status": "failed", "name": config.name, "seed": config.seed, "error": str(e)})
        log_operation_error(logger, "ejecución", e, run_dir=str(run_dir))
        raise
    log_operation_success(logger, "ejecución", time.time() - started, run_dir=str(run_dir))
    return run_dir, outcome


def load_run(run_dir: Path) -> Tuple[ExperimentConfigDTO, Any, ExplorationResult]:
    """Configuración resuelta, entorno reconstruido y resultado guardado de una ejecución"""
    run_dir = Path(run_dir)
    config = load_config(run_dir / RESOLVED_CONFIG)
    artifacts = run_dir / "artifacts"
    if not artifacts.exists():
        raise ConfigurationError(f"La ejecución {run_dir} no tiene artefactos de exploración", field_path="run")
    return config, build_environment(config.environment, config.env_seed), ExplorationResult.load(artifacts)


def mean_validation_loss(result: ExplorationResult) -> Optional[float]:
    """Media de la pérdida de validación final de REG sobre los pasos de HOMER"""
    losses = [
        record["reg"]["final_val_loss"]
        for record in result.iterations
        if isinstance(record.get("h"), int) and record.get("reg", {}).get("final_val_loss") is not None
    ]
    return float(np.mean(losses)) if losses else None


def restart_homer(
    config: ExperimentConfigDTO,
    run_dir: Optional[Path] = None,
    tol: float = PLATEAU_TOL,
    max_rounds: int = MAX_ROUNDS,
) -> Tuple[Path, pd.DataFrame]:
    """
    Repetir HOMER doblando N y dividiendo η a la mitad en cada ronda hasta que
    la pérdida de validación media mejore menos de tol o se agoten las rondas.

    Cada ronda se guarda en round_<k>/ dentro del directorio de la ejecución.
    """
    if config.algorithm != AlgorithmType.HOMER:
        raise ConfigurationError("El bucle de reinicios solo admite homer", field_path="algorithm")
    if max_rounds < 1:
        raise ConfigurationError("max_rounds debe ser positivo", field_path="max_rounds")
    run_dir = Path(run_dir) if run_dir is not None else run_directory(config)
    log_operation_start(logger, "reinicios de homer", N=config.hyperparameters.N, eta=config.hyperparameters.eta, max_rounds=max_rounds)
    rows: List[Dict[str, Any]] = []
    previous: Optional[float] = None
    hp = config.hyperparameters
    started = time.time()
    for k in range(max_rounds):
        round_config = config.model_copy(update={"hyperparameters": hp})
        round_dir, outcome = run(round_config, run_dir / f"round_{k}")
        loss = mean_validation_loss(outcome.result)
        rows.append(
            {
                "round": k,
                "N": hp.N,
                "eta": hp.eta,
                "mean_val_loss": loss,
                "value": outcome.summary.get("value"),
                "episodes": outcome.summary.get("episodes"),
                "run_dir": str(round_dir),
            }
        )
        if loss is None:
            break
        log_metric(logger, "restart_mean_val_loss", loss, round=k, N=hp.N)
        if previous is not None and previous - loss < tol:
            break
        previous = loss
        hp = hp.model_copy(update={"N": hp.N * 2, "eta": hp.eta / 2})
    frame = pd.DataFrame(rows, columns=["round", "N", "eta", "mean_val_loss", "value", "episodes", "run_dir"])
    write_summary(run_dir, {"status": "completed", "name": config.name, "rounds": len(frame)}, {"rounds": frame})
    log_operation_success(logger, "reinicios de homer", time.time() - started, rounds=len(frame))
    return run_dir, frame
