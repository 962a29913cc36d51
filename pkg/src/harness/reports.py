"""
Informes de una ejecución: summary.json (máquina), summary.txt (tabla legible)
y trazas de visitación para graficar fuera del repositorio.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import numpy as np
import pandas as pd

from ..block_mdp.policies import NonstationaryPolicy
from ..block_mdp.sampling import latent_counts
from ..explorers.result import ExplorationResult
from ..utils.db import episodes_by_event
from ..utils.logging_config import get_logger, log_data_loaded

logger = get_logger("reports")

PathLike = Union[str, Path]
SUMMARY_JSON = "summary.json"
SUMMARY_TXT = "summary.txt"
ERROR_RECORD = "error.json"


def trace_policies(result: ExplorationResult) -> List[NonstationaryPolicy]:
    """Políticas de todas las coberturas más la política final"""
    return result.cover_policies() + [result.policy]


def visitation_trace(mdp, result: ExplorationResult, n: int, seed: int = 0) -> pd.DataFrame:
    """
    Conteos por estado latente en n episodios de ejecución y el peso de
    visualización ln(count + 1).

    Cada episodio elige uniformemente una política de las coberturas o la
    final y la completa con acciones uniformes hasta H.
    """
    counts = latent_counts(mdp, trace_policies(result), n, seed)
    rows = []
    for h in range(1, mdp.horizon + 1):
        for s, name in enumerate(mdp.state_names(h)):
            count = int(counts[h - 1][s])
            rows.append({"h": h, "state": name, "count": count, "weight": float(np.log(count + 1))})
    frame = pd.DataFrame(rows, columns=["h", "state", "count", "weight"])
    log_data_loaded(logger, "traza de visitación", n, states=len(frame))
    return frame


def _flatten(summary: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in summary.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, (list, tuple)):
            flat[name] = json.dumps(value, default=float)
        else:
            flat[name] = value
    return flat


def summary_frame(summary: Mapping[str, Any]) -> pd.DataFrame:
    """Resumen como tabla clave/valor"""
    flat = _flatten(summary)
    return pd.DataFrame({"key": list(flat.keys()), "value": [str(v) for v in flat.values()]})


def write_summary(
    run_dir: PathLike,
    summary: Mapping[str, Any],
    tables: Optional[Mapping[str, pd.DataFrame]] = None,
) -> Path:
    """
    Escribir summary.json y summary.txt; cada tabla adicional va a <nombre>.csv.

    El texto incluye los episodios por tipo de evento calculados con duckdb
    sobre el stream de métricas.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / SUMMARY_JSON, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)
    sections = ["Resumen", summary_frame(summary).to_string(index=False)]
    events = episodes_by_event(run_dir)
    if len(events):
        sections += ["", "Eventos de métricas", events.to_string(index=False)]
    for name, frame in (tables or {}).items():
        frame.to_csv(run_dir / f"{name}.csv", index=False)
        sections += ["", name, frame.to_string(index=False)]
    (run_dir / SUMMARY_TXT).write_text("\n".join(sections) + "\n", encoding="utf-8")
    return run_dir / SUMMARY_JSON


def write_error_record(run_dir: PathLike, error: Exception) -> Path:
    """error.json con el tipo, el mensaje y el contexto de iteración si lo hay"""
    record: Dict[str, Any] = {"type": type(error).__name__, "message": str(error)}
    context = getattr(error, "context", None)
    if context:
        record["context"] = {k: str(v) if not isinstance(v, (int, float)) else v for k, v in context.items()}
    cause = getattr(error, "cause", None)
    if cause is not None:
        record["cause"] = {"type": type(cause).__name__, "message": str(cause)}
    path = Path(run_dir) / ERROR_RECORD
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
    return path


def load_summary(run_dir: PathLike) -> Dict[str, Any]:
    with open(Path(run_dir) / SUMMARY_JSON, "r", encoding="utf-8") as fh:
        return json.load(fh)
