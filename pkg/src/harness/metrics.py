"""
Stream de métricas en JSON lines, sin marcas de tiempo: dos ejecuciones con la
misma configuración y backends exactos producen ficheros idénticos byte a byte.
"""
import json
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..utils.db import METRICS_FILE
from ..utils.logging_config import get_logger

logger = get_logger("metrics")


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class MetricsStream:
    """
    Registros {ordinal, event, episodes, metrics} en orden de emisión.

    Args:
        path: fichero destino; None guarda solo en memoria
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self.records: List[Dict[str, Any]] = []
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")

    @classmethod
    def in_run(cls, run_dir: Union[str, Path]) -> "MetricsStream":
        return cls(Path(run_dir) / METRICS_FILE)

    def emit(self, event: str, episodes: int, **metrics: Any) -> Dict[str, Any]:
        with self._lock:
            record = {
                "ordinal": len(self.records),
                "event": event,
                "episodes": int(episodes),
                "metrics": _plain(metrics),
            }
            self.records.append(record)
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
        logger.debug(f"Métrica {event}", extra_data={"ordinal": record["ordinal"], "episodes": record["episodes"]})
        return record

    def last(self, event: str) -> Optional[Dict[str, Any]]:
        for record in reversed(self.records):
            if record["event"] == event:
                return record
        return None


def read_metrics(path: Union[str, Path]) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
