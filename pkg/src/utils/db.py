from pathlib import Path
from typing import Optional

import duckdb
import pandas as pd

from .logging_config import get_logger, log_database_operation, log_operation_error

# Configurar logger
logger = get_logger("database")

METRICS_FILE = "metrics.jsonl"


def get_connection(database: Optional[Path] = None) -> duckdb.DuckDBPyConnection:
    """Conexión duckdb (en memoria por defecto) con logging"""
    target = str(database) if database else ":memory:"
    try:
        connection = duckdb.connect(database=target, read_only=False)
        log_database_operation(logger, "conectar", target)
        return connection
    except Exception as e:
        log_operation_error(logger, "conexión a duckdb", e, database=target)
        raise


def query_metrics(run_dir: Path, sql: str) -> pd.DataFrame:
    """
    Ejecutar SQL sobre el stream de métricas de una ejecución.

    El stream se expone como la vista ``metrics``.
    """
    metrics_path = Path(run_dir) / METRICS_FILE
    connection = get_connection()
    try:
        if metrics_path.exists() and metrics_path.stat().st_size > 0:
            source = str(metrics_path).replace("'", "''")
            connection.execute(
                f"CREATE VIEW metrics AS SELECT * FROM read_json_auto('{source}', format='newline_delimited')"
            )
        else:
            connection.execute(
                "CREATE TABLE metrics (ordinal BIGINT, event VARCHAR, episodes BIGINT, metrics JSON)"
            )
        frame = connection.execute(sql).df()
        log_database_operation(logger, "consulta de métricas", str(metrics_path), affected_rows=len(frame))
        return frame
    finally:
        connection.close()


def episodes_by_event(run_dir: Path) -> pd.DataFrame:
    """Episodios consumidos y número de registros por tipo de evento"""
    return query_metrics(
        run_dir,
        """
        SELECT event, COUNT(*) AS records, MAX(episodes) AS episodes_at_end
        FROM metrics
        GROUP BY event
        ORDER BY MIN(ordinal)
        """,
    )
