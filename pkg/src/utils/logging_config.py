"""
Sistema de logging estructurado de KinoPanda.

Todos los módulos obtienen su logger con ``get_logger("<modulo>")`` y
registran las operaciones largas (PSDP, HOMER, ajuste de regresores,
ejecuciones completas) con las etiquetas ``[START]``/``[SUCCESS]``/``[ERROR]``.
Los logs llevan marcas de tiempo y no forman parte del contrato de
determinismo; ese papel lo cumplen los streams de métricas.
"""
import json
import logging
import logging.config
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

LOGGER_NAMESPACE = "kinopanda"
DEFAULT_LEVEL_ENV = "KINOPANDA_LOG_LEVEL"


class KinoPandaFormatter(logging.Formatter):
    """Formatter con formato detallado para DEBUG y ERROR"""

    base_format = "%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s"
    detailed_format = (
        "%(asctime)s | %(levelname)-8s | %(name)-20s | %(funcName)-15s:%(lineno)-4d | %(message)s"
    )

    def __init__(self):
        super().__init__()
        self._base = logging.Formatter(self.base_format)
        self._detailed = logging.Formatter(self.detailed_format)

    def format(self, record):
        if record.levelno in (logging.DEBUG, logging.ERROR):
            return self._detailed.format(record)
        return self._base.format(record)


class StructuredLogger:
    """Logger estructurado con contexto persistente y datos adicionales por mensaje"""

    def __init__(self, name: str, level: Optional[str] = None):
        self.logger = logging.getLogger(f"{LOGGER_NAMESPACE}.{name}")
        if level:
            self.logger.setLevel(getattr(logging, level.upper()))
        self.context: Dict[str, Any] = {}

    def add_context(self, **kwargs):
        """Añadir contexto persistente al logger"""
        self.context.update(kwargs)

    def clear_context(self):
        """Limpiar contexto"""
        self.context.clear()

    @contextmanager
    def bound(self, **kwargs) -> Iterator["StructuredLogger"]:
        """Contexto temporal (p. ej. ``h`` e ``i`` de una iteración)"""
        previous = dict(self.context)
        self.context.update(kwargs)
        try:
            yield self
        finally:
            self.context = previous

    def _render(self, message: str, extra_data: Optional[Dict[str, Any]]) -> str:
        fields = {**self.context, **(extra_data or {})}
        if not fields:
            return message
        return f"{message} | Context: {json.dumps(fields, default=str, sort_keys=True)}"

    def _emit(self, level: int, message: str, extra_data: Optional[Dict[str, Any]], exc_info: bool = False):
        if self.logger.isEnabledFor(level):
            self.logger.log(level, self._render(message, extra_data), exc_info=exc_info, stacklevel=3)

    def debug(self, message: str, extra_data: Optional[Dict[str, Any]] = None):
        self._emit(logging.DEBUG, message, extra_data)

    def info(self, message: str, extra_data: Optional[Dict[str, Any]] = None):
        self._emit(logging.INFO, message, extra_data)

    def warning(self, message: str, extra_data: Optional[Dict[str, Any]] = None):
        self._emit(logging.WARNING, message, extra_data)

    def error(self, message: str, extra_data: Optional[Dict[str, Any]] = None, exc_info: bool = False):
        self._emit(logging.ERROR, message, extra_data, exc_info)


def setup_logging(
    level: Optional[str] = None,
    log_file: Optional[str] = None,
    console_output: bool = True,
    structured: bool = True,
) -> None:
    """
    Configurar el sistema de logging

    Args:
        level: Nivel de logging; por defecto ``KINOPANDA_LOG_LEVEL`` o INFO
        log_file: Archivo de log rotativo (opcional)
        console_output: Mostrar logs en consola (stderr, para no mezclar con informes)
        structured: Usar el formatter de KinoPanda
    """
    level = (level or os.getenv(DEFAULT_LEVEL_ENV, "INFO")).upper()
    formatter = "kinopanda" if structured else "simple"

    handlers: Dict[str, Dict[str, Any]] = {}
    if console_output:
        handlers["console"] = {
            "class": "logging.StreamHandler",
            "level": level,
            "formatter": formatter,
            "stream": sys.stderr,
        }
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": level,
            "formatter": formatter,
            "filename": str(log_path),
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
        }

    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "kinopanda": {"()": KinoPandaFormatter},
                "simple": {"format": "%(levelname)s | %(name)s | %(message)s"},
            },
            "handlers": handlers,
            "loggers": {
                LOGGER_NAMESPACE: {"level": level, "handlers": list(handlers), "propagate": False},
            },
        }
    )


def get_logger(name: str, structured: bool = True):
    """
    Obtener logger configurado

    Args:
        name: Nombre corto del módulo (se cuelga de ``kinopanda.``)
        structured: Devolver ``StructuredLogger`` en lugar de ``logging.Logger``
    """
    if structured:
        return StructuredLogger(name)
    return logging.getLogger(f"{LOGGER_NAMESPACE}.{name}")


# Funciones helper para logging común
def log_operation_start(logger: StructuredLogger, operation: str, **context):
    """Log de inicio de operación"""
    logger.info(f"[START] Iniciando {operation}", extra_data=context)


def log_operation_success(logger: StructuredLogger, operation: str, duration: Optional[float] = None, **context):
    """Log de operación exitosa"""
    message = f"[SUCCESS] {operation} completado"
    if duration is not None:
        message += f" en {duration:.2f}s"
    logger.info(message, extra_data=context)


def log_operation_error(logger: StructuredLogger, operation: str, error: Exception, **context):
    """Log de error en operación"""
    logger.error(f"[ERROR] Error en {operation}: {error}", extra_data=context, exc_info=True)


def log_data_loaded(logger: StructuredLogger, data_type: str, count: int, **context):
    """Log de datasets construidos o cargados"""
    logger.info(f"[DATA] {data_type}: {count} registros", extra_data=context)


def log_performance_warning(logger: StructuredLogger, operation: str, duration: float, threshold: float = 60.0):
    """Log de advertencia de rendimiento"""
    if duration > threshold:
        logger.warning(f"[PERF] {operation} tardó {duration:.2f}s (umbral: {threshold}s)")


def log_training_epoch(logger: StructuredLogger, model: str, epoch: int, train_loss: float, val_loss: float, **context):
    """Log de una época de entrenamiento (nivel DEBUG)"""
    logger.debug(
        f"[TRAIN] {model} época {epoch}: train={train_loss:.6f} val={val_loss:.6f}",
        extra_data=context,
    )


def log_metric(logger: StructuredLogger, name: str, value: float, **context):
    """Log de una métrica escalar"""
    logger.info(f"[METRIC] {name}={value:.6g}", extra_data=context)


def log_database_operation(logger: StructuredLogger, operation: str, table: str, affected_rows: Optional[int] = None, **context):
    """Log de operación sobre duckdb"""
    message = f"[DB] {operation}: {table}"
    if affected_rows is not None:
        message += f" ({affected_rows} filas)"
    logger.info(message, extra_data=context)


def log_validation_warning(logger: StructuredLogger, field: str, issue: str, **context):
    """Log de advertencia de validación"""
    logger.warning(f"[VALID] {field}: {issue}", extra_data=context)


def log_configuration_loaded(logger: StructuredLogger, config_type: str, **context):
    """Log de configuración cargada"""
    logger.info(f"[CONFIG] Configuración {config_type} cargada", extra_data=context)


def log_cleanup_operation(logger: StructuredLogger, resource: str, **context):
    """Log de operación de limpieza"""
    logger.info(f"[CLEANUP] Limpieza {resource}", extra_data=context)
