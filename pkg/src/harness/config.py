"""
Carga y resolución de ficheros de experimento (YAML -> ExperimentConfigDTO).
"""
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import ValidationError

from ..utils.errors import ConfigurationError
from ..utils.logging_config import get_logger, log_configuration_loaded
from .dto import ExperimentConfigDTO

logger = get_logger("harness_config")

PathLike = Union[str, Path]
OUTPUT_ROOT_ENV = "KINOPANDA_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "runs"
RESOLVED_CONFIG = "config.resolved.yaml"


def validation_error(error: ValidationError) -> ConfigurationError:
    """Primer error de pydantic como ConfigurationError con la ruta del campo"""
    first = error.errors()[0]
    field_path = ".".join(str(part) for part in first["loc"])
    return ConfigurationError(first["msg"], field_path=field_path or None)


def parse_config(document: Optional[Dict[str, Any]]) -> ExperimentConfigDTO:
    try:
        return ExperimentConfigDTO.model_validate(document or {})
    except ValidationError as e:
        raise validation_error(e) from e


def load_config(path: PathLike, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfigDTO:
    """
    Leer un experimento YAML.

    Args:
        path: fichero YAML
        overrides: claves de primer nivel que sustituyen a las del fichero (p.ej. seed)

    Raises:
        ConfigurationError: fichero ausente, YAML inválido o campo fuera de esquema
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"No existe el fichero de configuración {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = yaml.safe_load(fh) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"YAML inválido en {path}: {e}") from e
    if not isinstance(document, dict):
        raise ConfigurationError(f"{path} debe contener un mapa YAML")
    document.update({k: v for k, v in (overrides or {}).items() if v is not None})
    config = parse_config(document)
    log_configuration_loaded(
        logger,
        "de experimento",
        path=str(path),
        algorithm=config.algorithm.value,
        environment=config.environment.kind.value,
        seed=config.seed,
    )
    return config


def config_document(config: ExperimentConfigDTO) -> Dict[str, Any]:
    """Documento serializable (enums como valores)"""
    return config.model_dump(mode="json")


def save_resolved(config: ExperimentConfigDTO, run_dir: PathLike) -> Path:
    path = Path(run_dir) / RESOLVED_CONFIG
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_document(config), fh, sort_keys=True, allow_unicode=True)
    return path


def output_root(config: Optional[ExperimentConfigDTO] = None) -> Path:
    """output_dir del experimento, o KINOPANDA_OUTPUT_ROOT, o ./runs"""
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(os.getenv(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT))


def run_directory(config: ExperimentConfigDTO) -> Path:
    """Directorio determinista de la ejecución: <raíz>/<nombre>-seed<semilla>"""
    return output_root(config) / f"{config.name}-seed{config.seed}"
