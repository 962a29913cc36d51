"""
Pruebas del sistema de logging de KinoPanda: contexto estructurado, helpers
de operación y niveles.
"""
import pytest

from src.utils.logging_config import (
    StructuredLogger,
    get_logger,
    log_configuration_loaded,
    log_data_loaded,
    log_metric,
    log_operation_error,
    log_operation_start,
    log_operation_success,
    log_training_epoch,
    log_validation_warning,
    setup_logging,
)


@pytest.fixture
def log_file(tmp_path):
    path = tmp_path / "logs" / "kinopanda.log"
    setup_logging(level="INFO", log_file=str(path), console_output=False)
    yield path
    setup_logging(console_output=False)


def read(path):
    return path.read_text(encoding="utf-8")


def test_structured_context(log_file):
    logger = StructuredLogger("test_structured")
    logger.add_context(h=2, algorithm="homer")
    logger.info("Iteración resuelta", extra_data={"i": 1})
    logger.clear_context()
    logger.info("Contexto limpiado")
    text = read(log_file)
    assert 'Iteración resuelta | Context: {"algorithm": "homer", "h": 2, "i": 1}' in text
    assert text.rstrip().endswith("Contexto limpiado")
    assert "kinopanda.test_structured" in text


def test_bound_context_is_restored(log_file):
    logger = get_logger("test_bound")
    logger.add_context(run="r1")
    with logger.bound(h=3):
        logger.info("dentro")
    logger.info("fuera")
    lines = read(log_file).splitlines()
    assert '{"h": 3, "run": "r1"}' in lines[0]
    assert '{"run": "r1"}' in lines[1]


def test_operation_helpers(log_file):
    logger = get_logger("test_helpers")
    log_operation_start(logger, "psdp", h=2)
    log_operation_success(logger, "psdp", duration=1.5, bound=0.1)
    log_data_loaded(logger, "dataset CB", 500, level=2)
    log_metric(logger, "gps_value", 0.123456789)
    log_configuration_loaded(logger, "de experimento", seed=0)
    log_validation_warning(logger, "cover[3]", "no es una α-cobertura")
    text = read(log_file)
    assert "[START] Iniciando psdp" in text
    assert "[SUCCESS] psdp completado en 1.50s" in text
    assert "[DATA] dataset CB: 500 registros" in text
    assert "[METRIC] gps_value=0.123457" in text
    assert "[CONFIG] Configuración de experimento cargada" in text
    assert "[VALID] cover[3]: no es una α-cobertura" in text


def test_errors_carry_traceback(log_file):
    logger = get_logger("test_errors")
    try:
        raise RuntimeError("fallo simulado")
    except RuntimeError as e:
        log_operation_error(logger, "homer", e, h=4)
    text = read(log_file)
    assert "[ERROR] Error en homer: fallo simulado" in text
    assert "Traceback" in text


def test_debug_is_filtered_at_info(log_file):
    logger = get_logger("test_levels")
    log_training_epoch(logger, "reg", 1, 0.5, 0.6)
    logger.info("visible")
    text = read(log_file)
    assert "[TRAIN]" not in text
    assert "visible" in text


def test_debug_level_uses_detailed_format(tmp_path):
    path = tmp_path / "debug.log"
    setup_logging(level="DEBUG", log_file=str(path), console_output=False)
    try:
        log_training_epoch(get_logger("test_debug"), "reg", 3, 0.25, 0.5)
        text = read(path)
        assert "[TRAIN] reg época 3: train=0.250000 val=0.500000" in text
        line = next(entry for entry in text.splitlines() if "[TRAIN]" in entry)
        assert line.count(" | ") == 4
    finally:
        setup_logging(console_output=False)
