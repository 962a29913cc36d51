"""
Comprobación del gradiente manual por diferencias centrales.
"""
from typing import Dict, Optional

import numpy as np

from ..utils.logging_config import get_logger, log_metric
from .network import SOFT, GumbelBottleneckNetwork

logger = get_logger("gradcheck")


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-7)
    return float(np.max(np.abs(analytic - numeric) / scale))


def grad_check(
    network: GumbelBottleneckNetwork,
    x_prev: np.ndarray,
    actions: np.ndarray,
    x_next: np.ndarray,
    labels: np.ndarray,
    eps: float = 1e-5,
    noise: Optional[Dict[str, np.ndarray]] = None,
    mode: str = SOFT,
) -> Dict[str, float]:
    """
    Error relativo máximo por parámetro entre el gradiente analítico y el
    numérico. El ruido Gumbel se fija para que la pérdida sea determinista.
    """
    if noise is None and mode == SOFT:
        noise = network.sample_noise(len(labels), np.random.default_rng(0))
    _, analytic = network.loss_and_grads(x_prev, actions, x_next, labels, noise, mode)
    errors: Dict[str, float] = {}
    for name, value in network.params.items():
        numeric = np.zeros_like(value)
        it = np.nditer(value, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            original = value[idx]
            value[idx] = original + eps
            plus = network.loss(x_prev, actions, x_next, labels, noise, mode)
            value[idx] = original - eps
            minus = network.loss(x_prev, actions, x_next, labels, noise, mode)
            value[idx] = original
            numeric[idx] = (plus - minus) / (2 * eps)
        errors[name] = relative_error(analytic[name], numeric)
    worst = max(errors.values())
    log_metric(logger, "gradcheck_max_relative_error", worst, parameters=len(errors))
    return errors
