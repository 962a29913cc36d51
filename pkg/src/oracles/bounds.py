"""
Cotas de concentración usadas por los oráculos y por PSDP.

Todas devuelven semianchos o excesos de riesgo; ``n`` es el tamaño del
dataset. Los tamaños de clase se pasan en logaritmo (ln|Π|, ln|Φ_N|).
"""
import numpy as np


def hoeffding_band(n: int, delta: float, width: float = 1.0) -> float:
    """Semiancho width·sqrt(ln(2/δ) / (2n)) para variables en un intervalo de ancho ``width``"""
    if n <= 0:
        return float("inf")
    return float(width * np.sqrt(np.log(2.0 / delta) / (2.0 * n)))


def csc_band(n: int, n_actions: int, log_policies: float, delta: float) -> float:
    """Δ_csc = 4·sqrt(|A|/n · ln(2|Π|/δ)), desviación uniforme del objetivo IW"""
    if n <= 0:
        return float("inf")
    return float(4.0 * np.sqrt(n_actions / n * (np.log(2.0 / delta) + log_policies)))


def bernstein_band(n: int, n_actions: int, log_policies: float, delta: float) -> float:
    """2|A|/(3n)·ln(2|Π|/δ) + sqrt(2|A|/n·ln(2|Π|/δ))"""
    if n <= 0:
        return float("inf")
    log_term = np.log(2.0 / delta) + log_policies
    return float(2.0 * n_actions / (3.0 * n) * log_term + np.sqrt(2.0 * n_actions / n * log_term))


def reg_excess_risk_bound(n: int, capacity: int, n_actions: int, log_abstractions: float, delta: float) -> float:
    """Δ_reg = 16(ln|Φ_N| + N²|A|·ln n + ln(2/δ)) / n"""
    if n <= 1:
        return float("inf")
    return float(16.0 * (log_abstractions + capacity**2 * n_actions * np.log(n) + np.log(2.0 / delta)) / n)


def psdp_bound(capacity: int, h: int, n: int, n_actions: int, log_policies: float, delta: float, alpha: float) -> float:
    """Garantía de PSDP: N·h·Δ_csc/α"""
    return float(capacity * h * csc_band(n, n_actions, log_policies, delta) / alpha)
