"""
Tamaños de muestra de la teoría (diagnóstico; nunca se imponen).
"""
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from ..utils.errors import ConfigurationError


class SizeVariant(str, Enum):
    HOMER = "homer"
    EXP_ORACLE = "exp_oracle"


@dataclass(frozen=True)
class TheorySizes:
    n_psdp: float
    n_reg: float
    n_eval: float
    variant: str

    def to_record(self) -> dict:
        return asdict(self)


def theory_sample_sizes(
    N: int,
    H: int,
    n_actions: int,
    eta: float,
    epsilon: float,
    delta: float,
    n_policies: float,
    n_abstractions: float = 1.0,
    variant: SizeVariant = SizeVariant.HOMER,
) -> TheorySizes:
    """
    (n_psdp, n_reg, n_eval) para HOMER o para ExpOracle.

    HOMER:
        n_psdp = 32²N⁴H²|A|·ln(4NH²|Π|/δ)/η²
        n_eval = 64N²H²|A|·ln(3H|Π|/δ)/ε²
        n_reg  = 512²N⁶|A|³/η³·(N²|A|·ln(512²N⁸|A|⁴/η³) + ln|Φ_N| + ln(6H/δ))
    ExpOracle (sin REG):
        n_psdp = 256N⁴H²|A|·ln(2|Π|/δ)/η²
        n_eval = 64N²H²|A|·ln(2|Π|/δ)/ε²
    """
    values = {"N": N, "H": H, "n_actions": n_actions, "eta": eta, "epsilon": epsilon, "delta": delta, "n_policies": n_policies}
    for name, value in values.items():
        if value <= 0:
            raise ConfigurationError("debe ser positivo", field_path=name)
    A = float(n_actions)
    N, H = float(N), float(H)
    log_pi = np.log(float(n_policies))
    if SizeVariant(variant) == SizeVariant.EXP_ORACLE:
        n_psdp = 256.0 * N**4 * H**2 * A * (np.log(2.0 / delta) + log_pi) / eta**2
        n_eval = 64.0 * N**2 * H**2 * A * (np.log(2.0 / delta) + log_pi) / epsilon**2
        return TheorySizes(float(n_psdp), 0.0, float(n_eval), SizeVariant.EXP_ORACLE.value)
    n_psdp = 32.0**2 * N**4 * H**2 * A * np.log(4.0 * N * H**2 * n_policies / delta) / eta**2
    n_eval = 64.0 * N**2 * H**2 * A * np.log(3.0 * H * n_policies / delta) / epsilon**2
    n_reg = (
        512.0**2 * N**6 * A**3 / eta**3
        * (N**2 * A * np.log(512.0**2 * N**8 * A**4 / eta**3) + np.log(n_abstractions) + np.log(6.0 * H / delta))
    )
    return TheorySizes(float(n_psdp), float(n_reg), float(n_eval), SizeVariant.HOMER.value)
