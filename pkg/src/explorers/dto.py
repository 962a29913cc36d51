from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from ..oracles.dto import CBBackend, CBConfigDTO, RegConfigDTO
from ..psdp.psdp import PolicyClassKind, PsdpConfig


class ImposterMode(str, Enum):
    """Impostoras por remuestreo dentro del conjunto o con dos roll-outs independientes"""

    RESAMPLE = "resample"
    LITERAL = "literal"


class HyperparametersDTO(BaseModel):
    """Hiperparámetros de los exploradores (valores por defecto de la receta de HOMER)"""

    N: int = Field(default=2, ge=1)
    M: int = Field(default=3, ge=1)
    eta: float = Field(default=0.5, gt=0.0, le=1.0)
    epsilon: float = Field(default=0.1, gt=0.0)
    delta: float = Field(default=0.1, gt=0.0, lt=1.0)
    n_psdp: int = Field(default=20_000, ge=1)
    n_reg: int = Field(default=10_000, ge=1)
    gps: bool = True
    gps_episodes: int = Field(default=2_000, ge=1)
    imposter_mode: ImposterMode = ImposterMode.RESAMPLE
    recycle: bool = False
    workers: int = Field(default=4, ge=1)
    policy_class: PolicyClassKind = PolicyClassKind.AUTO
    cb_backend: Optional[CBBackend] = None
    cb: CBConfigDTO = Field(default_factory=CBConfigDTO)
    reg: RegConfigDTO = Field(default_factory=RegConfigDTO)

    def psdp_config(self, seed: int) -> PsdpConfig:
        return PsdpConfig(
            n=self.n_psdp,
            capacity=self.N,
            policy_class=self.policy_class,
            backend=self.cb_backend,
            cb=self.cb,
            seed=seed,
            delta=self.delta,
        )
