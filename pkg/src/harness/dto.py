from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..explorers.dto import HyperparametersDTO
from ..kinematics.enumeration import DEFAULT_BUDGET
from ..kinematics.partition import DEFAULT_TOL

# =============================================================================
# SELECTORES
# =============================================================================


class AlgorithmType(str, Enum):
    """Algoritmos ejecutables desde un fichero de experimento"""

    HOMER = "homer"
    EXP_ORACLE = "exp_oracle"
    PSDP_ONLY = "psdp-only"
    KI_ANALYZE = "ki-analyze"
    CANONICALIZE = "canonicalize"
    COUNTEREXAMPLE_REPORT = "counterexample-report"


class EnvironmentKind(str, Enum):
    """Entornos disponibles"""

    COMBOLOCK = "combolock"
    FIG1_LEFT = "fig1-left"
    FIG1_RIGHT = "fig1-right"
    FIG4A = "fig4a"
    FIG4B = "fig4b"
    NOISY_BITS = "noisy-bits"
    RANDOM = "random"
    FILE = "file"


# =============================================================================
# DTOs DE EXPERIMENTO
# =============================================================================


class EnvironmentConfigDTO(BaseModel):
    """Entorno y parámetros de su constructor (H, K, depth, d, state_prob, ...)"""

    model_config = ConfigDict(extra="forbid")

    kind: EnvironmentKind = EnvironmentKind.COMBOLOCK
    params: Dict[str, Any] = Field(default_factory=dict)
    path: Optional[str] = None

    @model_validator(mode="after")
    def _file_needs_path(self) -> "EnvironmentConfigDTO":
        if self.kind == EnvironmentKind.FILE and not self.path:
            raise ValueError("el entorno 'file' requiere 'path'")
        return self


class BudgetDTO(BaseModel):
    """Presupuestos de episodios y de enumeración"""

    model_config = ConfigDict(extra="forbid")

    max_episodes: Optional[int] = Field(default=None, ge=1)
    enumeration: int = Field(default=DEFAULT_BUDGET, ge=1)


class EvaluationDTO(BaseModel):
    """Evaluación posterior a la exploración"""

    model_config = ConfigDict(extra="forbid")

    value_episodes: int = Field(default=2_000, ge=0)
    visitation_episodes: int = Field(default=1_000, ge=0)
    partition_samples: int = Field(default=1_000, ge=1)
    match_threshold: float = Field(default=0.95, gt=0.0, le=1.0)
    recover_dynamics: bool = False
    dynamics_samples: int = Field(default=5_000, ge=1)
    min_row_count: int = Field(default=50, ge=1)
    delta: float = Field(default=1e-3, gt=0.0, lt=1.0)
    ki_tol: float = Field(default=DEFAULT_TOL, gt=0.0)


class ExperimentConfigDTO(BaseModel):
    """Documento completo de un experimento; se guarda resuelto en cada ejecución"""

    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    algorithm: AlgorithmType = AlgorithmType.HOMER
    environment: EnvironmentConfigDTO = Field(default_factory=EnvironmentConfigDTO)
    hyperparameters: HyperparametersDTO = Field(default_factory=HyperparametersDTO)
    seed: int = Field(default=0, ge=0)
    environment_seed: Optional[int] = Field(default=None, ge=0)
    budget: BudgetDTO = Field(default_factory=BudgetDTO)
    evaluation: EvaluationDTO = Field(default_factory=EvaluationDTO)
    output_dir: Optional[str] = None

    @property
    def env_seed(self) -> int:
        """Semilla del entorno (u/v de la cerradura); por defecto la del experimento"""
        return self.seed if self.environment_seed is None else self.environment_seed
