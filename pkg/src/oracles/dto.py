from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from ..block_mdp.observations import Observation, ObservationBatch
from ..utils.errors import ConfigurationError, EmptyDatasetError

# =============================================================================
# CONFIGURACIÓN DE LOS ORÁCULOS
# =============================================================================


class CBBackend(str, Enum):
    EXACT = "exact"
    SGD = "sgd"


class RegBackend(str, Enum):
    EXACT_ERM = "exact-erm"
    SGD_GUMBEL = "sgd-gumbel"


class RegForm(str, Enum):
    """Dos modelos con un cuello de botella cada uno, o un único modelo con dos"""

    TWO_MODEL = "two-model"
    JOINT = "joint"


class LossKind(str, Enum):
    SQUARE = "square"
    CROSS_ENTROPY = "cross-entropy"


class OptimizerKind(str, Enum):
    SGD_MOMENTUM = "sgd-momentum"
    ADAM = "adam"


class CBConfigDTO(BaseModel):
    """Ajuste del modelo Q(x, a) de la clase lineal"""

    solver: str = Field(default="lstsq", pattern="^(lstsq|sgd)$")
    ridge: float = Field(default=1e-3, ge=0.0)
    learning_rate: float = Field(default=0.001, gt=0.0)
    batch_size: int = Field(default=32, ge=1)
    max_epochs: int = Field(default=50, ge=1)
    patience: int = Field(default=10, ge=1)
    validation_fraction: float = Field(default=0.2, ge=0.0, lt=1.0)
    optimizer: OptimizerKind = OptimizerKind.ADAM
    enumeration_budget: int = Field(default=1000, ge=1)


class RegConfigDTO(BaseModel):
    backend: RegBackend = RegBackend.SGD_GUMBEL
    form: RegForm = RegForm.TWO_MODEL
    loss: LossKind = LossKind.SQUARE
    learning_rate: float = Field(default=0.001, gt=0.0)
    batch_size: int = Field(default=32, ge=1)
    hidden: int = Field(default=56, ge=1)
    temperature: float = Field(default=1.0, gt=0.0)
    max_epochs: int = Field(default=200, ge=1)
    pretrain_epochs: int = Field(default=20, ge=0)
    patience: int = Field(default=10, ge=1)
    escape_margin: float = Field(default=1e-3, ge=0.0)
    validation_fraction: float = Field(default=0.2, ge=0.0, lt=1.0)
    optimizer: OptimizerKind = OptimizerKind.SGD_MOMENTUM
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    abstraction_budget: int = Field(default=100_000, ge=1)
    delta: float = Field(default=0.1, gt=0.0, lt=1.0)


# =============================================================================
# DATASETS
# =============================================================================


@dataclass(frozen=True)
class CBExample:
    observation: Observation
    action: int
    propensity: float
    reward: float


@dataclass
class CBDataset:
    """Cuádruplas (x, a, p, r) vectorizadas; todas las x del mismo paso"""

    observations: ObservationBatch
    actions: np.ndarray
    propensities: np.ndarray
    rewards: np.ndarray
    n_actions: int

    def __len__(self) -> int:
        return int(len(self.actions))

    def validate(self) -> "CBDataset":
        if len(self) == 0:
            raise EmptyDatasetError("Dataset de bandido contextual vacío")
        if np.any(self.propensities <= 0) or np.any(self.propensities > 1):
            raise ConfigurationError("Probabilidades de logging fuera de (0, 1]", field_path="propensities")
        return self

    def example(self, i: int) -> CBExample:
        return CBExample(self.observations.record(i), int(self.actions[i]), float(self.propensities[i]), float(self.rewards[i]))

    @classmethod
    def from_examples(cls, examples: Sequence[CBExample], n_actions: int) -> "CBDataset":
        if not examples:
            raise EmptyDatasetError("Dataset de bandido contextual vacío")
        step = examples[0].observation.timestep
        payload = np.array([e.observation.payload for e in examples])
        return cls(
            observations=ObservationBatch(step, payload),
            actions=np.array([e.action for e in examples], dtype=np.int64),
            propensities=np.array([e.propensity for e in examples], dtype=np.float64),
            rewards=np.array([e.reward for e in examples], dtype=np.float64),
            n_actions=n_actions,
        )


@dataclass(frozen=True)
class ContrastiveExample:
    prev: Observation
    action: int
    next: Observation
    label: int


@dataclass
class ContrastiveDataset:
    """Transiciones reales (y = 1) e impostoras (y = 0) de la transición h-1 -> h"""

    prev: ObservationBatch
    actions: np.ndarray
    next: ObservationBatch
    labels: np.ndarray
    n_actions: int

    def __len__(self) -> int:
        return int(len(self.labels))

    @property
    def step(self) -> int:
        return self.next.timestep

    def validate(self) -> "ContrastiveDataset":
        if len(self) == 0:
            raise EmptyDatasetError("Dataset contrastivo vacío")
        return self

    def take(self, index: Union[np.ndarray, Sequence[int]]) -> "ContrastiveDataset":
        index = np.asarray(index)
        return ContrastiveDataset(self.prev.take(index), self.actions[index], self.next.take(index), self.labels[index], self.n_actions)

    def split(self, fraction: float, rng: np.random.Generator) -> Tuple["ContrastiveDataset", "ContrastiveDataset"]:
        """Partición entrenamiento / validación"""
        order = rng.permutation(len(self))
        n_val = int(round(fraction * len(self)))
        return self.take(order[n_val:]), self.take(order[:n_val])

    def example(self, i: int) -> ContrastiveExample:
        return ContrastiveExample(self.prev.record(i), int(self.actions[i]), self.next.record(i), int(self.labels[i]))

    @staticmethod
    def concat(parts: Sequence["ContrastiveDataset"]) -> "ContrastiveDataset":
        return ContrastiveDataset(
            ObservationBatch.concat([p.prev for p in parts]),
            np.concatenate([p.actions for p in parts]),
            ObservationBatch.concat([p.next for p in parts]),
            np.concatenate([p.labels for p in parts]),
            parts[0].n_actions,
        )


# =============================================================================
# INFORMES DE ENTRENAMIENTO
# =============================================================================


@dataclass
class TrainReport:
    backend: str
    n_train: int
    n_val: int
    train_losses: List[float] = field(default_factory=list)
    val_losses: List[float] = field(default_factory=list)
    chosen_epoch: int = 0
    final_val_loss: Optional[float] = None
    generalization_bound: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> Dict[str, Any]:
        return {
            "backend": self.backend,
            "n_train": self.n_train,
            "n_val": self.n_val,
            "epochs": len(self.train_losses),
            "chosen_epoch": self.chosen_epoch,
            "train_losses": [float(x) for x in self.train_losses],
            "val_losses": [float(x) for x in self.val_losses],
            "final_val_loss": self.final_val_loss,
            "generalization_bound": self.generalization_bound,
            **self.extra,
        }
