"""
Decodificadores observación -> índice en [k] (las abstracciones φ de un paso).
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple

import numpy as np

from ..block_mdp.observations import DISCRETE, ObservationBatch
from ..utils.errors import ConfigurationError
from .network import featurize

Artifact = Tuple[Dict[str, Any], Dict[str, np.ndarray]]


class Encoder(ABC):
    kind: str = "encoder"

    def __init__(self, capacity: int):
        self.capacity = int(capacity)

    @abstractmethod
    def encode(self, batch: ObservationBatch) -> np.ndarray:
        """Índices (n,) en [0, capacity)"""

    @abstractmethod
    def to_artifact(self) -> Artifact:
        """Metadatos JSON y arrays para .npz"""


class ConstantEncoder(Encoder):
    """φ ≡ 0 (φ_B en el paso 1, φ_F en el paso H)"""

    kind = "constant"

    def __init__(self):
        super().__init__(1)

    def encode(self, batch: ObservationBatch) -> np.ndarray:
        return np.zeros(len(batch), dtype=np.int64)

    def to_artifact(self) -> Artifact:
        return {"kind": self.kind, "capacity": 1}, {}


class TableEncoder(Encoder):
    """Tabla símbolo -> índice para observaciones discretas"""

    kind = "table"

    def __init__(self, table: np.ndarray, capacity: int = None):
        table = np.asarray(table, dtype=np.int64)
        super().__init__(int(table.max()) + 1 if capacity is None else capacity)
        self.table = table

    def encode(self, batch: ObservationBatch) -> np.ndarray:
        if batch.kind != DISCRETE:
            raise ConfigurationError("Un codificador tabular requiere observaciones discretas")
        return self.table[batch.payload]

    def to_artifact(self) -> Artifact:
        return {"kind": self.kind, "capacity": self.capacity}, {"table": self.table}


class LinearEncoder(Encoder):
    """argmax(x W + b) sobre las características de la observación"""

    kind = "linear"

    def __init__(self, weights: np.ndarray, bias: np.ndarray, width: int):
        weights = np.asarray(weights, dtype=np.float64)
        super().__init__(weights.shape[1])
        self.weights = weights
        self.bias = np.asarray(bias, dtype=np.float64)
        self.width = int(width)

    def encode(self, batch: ObservationBatch) -> np.ndarray:
        return np.argmax(featurize(batch, self.width) @ self.weights + self.bias, axis=1)

    def to_artifact(self) -> Artifact:
        return {"kind": self.kind, "capacity": self.capacity, "width": self.width}, {"weights": self.weights, "bias": self.bias}


def encoder_from_artifact(meta: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> Encoder:
    kind = meta["kind"]
    if kind == ConstantEncoder.kind:
        return ConstantEncoder()
    if kind == TableEncoder.kind:
        return TableEncoder(arrays["table"], meta["capacity"])
    if kind == LinearEncoder.kind:
        return LinearEncoder(arrays["weights"], arrays["bias"], meta["width"])
    raise ConfigurationError(f"Codificador desconocido: {kind}", field_path="kind")
