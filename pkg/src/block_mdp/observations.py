"""
Observaciones de un Block MDP.

Las observaciones viajan en lotes (``ObservationBatch``): un paso temporal y
una carga útil vectorizada, ids enteros ``(n,)`` para emisiones discretas o
vectores reales ``(n, d)`` para emisiones procedurales. El estado latente que
generó cada observación viaja en un campo privado; sólo ``g_star`` (decodificación
oráculo) y los diagnósticos lo leen. Los algoritmos de aprendizaje nunca lo tocan.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ..utils.errors import UnsupportedOperationError

DISCRETE = "discrete"
VECTOR = "vector"


@dataclass(frozen=True)
class Observation:
    """Vista de una sola observación"""

    payload: Union[int, np.ndarray]
    timestep: int


@dataclass(frozen=True)
class ObservationBatch:
    timestep: int
    payload: np.ndarray
    _latent: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return int(self.payload.shape[0])

    @property
    def kind(self) -> str:
        return DISCRETE if self.payload.ndim == 1 else VECTOR

    @property
    def dim(self) -> int:
        return 1 if self.payload.ndim == 1 else int(self.payload.shape[1])

    def take(self, index: Union[np.ndarray, Sequence[int]]) -> "ObservationBatch":
        index = np.asarray(index)
        latent = None if self._latent is None else self._latent[index]
        return ObservationBatch(self.timestep, self.payload[index], latent)

    def record(self, i: int) -> Observation:
        payload = self.payload[i]
        if self.kind == DISCRETE:
            payload = int(payload)
        return Observation(payload=payload, timestep=self.timestep)

    @staticmethod
    def concat(batches: Sequence["ObservationBatch"]) -> "ObservationBatch":
        if not batches:
            raise ValueError("No hay lotes que concatenar")
        steps = {b.timestep for b in batches}
        if len(steps) != 1:
            raise ValueError(f"Lotes de pasos distintos: {sorted(steps)}")
        payload = np.concatenate([b.payload for b in batches], axis=0)
        if any(b._latent is None for b in batches):
            latent = None
        else:
            latent = np.concatenate([b._latent for b in batches])
        return ObservationBatch(batches[0].timestep, payload, latent)

    @staticmethod
    def where(mask: np.ndarray, first: "ObservationBatch", second: "ObservationBatch") -> "ObservationBatch":
        """Fila i de ``first`` si mask[i], de ``second`` si no"""
        if first.timestep != second.timestep:
            raise ValueError("Lotes de pasos distintos")
        mask = np.asarray(mask, dtype=bool)
        selector = mask if first.payload.ndim == 1 else mask[:, None]
        payload = np.where(selector, first.payload, second.payload)
        latent = None
        if first._latent is not None and second._latent is not None:
            latent = np.where(mask, first._latent, second._latent)
        return ObservationBatch(first.timestep, payload, latent)


def g_star(batch: ObservationBatch) -> np.ndarray:
    """Decodificador oráculo: índices latentes (por paso) de un lote"""
    if batch._latent is None:
        raise UnsupportedOperationError("El lote no transporta estados latentes")
    return batch._latent


def strip_latent(batch: ObservationBatch) -> ObservationBatch:
    """Copia del lote sin estados latentes (para persistir datasets de aprendizaje)"""
    return ObservationBatch(batch.timestep, batch.payload)
