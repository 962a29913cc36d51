"""
Modelos de emisión: cómo un estado latente genera observaciones.
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Sequence

import numpy as np
from scipy.linalg import hadamard

from ..utils.errors import MalformedMDPError
from .observations import DISCRETE, VECTOR

SUM_TOL = 1e-12


class EmissionModel(ABC):
    """Interfaz común de emisiones"""

    kind: str
    payload_kind: str

    @abstractmethod
    def sample(self, h: int, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Carga útil de observaciones para los estados latentes del paso h"""

    @abstractmethod
    def validate(self, states_per_step: Sequence[int]) -> None:
        """Comprobar la emisión contra el número de estados por paso"""

    @abstractmethod
    def to_document(self) -> Dict[str, Any]:
        """Parámetros serializables"""


class DiscreteEmission(EmissionModel):
    """
    Distribución finita por estado.

    Args:
        tables: por paso, matriz (n_estados_h, n_obs_h) de probabilidades
        observation_names: por paso, nombres de los símbolos observables
    """

    kind = "discrete"
    payload_kind = DISCRETE

    def __init__(self, tables: Sequence[np.ndarray], observation_names: Sequence[Sequence[str]]):
        self.tables: List[np.ndarray] = []
        for table in tables:
            table = np.array(table, dtype=np.float64)
            table.setflags(write=False)
            self.tables.append(table)
        self.observation_names = [list(names) for names in observation_names]
        self._owners = [self._owner_of(table) for table in self.tables]
        self._cumulative = [np.cumsum(table, axis=1) for table in self.tables]

    @staticmethod
    def _owner_of(table: np.ndarray) -> np.ndarray:
        support = table > 0
        owners = np.full(table.shape[1], -1, dtype=np.int64)
        counts = support.sum(axis=0)
        owned = counts >= 1
        owners[owned] = np.argmax(support[:, owned], axis=0)
        owners[counts > 1] = -2
        return owners

    def n_observations(self, h: int) -> int:
        return int(self.tables[h - 1].shape[1])

    def table(self, h: int) -> np.ndarray:
        return self.tables[h - 1]

    def owners(self, h: int) -> np.ndarray:
        """Estado latente dueño de cada símbolo (-1 si nadie lo emite)"""
        return self._owners[h - 1]

    def sample(self, h: int, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        cumulative = self._cumulative[h - 1][states]
        u = rng.random(len(states))
        symbols = (u[:, None] >= cumulative).sum(axis=1)
        return np.minimum(symbols, cumulative.shape[1] - 1).astype(np.int64)

    def validate(self, states_per_step: Sequence[int]) -> None:
        if len(self.tables) != len(states_per_step):
            raise MalformedMDPError(
                f"Emisión con {len(self.tables)} pasos para un horizonte {len(states_per_step)}"
            )
        for h, (table, n_states) in enumerate(zip(self.tables, states_per_step), start=1):
            if table.shape[0] != n_states:
                raise MalformedMDPError(f"Paso {h}: tabla de emisión con {table.shape[0]} filas, se esperaban {n_states}")
            if len(self.observation_names[h - 1]) != table.shape[1]:
                raise MalformedMDPError(f"Paso {h}: nombres de observación inconsistentes")
            if np.any(table < 0):
                raise MalformedMDPError(f"Paso {h}: probabilidades de emisión negativas")
            sums = table.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > SUM_TOL):
                raise MalformedMDPError(f"Paso {h}: emisiones que no suman 1 ({sums.tolist()})")
            if np.any(self._owners[h - 1] == -2):
                shared = np.where(self._owners[h - 1] == -2)[0].tolist()
                raise MalformedMDPError(f"Paso {h}: soportes de emisión no disjuntos en símbolos {shared}")

    def to_document(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "tables": [table.tolist() for table in self.tables],
            "observation_names": self.observation_names,
        }


def observation_dim(horizon: int) -> int:
    """d = 2^ceil(log2(H + 4))"""
    return 1 << int(np.ceil(np.log2(horizon + 4)))


class GaussianRotatedEmission(EmissionModel):
    """
    Emisión procedural de la cerradura combinatoria.

    Vector = one-hot del estado (``n_slots``) concatenado con one-hot del paso
    (``horizon``), más ruido N(0, noise_var) en esas coordenadas, relleno con
    ceros hasta ``dim`` y multiplicado por una matriz de Hadamard de Sylvester.

    Args:
        horizon: H
        slots: por paso, ranura one-hot de cada estado latente
        n_slots: tamaño del one-hot de estado
        noise_var: varianza del ruido por coordenada
    """

    kind = "gaussian-rotated"
    payload_kind = VECTOR

    def __init__(self, horizon: int, slots: Sequence[Sequence[int]], n_slots: int = 3, noise_var: float = 0.1):
        self.horizon = int(horizon)
        self.slots = [np.asarray(s, dtype=np.int64) for s in slots]
        self.n_slots = int(n_slots)
        self.noise_var = float(noise_var)
        self.dim = observation_dim(self.horizon)
        self.rotation = hadamard(self.dim).astype(np.float64)
        self.rotation.setflags(write=False)

    @property
    def signal_dim(self) -> int:
        return self.n_slots + self.horizon

    def sample(self, h: int, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = len(states)
        raw = np.zeros((n, self.dim))
        raw[np.arange(n), self.slots[h - 1][states]] = 1.0
        raw[:, self.n_slots + h - 1] = 1.0
        raw[:, : self.signal_dim] += rng.normal(0.0, np.sqrt(self.noise_var), size=(n, self.signal_dim))
        return raw @ self.rotation.T

    def validate(self, states_per_step: Sequence[int]) -> None:
        if len(self.slots) != len(states_per_step) or len(states_per_step) != self.horizon:
            raise MalformedMDPError("Ranuras de emisión inconsistentes con el horizonte")
        for h, (slots, n_states) in enumerate(zip(self.slots, states_per_step), start=1):
            if len(slots) != n_states:
                raise MalformedMDPError(f"Paso {h}: {len(slots)} ranuras para {n_states} estados")
            if len(set(slots.tolist())) != len(slots) or slots.min() < 0 or slots.max() >= self.n_slots:
                raise MalformedMDPError(f"Paso {h}: ranuras one-hot repetidas o fuera de rango")
        if self.dim < self.horizon + 4:
            raise MalformedMDPError(f"Dimensión {self.dim} menor que H + 4")

    def rotation_checksum(self) -> int:
        """Suma ponderada de las entradas de la rotación, para identificarla en informes"""
        weights = np.arange(1, self.dim * self.dim + 1, dtype=np.int64).reshape(self.dim, self.dim)
        return int((self.rotation.astype(np.int64) * weights).sum())

    def to_document(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "horizon": self.horizon,
            "slots": [s.tolist() for s in self.slots],
            "n_slots": self.n_slots,
            "noise_var": self.noise_var,
            "dim": self.dim,
        }
