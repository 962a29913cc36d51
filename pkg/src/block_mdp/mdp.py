"""
Block MDP tabular con estados latentes particionados por paso temporal.

Convenciones:
- los pasos se numeran h = 1..H; las listas internas se indexan con h - 1;
- ``transitions[h-1]`` tiene forma (n_h, A, n_{h+1}) para h < H;
- ``rewards[h-1]`` tiene forma (n_h, A, n_{h+1}); en h = H el siguiente
  estado es un centinela terminal único, así que la forma es (n_H, A, 1).
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import MalformedMDPError
from .emissions import EmissionModel

SUM_TOL = 1e-12
TERMINAL = "<terminal>"

StateKey = Tuple[int, str]


def _frozen(array, dtype=np.float64) -> np.ndarray:
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class RewardTable:
    """
    Descriptor de recompensa por (s, a, s'): ``scale * Ber(prob)``.

    Una recompensa constante c es ``scale = c, prob = 1``.
    """

    scale: np.ndarray
    prob: np.ndarray

    @staticmethod
    def zeros(n_states: int, n_actions: int, n_next: int) -> "RewardTable":
        shape = (n_states, n_actions, n_next)
        return RewardTable(_frozen(np.zeros(shape)), _frozen(np.ones(shape)))

    def expected(self) -> np.ndarray:
        return self.scale * self.prob

    def max_realization(self) -> np.ndarray:
        """Mayor valor realizable de cada celda"""
        upper = np.where(self.prob > 0, self.scale, 0.0)
        lower = np.where(self.prob < 1, 0.0, self.scale)
        return np.maximum(upper, lower)

    def realize(self, states: np.ndarray, actions: np.ndarray, next_states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        scale = self.scale[states, actions, next_states]
        prob = self.prob[states, actions, next_states]
        draws = rng.random(len(states))
        return np.where(draws < prob, scale, 0.0)


class LatentBlockMDP:
    """
    Modelo del mundo: dinámica latente tabular, recompensas y emisión.

    El objeto es inmutable tras la construcción (arrays de sólo lectura) y se
    puede compartir entre hilos.
    """

    def __init__(
        self,
        states: Sequence[Sequence[str]],
        actions: Sequence[str],
        start: Sequence[float],
        transitions: Sequence[np.ndarray],
        rewards: Sequence[RewardTable],
        emission: EmissionModel,
        name: str = "mdp",
        metadata: Optional[Dict] = None,
    ):
        self.name = name
        self.states: List[List[str]] = [list(step) for step in states]
        self.actions: List[str] = list(actions)
        self.start = _frozen(start)
        self.transitions: List[np.ndarray] = [_frozen(t) for t in transitions]
        self.rewards: List[RewardTable] = [RewardTable(_frozen(r.scale), _frozen(r.prob)) for r in rewards]
        self.emission = emission
        self.metadata = dict(metadata or {})
        self.validate()

    # ------------------------------------------------------------------
    # Propiedades básicas
    # ------------------------------------------------------------------
    @property
    def horizon(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def n_states(self, h: int) -> int:
        return len(self.states[h - 1])

    def state_names(self, h: int) -> List[str]:
        return self.states[h - 1]

    def state_index(self, h: int, name: str) -> int:
        return self.states[h - 1].index(name)

    def transition(self, h: int) -> np.ndarray:
        """T en el paso h; en h = H todo va al centinela terminal"""
        if h == self.horizon:
            return np.ones((self.n_states(h), self.n_actions, 1))
        return self.transitions[h - 1]

    def reward_table(self, h: int) -> RewardTable:
        return self.rewards[h - 1]

    def state_keys(self) -> List[StateKey]:
        return [(h, name) for h in range(1, self.horizon + 1) for name in self.state_names(h)]

    def as_state_map(self, per_step: Sequence[np.ndarray]) -> Dict[StateKey, float]:
        """Convertir arrays por paso en un mapa (h, nombre) -> valor"""
        return {
            (h, name): float(values[i])
            for h, values in enumerate(per_step, start=1)
            for i, name in enumerate(self.state_names(h))
        }

    # ------------------------------------------------------------------
    # Validación
    # ------------------------------------------------------------------
    def validate(self) -> None:
        H = self.horizon
        if H < 1:
            raise MalformedMDPError("Horizonte vacío")
        if self.n_actions < 1:
            raise MalformedMDPError("Conjunto de acciones vacío")
        for h in range(1, H + 1):
            names = self.state_names(h)
            if not names or len(set(names)) != len(names):
                raise MalformedMDPError(f"Paso {h}: lista de estados vacía o con nombres repetidos")
        if self.start.shape != (self.n_states(1),):
            raise MalformedMDPError(f"Distribución inicial con forma {self.start.shape}")
        if np.any(self.start < 0) or abs(self.start.sum() - 1.0) > SUM_TOL:
            raise MalformedMDPError(f"Distribución inicial inválida (suma {self.start.sum()!r})")
        if len(self.transitions) != H - 1:
            raise MalformedMDPError(f"Se esperaban {H - 1} tensores de transición, hay {len(self.transitions)}")
        for h in range(1, H):
            T = self.transitions[h - 1]
            expected = (self.n_states(h), self.n_actions, self.n_states(h + 1))
            if T.shape != expected:
                raise MalformedMDPError(f"Paso {h}: transición con forma {T.shape}, se esperaba {expected}")
            if np.any(T < 0):
                raise MalformedMDPError(f"Paso {h}: probabilidades de transición negativas")
            sums = T.sum(axis=2)
            if np.any(np.abs(sums - 1.0) > SUM_TOL):
                raise MalformedMDPError(f"Paso {h}: filas de transición que no suman 1")
        if len(self.rewards) != H:
            raise MalformedMDPError(f"Se esperaban {H} tablas de recompensa, hay {len(self.rewards)}")
        for h in range(1, H + 1):
            table = self.rewards[h - 1]
            n_next = 1 if h == H else self.n_states(h + 1)
            expected = (self.n_states(h), self.n_actions, n_next)
            if table.scale.shape != expected or table.prob.shape != expected:
                raise MalformedMDPError(f"Paso {h}: tabla de recompensa con forma {table.scale.shape}")
            if np.any(table.prob < 0) or np.any(table.prob > 1):
                raise MalformedMDPError(f"Paso {h}: probabilidades de Bernoulli fuera de [0, 1]")
        self.emission.validate([self.n_states(h) for h in range(1, H + 1)])
        worst = self.max_trajectory_reward()
        if worst > 1.0 + SUM_TOL:
            raise MalformedMDPError(f"Una trayectoria puede acumular recompensa {worst:.6f} > 1")

    def max_trajectory_reward(self) -> float:
        """Máxima recompensa realizable a lo largo de una trayectoria factible"""
        future = np.zeros(1)
        for h in range(self.horizon, 0, -1):
            T = self.transition(h)
            gain = self.rewards[h - 1].max_realization() + future[None, None, :]
            gain = np.where(T > 0, gain, -np.inf)
            future = gain.max(axis=(1, 2))
        reachable = self.start > 0
        return float(future[reachable].max())

    # ------------------------------------------------------------------
    # Simulación vectorizada
    # ------------------------------------------------------------------
    def sample_start(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.n_states(1), size=n, p=self.start)

    def sample_next(self, h: int, states: np.ndarray, actions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Estados del paso h + 1 (centinela 0 en h = H)"""
        if h == self.horizon:
            return np.zeros(len(states), dtype=np.int64)
        rows = self.transitions[h - 1][states, actions]
        cumulative = np.cumsum(rows, axis=1)
        u = rng.random(len(states))
        nxt = (u[:, None] >= cumulative).sum(axis=1)
        return np.minimum(nxt, rows.shape[1] - 1).astype(np.int64)

    def emit(self, h: int, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.emission.sample(h, states, rng)

    def describe(self) -> Dict:
        return {
            "name": self.name,
            "horizon": self.horizon,
            "actions": list(self.actions),
            "states_per_step": [len(s) for s in self.states],
            "emission": self.emission.kind,
        }

    def __repr__(self) -> str:
        return f"LatentBlockMDP(name={self.name!r}, H={self.horizon}, A={self.n_actions})"
