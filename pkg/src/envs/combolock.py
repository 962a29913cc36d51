"""
Cerradura combinatoria diabólica.

Estados: s_{1,a}, s_{1,b} en el paso 1 y {a, b, c} en los pasos siguientes.
Desde a (b) la acción buena u_h (v_h) lleva a Unf{a, b} del paso siguiente;
cualquier otra acción lleva a c, que es absorbente. Recompensa 1 por u_H en a
o v_H en b; recompensa anti-shaped 0.1 * Ber(1/2) al caer de un estado bueno
a c.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..block_mdp.emissions import DiscreteEmission, GaussianRotatedEmission, observation_dim
from ..block_mdp.mdp import LatentBlockMDP, RewardTable
from ..block_mdp.policies import NonstationaryPolicy, latent_policy
from ..utils.errors import ConfigurationError
from ..utils.seeding import derive_rng

GOOD_A, GOOD_B, BAD = 0, 1, 2
ANTI_SHAPED_SCALE = 0.1
ANTI_SHAPED_PROB = 0.5
NOISE_VAR = 0.1


@dataclass(frozen=True)
class ComboLockSpec:
    horizon: int
    n_actions: int
    u: tuple
    v: tuple
    seed: int
    noise_var: float = NOISE_VAR
    emission: str = "gaussian"
    observations_per_state: int = 2

    @property
    def dim(self) -> int:
        return observation_dim(self.horizon)

    def to_document(self) -> Dict[str, Any]:
        return {
            "horizon": self.horizon,
            "n_actions": self.n_actions,
            "u": list(self.u),
            "v": list(self.v),
            "seed": self.seed,
            "noise_var": self.noise_var,
            "emission": self.emission,
            "dim": self.dim,
        }


def draw_lock(horizon: int, n_actions: int, seed: int) -> tuple:
    """Vectores u, v con coordenadas uniformes en [K]"""
    rng = derive_rng(seed, "combolock")
    u = rng.integers(n_actions, size=horizon)
    v = rng.integers(n_actions, size=horizon)
    return tuple(int(x) for x in u), tuple(int(x) for x in v)


def make_combolock_spec(
    H: int,
    K: int,
    seed: int,
    u: Optional[Sequence[int]] = None,
    v: Optional[Sequence[int]] = None,
    emission: str = "gaussian",
    observations_per_state: int = 2,
    noise_var: float = NOISE_VAR,
) -> ComboLockSpec:
    if H < 1 or K < 2:
        raise ConfigurationError("La cerradura requiere H >= 1 y K >= 2")
    drawn_u, drawn_v = draw_lock(H, K, seed)
    u = tuple(int(x) for x in u) if u is not None else drawn_u
    v = tuple(int(x) for x in v) if v is not None else drawn_v
    if len(u) != H or len(v) != H or min(u + v) < 0 or max(u + v) >= K:
        raise ConfigurationError("Vectores u/v con longitud o acciones fuera de rango")
    if emission not in ("gaussian", "discrete"):
        raise ConfigurationError(f"Emisión desconocida: {emission}", field_path="emission")
    return ComboLockSpec(H, K, u, v, seed, noise_var, emission, observations_per_state)


def _step_states(h: int) -> List[str]:
    return ["a", "b"] if h == 1 else ["a", "b", "c"]


def build_combolock(spec: ComboLockSpec) -> LatentBlockMDP:
    H, K = spec.horizon, spec.n_actions
    states = [_step_states(h) for h in range(1, H + 1)]
    transitions, rewards = [], []
    for h in range(1, H + 1):
        n_h = len(states[h - 1])
        n_next = 1 if h == H else 3
        T = np.zeros((n_h, K, n_next))
        scale = np.zeros((n_h, K, n_next))
        prob = np.ones((n_h, K, n_next))
        for s, good in ((GOOD_A, spec.u[h - 1]), (GOOD_B, spec.v[h - 1])):
            for a in range(K):
                if h == H:
                    T[s, a, 0] = 1.0
                    if a == good:
                        scale[s, a, 0] = 1.0
                elif a == good:
                    T[s, a, GOOD_A] = T[s, a, GOOD_B] = 0.5
                else:
                    T[s, a, BAD] = 1.0
                    scale[s, a, BAD] = ANTI_SHAPED_SCALE
                    prob[s, a, BAD] = ANTI_SHAPED_PROB
        if n_h == 3:
            T[BAD, :, BAD if h < H else 0] = 1.0
        if h < H:
            transitions.append(T)
        rewards.append(RewardTable(scale, prob))

    if spec.emission == "gaussian":
        emission = GaussianRotatedEmission(
            H, [list(range(len(states[h]))) for h in range(H)], n_slots=3, noise_var=spec.noise_var
        )
    else:
        m = spec.observations_per_state
        tables, names = [], []
        for h in range(1, H + 1):
            n_h = len(states[h - 1])
            table = np.zeros((n_h, n_h * m))
            for s in range(n_h):
                table[s, s * m:(s + 1) * m] = 1.0 / m
            tables.append(table)
            names.append([f"{states[h - 1][s]}{h}_{j}" for s in range(n_h) for j in range(m)])
        emission = DiscreteEmission(tables, names)

    return LatentBlockMDP(
        states=states,
        actions=[f"a{k}" for k in range(K)],
        start=[0.5, 0.5],
        transitions=transitions,
        rewards=rewards,
        emission=emission,
        name=f"combolock-H{H}-K{K}-s{spec.seed}",
        metadata={"combolock": spec.to_document()},
    )


def make_combolock(H: int, K: int, seed: int, **options) -> LatentBlockMDP:
    """Cerradura combinatoria con u/v sorteados a partir de la semilla"""
    return build_combolock(make_combolock_spec(H, K, seed, **options))


def combolock_spec_of(mdp: LatentBlockMDP) -> Dict[str, Any]:
    return mdp.metadata["combolock"]


def optimal_policy(mdp: LatentBlockMDP) -> NonstationaryPolicy:
    """Política latente óptima: u_h en a, v_h en b (c actúa con 0)"""
    spec = combolock_spec_of(mdp)
    per_step = []
    for h in range(1, mdp.horizon + 1):
        actions = [spec["u"][h - 1], spec["v"][h - 1]]
        if mdp.n_states(h) == 3:
            actions.append(0)
        per_step.append(actions)
    return latent_policy(per_step, mdp.n_actions, label="combolock-optimal")


def uniform_success_probability(H: int, K: int) -> float:
    """Probabilidad de la recompensa óptima con acciones uniformes: K^-H"""
    return float(K) ** (-H)


def lock_summary(mdp: LatentBlockMDP) -> Dict[str, Any]:
    """d, u/v y checksum de la rotación"""
    spec = combolock_spec_of(mdp)
    summary = {"H": spec["horizon"], "K": spec["n_actions"], "seed": spec["seed"], "d": spec["dim"], "u": spec["u"], "v": spec["v"]}
    if isinstance(mdp.emission, GaussianRotatedEmission):
        rotation = mdp.emission.rotation
        summary["hadamard_checksum"] = mdp.emission.rotation_checksum()
        summary["orthogonality_error"] = float(np.abs(rotation.T @ rotation - rotation.shape[0] * np.eye(rotation.shape[0])).max())
    return summary
