"""
Muestreo con diagnóstico: trayectorias con estados latentes, visitación y
valor Monte Carlo. Este módulo lee los estados latentes; los algoritmos de
aprendizaje no lo importan.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..oracles.bounds import hoeffding_band
from ..utils.errors import ConfigurationError
from ..utils.seeding import derive_rng, episode_chunks
from .dynamics import ValueEstimate
from .environment import EnvironmentAccess
from .observations import Observation, g_star
from .policies import NonstationaryPolicy, UniformDecider
from .rewards import ExternalReward, RewardFunction


@dataclass
class TrajectoryLog:
    """Trayectoria de H pasos con estados latentes (sólo para diagnóstico)"""

    states: List[str]
    observations: List[Observation]
    actions: List[int]
    rewards: List[float]
    seed: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def total_reward(self) -> float:
        return float(np.sum(self.rewards))

    def to_record(self) -> Dict[str, Any]:
        steps = []
        for obs, state, action, reward in zip(self.observations, self.states, self.actions, self.rewards):
            payload = obs.payload if isinstance(obs.payload, int) else np.asarray(obs.payload).tolist()
            steps.append(
                {"h": obs.timestep, "state": state, "observation": payload, "action": int(action), "reward": float(reward)}
            )
        return {"seed": self.seed, "steps": steps}

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "TrajectoryLog":
        steps = record["steps"]
        observations = []
        for step in steps:
            payload = step["observation"]
            payload = int(payload) if isinstance(payload, int) else np.asarray(payload, dtype=np.float64)
            observations.append(Observation(payload=payload, timestep=int(step["h"])))
        return cls(
            states=[s["state"] for s in steps],
            observations=observations,
            actions=[int(s["action"]) for s in steps],
            rewards=[float(s["reward"]) for s in steps],
            seed=dict(record.get("seed", {})),
        )


@dataclass
class BatchRollout:
    """Resultado de un lote de episodios: latentes (-1 si no se alcanzó), acciones y retornos"""

    latent: np.ndarray
    actions: np.ndarray
    env_rewards: np.ndarray
    returns: np.ndarray
    observations: Optional[List] = None


def rollout_batch(
    mdp,
    policy: NonstationaryPolicy,
    n: int,
    rng: np.random.Generator,
    reward: Optional[RewardFunction] = None,
    keep_observations: bool = False,
) -> BatchRollout:
    """Ejecutar n episodios; se detiene tras el último paso cubierto por la política"""
    reward = reward or ExternalReward()
    policy.check_emission(mdp.emission.payload_kind)
    H = mdp.horizon
    env = EnvironmentAccess(mdp)
    batch = env.start(n, rng)
    latent = np.full((n, H), -1, dtype=np.int64)
    actions = np.full((n, H), -1, dtype=np.int64)
    env_rewards = np.zeros((n, H))
    returns = np.zeros(n)
    observations = [] if keep_observations else None
    steps = min(H, len(policy))
    for h in range(1, H + 1):
        obs = batch.observation
        latent[:, h - 1] = g_star(obs)
        if keep_observations:
            observations.append(obs)
        if h > steps:
            break
        a = policy.act(obs, rng)
        r = batch.step(a)
        actions[:, h - 1] = a
        env_rewards[:, h - 1] = r
        returns += reward.realized(h, obs, a, batch.observation, r)
    return BatchRollout(latent, actions, env_rewards, returns, observations)


def sample_trajectory(
    mdp,
    policy: NonstationaryPolicy,
    rng: np.random.Generator,
    provenance: Optional[Dict[str, Any]] = None,
) -> TrajectoryLog:
    """Una trayectoria completa de H pasos bajo la política"""
    if len(policy) < mdp.horizon:
        raise ConfigurationError(f"La política cubre {len(policy)} de {mdp.horizon} pasos")
    out = rollout_batch(mdp, policy, 1, rng, keep_observations=True)
    names = [mdp.state_names(h)[out.latent[0, h - 1]] for h in range(1, mdp.horizon + 1)]
    return TrajectoryLog(
        states=names,
        observations=[obs.record(0) for obs in out.observations],
        actions=out.actions[0].tolist(),
        rewards=out.env_rewards[0].tolist(),
        seed=dict(provenance or {}),
    )


def sample_trajectories(mdp, policy: NonstationaryPolicy, n: int, seed: int) -> List[TrajectoryLog]:
    """n trayectorias, cada una con su stream derivado de (semilla, episodio)"""
    return [
        sample_trajectory(mdp, policy, derive_rng(seed, "trajectory", i), {"master": seed, "episode": i})
        for i in range(n)
    ]


def extend_uniform(policy: NonstationaryPolicy, n_actions: int, horizon: int) -> NonstationaryPolicy:
    """Completar un prefijo con acciones uniformes hasta H"""
    missing = horizon - len(policy)
    return policy.then(*[UniformDecider(n_actions) for _ in range(max(missing, 0))])


def monte_carlo_visitation(mdp, policy: NonstationaryPolicy, n: int, seed: int) -> List[np.ndarray]:
    """Frecuencias empíricas de visitación por paso (pasos 1..min(H, len(π)+1))"""
    last = min(mdp.horizon, len(policy) + 1)
    counts = [np.zeros(mdp.n_states(h)) for h in range(1, last + 1)]
    for chunk, _, size in episode_chunks(n):
        out = rollout_batch(mdp, policy, size, derive_rng(seed, "visitation", chunk))
        for h in range(1, last + 1):
            counts[h - 1] += np.bincount(out.latent[:, h - 1], minlength=mdp.n_states(h))
    return [c / max(n, 1) for c in counts]


def latent_counts(mdp, policies: List[NonstationaryPolicy], n: int, seed: int) -> List[np.ndarray]:
    """
    Conteos de estados latentes en n episodios: cada episodio elige una
    política uniformemente y la completa con acciones uniformes.
    """
    counts = [np.zeros(mdp.n_states(h), dtype=np.int64) for h in range(1, mdp.horizon + 1)]
    if n <= 0 or not policies:
        return counts
    choice_rng = derive_rng(seed, "trace-choice")
    picks = choice_rng.integers(len(policies), size=n)
    for index, policy in enumerate(policies):
        total = int((picks == index).sum())
        full = extend_uniform(policy, mdp.n_actions, mdp.horizon)
        for chunk, _, size in episode_chunks(total):
            out = rollout_batch(mdp, full, size, derive_rng(seed, "trace", index, chunk))
            for h in range(1, mdp.horizon + 1):
                counts[h - 1] += np.bincount(out.latent[:, h - 1], minlength=mdp.n_states(h))
    return counts


def monte_carlo_value(
    mdp,
    policy: NonstationaryPolicy,
    reward: Optional[RewardFunction] = None,
    n: int = 2000,
    seed: int = 0,
    delta: float = 1e-3,
) -> ValueEstimate:
    """Valor Monte Carlo con banda de Hoeffding (retornos en [0, 1])"""
    total = 0.0
    for chunk, _, size in episode_chunks(n):
        out = rollout_batch(mdp, policy, size, derive_rng(seed, "value", chunk), reward=reward)
        total += float(out.returns.sum())
    return ValueEstimate(value=total / max(n, 1), exact=False, episodes=n, band=hoeffding_band(n, delta), delta=delta)
