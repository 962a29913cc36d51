"""
Procedimientos de muestreo sobre ``EnvironmentAccess``.

Roll-in con Unf(Ψ_t): cada episodio elige una política de la cobertura de
forma uniforme. Los episodios se agrupan por política elegida y se simulan en
bloques vectorizados, cada bloque con su stream derivado de claves semánticas.
"""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..block_mdp.environment import EnvironmentAccess, EpisodeBatch
from ..block_mdp.observations import ObservationBatch
from ..block_mdp.policies import Decider, NonstationaryPolicy
from ..block_mdp.rewards import RewardFunction
from ..oracles.bounds import hoeffding_band
from ..oracles.dto import CBDataset
from ..utils.errors import CoverError
from ..utils.seeding import derive_rng, episode_chunks


@dataclass
class TransitionSample:
    """Transiciones (x_t, a_t, x_{t+1}) con acciones uniformes"""

    prev: ObservationBatch
    actions: np.ndarray
    next: Optional[ObservationBatch]
    env_rewards: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def t(self) -> int:
        return self.prev.timestep


def allocate(n: int, n_policies: int, seed: int, *keys) -> np.ndarray:
    """Episodios asignados a cada política de la cobertura (Unf(Ψ))"""
    if n_policies == 0:
        return np.array([n])
    picks = derive_rng(seed, "rollin-choice", *keys).integers(n_policies, size=n)
    return np.bincount(picks, minlength=n_policies)


def roll_in(batch: EpisodeBatch, policy: Optional[NonstationaryPolicy], t: int, rng: np.random.Generator) -> None:
    """Avanzar el lote hasta el paso t siguiendo el prefijo de la política"""
    for s in range(1, t):
        if policy is None or len(policy) < s:
            raise CoverError(f"El prefijo de roll-in no cubre el paso {s} (objetivo {t})")
        batch.step(policy.decider(s).act(batch.observation, rng))


def rollin_batches(
    env: EnvironmentAccess,
    policies: Sequence[NonstationaryPolicy],
    t: int,
    n: int,
    seed: int,
    *keys,
) -> Iterator[Tuple[EpisodeBatch, np.random.Generator]]:
    """Lotes de episodios situados en el paso t tras el roll-in Unf(Ψ_t)"""
    counts = allocate(n, len(policies), seed, *keys)
    for index, total in enumerate(counts):
        policy = policies[index] if policies else None
        for chunk, _, size in episode_chunks(int(total)):
            rng = derive_rng(seed, *keys, index, chunk)
            batch = env.start(size, rng)
            roll_in(batch, policy, t, rng)
            yield batch, rng


def uniform_actions(n: int, n_actions: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(n_actions, size=n).astype(np.int64)


def sample_transitions(
    env: EnvironmentAccess,
    policies: Sequence[NonstationaryPolicy],
    t: int,
    n: int,
    seed: int,
    *keys,
) -> TransitionSample:
    """n transiciones de t a t+1 con Unf(Ψ_t) ∘ Unf(𝒜)"""
    prev, actions, nxt, rewards = [], [], [], []
    for batch, rng in rollin_batches(env, policies, t, n, seed, "transitions", *keys):
        obs = batch.observation
        a = uniform_actions(len(batch), env.n_actions, rng)
        rewards.append(batch.step(a))
        prev.append(obs)
        actions.append(a)
        if batch.observation is not None:
            nxt.append(batch.observation)
    return TransitionSample(
        prev=ObservationBatch.concat(prev),
        actions=np.concatenate(actions),
        next=ObservationBatch.concat(nxt) if nxt else None,
        env_rewards=np.concatenate(rewards),
    )


def collect_level(
    env: EnvironmentAccess,
    policies: Sequence[NonstationaryPolicy],
    t: int,
    last: int,
    suffix: Dict[int, Decider],
    reward: RewardFunction,
    n: int,
    seed: int,
    *keys,
) -> CBDataset:
    """
    Dataset de bandido contextual del nivel t: roll-in Unf(Ψ_t), acción
    uniforme (p = 1/|𝒜|) y roll-out con los decisores ya aprendidos hasta la
    transición ``last``; la recompensa es la suma acumulada desde t.
    """
    A = env.n_actions
    observations: List[ObservationBatch] = []
    actions, returns = [], []
    for batch, rng in rollin_batches(env, policies, t, n, seed, "level", *keys):
        obs = batch.observation
        a = uniform_actions(len(batch), A, rng)
        env_rewards = batch.step(a)
        total = reward.realized(t, obs, a, batch.observation, env_rewards)
        for s in range(t + 1, last + 1):
            current = batch.observation
            step_actions = suffix[s].act(current, rng)
            env_rewards = batch.step(step_actions)
            total = total + reward.realized(s, current, step_actions, batch.observation, env_rewards)
        observations.append(obs)
        actions.append(a)
        returns.append(total)
    return CBDataset(
        observations=ObservationBatch.concat(observations),
        actions=np.concatenate(actions),
        propensities=np.full(n, 1.0 / A),
        rewards=np.concatenate(returns).astype(np.float64),
        n_actions=A,
    )


def reward_horizon(reward: RewardFunction, h: int) -> int:
    """Última transición con recompensa dentro de los h pasos de la política"""
    last = reward.last_transition
    return h if last is None else min(h, last)


def estimate_value(
    env: EnvironmentAccess,
    policy: NonstationaryPolicy,
    reward: RewardFunction,
    n: int,
    seed: int,
    *keys,
    delta: float = 1e-3,
) -> Tuple[float, float]:
    """Valor Monte Carlo de la política y su banda de Hoeffding"""
    last = reward_horizon(reward, len(policy))
    total = 0.0
    for chunk, _, size in episode_chunks(n):
        rng = derive_rng(seed, "evaluate", *keys, chunk)
        batch = env.start(size, rng)
        for s in range(1, last + 1):
            obs = batch.observation
            a = policy.decider(s).act(obs, rng)
            env_rewards = batch.step(a)
            total += float(np.sum(reward.realized(s, obs, a, batch.observation, env_rewards)))
    return total / max(n, 1), hoeffding_band(n, delta)
