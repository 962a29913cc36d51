"""
Generador de Block MDPs tabulares aleatorios para pruebas de propiedades.

Además de filas de Dirichlet dispersas, el generador parte estados: la copia
recibe una fracción fija del flujo entrante del original (entradas
proporcionales) y hereda su fila de transición (dinámica hacia delante igual).
También duplica filas sin partir entradas. Así aparecen bloques KI no triviales.
"""
from typing import List, Optional

import numpy as np

from ..block_mdp.emissions import DiscreteEmission
from ..block_mdp.mdp import LatentBlockMDP, RewardTable
from ..utils.seeding import derive_rng


def _sparse_dirichlet(rng: np.random.Generator, shape, sparsity: float) -> np.ndarray:
    rows = rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])
    mask = rng.random(rows.shape) < sparsity
    keep = np.argmax(rows, axis=-1)
    np.put_along_axis(mask, keep[..., None], False, axis=-1)
    rows = np.where(mask, 0.0, rows)
    return rows / rows.sum(axis=-1, keepdims=True)


def make_random_block_mdp(
    seed: int,
    horizon: Optional[int] = None,
    max_horizon: int = 4,
    max_states: int = 4,
    max_actions: int = 3,
    split_prob: float = 0.5,
    duplicate_prob: float = 0.3,
    observations_per_state: int = 2,
    sparsity: float = 0.3,
) -> LatentBlockMDP:
    rng = derive_rng(seed, "random-block-mdp")
    H = int(horizon) if horizon else int(rng.integers(2, max_horizon + 1))
    A = int(rng.integers(2, max_actions + 1))
    sizes = [int(rng.integers(1, max_states + 1)) for _ in range(H)]
    transitions: List[np.ndarray] = [
        _sparse_dirichlet(rng, (sizes[h], A, sizes[h + 1]), sparsity) for h in range(H - 1)
    ]

    for h in range(2, H + 1):
        if sizes[h - 1] >= max_states or rng.random() >= split_prob:
            continue
        u = int(rng.integers(sizes[h - 1]))
        f = float(rng.uniform(0.2, 0.8))
        prev = transitions[h - 2]
        column = prev[:, :, u].copy()
        prev = np.concatenate([prev, (1.0 - f) * column[:, :, None]], axis=2)
        prev[:, :, u] = f * column
        transitions[h - 2] = prev
        if h < H:
            nxt = transitions[h - 1]
            transitions[h - 1] = np.concatenate([nxt, nxt[u:u + 1]], axis=0)
        sizes[h - 1] += 1

    for h in range(1, H):
        if sizes[h - 1] < 2 or rng.random() >= duplicate_prob:
            continue
        src, dst = rng.choice(sizes[h - 1], size=2, replace=False)
        transitions[h - 1][dst] = transitions[h - 1][src]

    rewards = []
    for h in range(1, H + 1):
        n_next = 1 if h == H else sizes[h]
        shape = (sizes[h - 1], A, n_next)
        if h == H:
            rewards.append(RewardTable(rng.uniform(0.0, 1.0, size=shape), rng.uniform(0.2, 1.0, size=shape)))
        else:
            rewards.append(RewardTable(np.zeros(shape), np.ones(shape)))

    m = observations_per_state
    tables, names = [], []
    for h in range(1, H + 1):
        table = np.zeros((sizes[h - 1], sizes[h - 1] * m))
        for s in range(sizes[h - 1]):
            table[s, s * m:(s + 1) * m] = rng.dirichlet(np.ones(m))
        tables.append(table)
        names.append([f"o{h}_{k}" for k in range(sizes[h - 1] * m)])

    start = rng.dirichlet(np.ones(sizes[0]))
    return LatentBlockMDP(
        states=[[f"s{h}_{i}" for i in range(n)] for h, n in enumerate(sizes, start=1)],
        actions=[f"a{k}" for k in range(A)],
        start=start,
        transitions=transitions,
        rewards=rewards,
        emission=DiscreteEmission(tables, names),
        name=f"random-{seed}",
    )
