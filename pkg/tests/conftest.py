from pathlib import Path

import numpy as np
import pytest

from src.block_mdp.emissions import DiscreteEmission
from src.block_mdp.mdp import LatentBlockMDP, RewardTable
from src.envs.combolock import make_combolock

MDPS_DIR = Path(__file__).resolve().parent.parent / "config" / "mdps"


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="ejecutar experimentos lentos")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="necesita --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def one_symbol_emission(states_per_step):
    """Un símbolo por estado: observación = estado"""
    tables = [np.eye(n) for n in states_per_step]
    names = [[f"x{h}_{i}" for i in range(n)] for h, n in enumerate(states_per_step, start=1)]
    return DiscreteEmission(tables, names)


def zero_rewards(states_per_step, n_actions):
    H = len(states_per_step)
    out = []
    for h in range(H):
        n_next = 1 if h == H - 1 else states_per_step[h + 1]
        shape = (states_per_step[h], n_actions, n_next)
        out.append(RewardTable(np.zeros(shape), np.ones(shape)))
    return out


@pytest.fixture
def two_step_mdp():
    """
    Dos estados por paso, dos acciones. Desde s1 la acción 1 lleva a t1 con
    probabilidad 0.9; desde s2 la acción 0 lleva a t1 con probabilidad 0.7.
    Recompensa 1 al actuar con 1 en t1; el óptimo vale (0.9 + 0.7) / 2 = 0.8.
    """
    T = np.zeros((2, 2, 2))
    T[0, 0] = [0.2, 0.8]
    T[0, 1] = [0.9, 0.1]
    T[1, 0] = [0.7, 0.3]
    T[1, 1] = [0.4, 0.6]
    rewards = zero_rewards([2, 2], 2)
    scale = np.zeros((2, 2, 1))
    scale[0, 1, 0] = 1.0
    rewards[1] = RewardTable(scale, np.ones_like(scale))
    return LatentBlockMDP(
        states=[["s1", "s2"], ["t1", "t2"]],
        actions=["a0", "a1"],
        start=[0.5, 0.5],
        transitions=[T],
        rewards=rewards,
        emission=one_symbol_emission([2, 2]),
        name="two-step",
    )


@pytest.fixture
def small_lock():
    return make_combolock(3, 2, seed=7, emission="discrete")


@pytest.fixture
def gaussian_lock():
    return make_combolock(4, 3, seed=1)
