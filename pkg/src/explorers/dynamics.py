"""
Recuperación de la dinámica abstracta por frecuencias empíricas.
"""
from typing import Optional

import numpy as np

from ..block_mdp.environment import EnvironmentAccess
from ..psdp.cover import Covers, cover_at
from ..psdp.rollout import sample_transitions
from ..utils.logging_config import get_logger, log_data_loaded, log_validation_warning
from .abstraction import Abstraction
from .result import AbstractDynamics

logger = get_logger("abstract_dynamics")


def recover_dynamics(
    env: EnvironmentAccess,
    covers: Covers,
    abstraction: Abstraction,
    n: int,
    seed: int = 0,
    steps: Optional[range] = None,
) -> AbstractDynamics:
    """
    T̂_t(j | i, a) = #(φ̄_t(x) = i, a, φ̄_{t+1}(x') = j) / #(φ̄_t(x) = i, a),
    con n transiciones Unf(Ψ_t) ∘ Unf(𝒜) por transición t.
    """
    steps = steps or range(1, env.horizon)
    counts = {}
    for t in steps:
        sample = sample_transitions(env, cover_at(covers, t).policies, t, n, seed, "dynamics", t)
        i = abstraction.decode(sample.prev)
        j = abstraction.decode(sample.next)
        table = np.zeros((abstraction.capacity(t), env.n_actions, abstraction.capacity(t + 1)))
        np.add.at(table, (i, sample.actions, j), 1.0)
        counts[t] = table
        log_data_loaded(logger, "transiciones abstractas", n, t=t, populated_rows=int((table.sum(axis=2) > 0).sum()))
    dynamics = AbstractDynamics(counts)
    error = dynamics.row_sum_error()
    if error > 1e-12:
        log_validation_warning(logger, "dynamics", "filas que no suman 1", error=error)
    return dynamics
