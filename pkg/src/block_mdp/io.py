"""
Carga y guardado de MDPs tabulares (YAML) y de trayectorias (JSON lines).
"""
import json
from pathlib import Path
from typing import Iterable, List, Union

import numpy as np
import yaml
from pydantic import ValidationError

from ..utils.errors import ConfigurationError, MalformedMDPError, UnsupportedOperationError
from ..utils.logging_config import get_logger, log_data_loaded
from .dto import EmissionDTO, MdpDocumentDTO, RewardDTO, TransitionDTO
from .emissions import DiscreteEmission
from .mdp import LatentBlockMDP, RewardTable
from .sampling import TrajectoryLog

logger = get_logger("mdp_io")

PathLike = Union[str, Path]


def _field_path(error: ValidationError) -> str:
    first = error.errors()[0]
    return ".".join(str(part) for part in first["loc"])


def mdp_from_document(document: dict) -> LatentBlockMDP:
    """Construir un LatentBlockMDP desde un diccionario ya parseado"""
    try:
        doc = MdpDocumentDTO.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(e.errors()[0]["msg"], field_path=_field_path(e)) from e

    H, A = doc.horizon, len(doc.actions)
    action_index = {name: i for i, name in enumerate(doc.actions)}
    state_index = [{name: i for i, name in enumerate(step)} for step in doc.states]

    def lookup(h: int, name: str) -> int:
        try:
            return state_index[h - 1][name]
        except (KeyError, IndexError):
            raise MalformedMDPError(f"Estado desconocido {name!r} en el paso {h}") from None

    start = np.zeros(len(doc.states[0]))
    for name, p in doc.start.items():
        start[lookup(1, name)] = p

    transitions = [np.zeros((len(doc.states[h - 1]), A, len(doc.states[h]))) for h in range(1, H)]
    for item in doc.transitions:
        s, a = lookup(item.step, item.state), action_index[item.action]
        for name, p in item.next.items():
            transitions[item.step - 1][s, a, lookup(item.step + 1, name)] = p

    rewards = []
    for h in range(1, H + 1):
        n_next = 1 if h == H else len(doc.states[h])
        rewards.append(RewardTable(np.zeros((len(doc.states[h - 1]), A, n_next)), np.ones((len(doc.states[h - 1]), A, n_next))))
    for item in doc.rewards:
        table = rewards[item.step - 1]
        s, a = lookup(item.step, item.state), action_index[item.action]
        s_next = 0 if item.step == H else lookup(item.step + 1, item.next)
        scale, prob = np.array(table.scale), np.array(table.prob)
        scale[s, a, s_next], prob[s, a, s_next] = item.scale, item.prob
        rewards[item.step - 1] = RewardTable(scale, prob)

    observation_names: List[List[str]] = [[] for _ in range(H)]
    for item in doc.emissions:
        for symbol in item.observations:
            if symbol not in observation_names[item.step - 1]:
                observation_names[item.step - 1].append(symbol)
    tables = [np.zeros((len(doc.states[h]), len(observation_names[h]))) for h in range(H)]
    for item in doc.emissions:
        s = lookup(item.step, item.state)
        for symbol, p in item.observations.items():
            tables[item.step - 1][s, observation_names[item.step - 1].index(symbol)] = p

    return LatentBlockMDP(
        states=doc.states,
        actions=doc.actions,
        start=start,
        transitions=transitions,
        rewards=rewards,
        emission=DiscreteEmission(tables, observation_names),
        name=doc.name,
    )


def mdp_to_document(mdp: LatentBlockMDP) -> dict:
    """Documento serializable de un MDP con emisión discreta"""
    if not isinstance(mdp.emission, DiscreteEmission):
        raise UnsupportedOperationError("Sólo los MDPs de emisión discreta tienen documento tabular")
    H = mdp.horizon
    transitions, rewards, emissions = [], [], []
    for h in range(1, H + 1):
        names = mdp.state_names(h)
        next_names = mdp.state_names(h + 1) if h < H else [None]
        table = mdp.reward_table(h)
        for s, state in enumerate(names):
            for a, action in enumerate(mdp.actions):
                if h < H:
                    row = mdp.transitions[h - 1][s, a]
                    nxt = {next_names[u]: float(p) for u, p in enumerate(row) if p > 0}
                    transitions.append(TransitionDTO(step=h, state=state, action=action, next=nxt).model_dump())
                for u, target in enumerate(next_names):
                    if table.scale[s, a, u] != 0:
                        rewards.append(
                            RewardDTO(
                                step=h, state=state, action=action, next=target,
                                scale=float(table.scale[s, a, u]), prob=float(table.prob[s, a, u]),
                            ).model_dump()
                        )
            symbols = mdp.emission.observation_names[h - 1]
            probs = mdp.emission.table(h)[s]
            emissions.append(
                EmissionDTO(step=h, state=state, observations={symbols[o]: float(p) for o, p in enumerate(probs) if p > 0}).model_dump()
            )
    return {
        "name": mdp.name,
        "horizon": H,
        "actions": list(mdp.actions),
        "states": [list(mdp.state_names(h)) for h in range(1, H + 1)],
        "start": {name: float(p) for name, p in zip(mdp.state_names(1), mdp.start) if p > 0},
        "transitions": transitions,
        "rewards": rewards,
        "emissions": emissions,
    }


def load_mdp(path: PathLike) -> LatentBlockMDP:
    """Cargar un MDP desde un documento YAML"""
    with open(path, "r", encoding="utf-8") as f:
        document = yaml.safe_load(f)
    mdp = mdp_from_document(document)
    log_data_loaded(logger, "MDP tabular", sum(len(s) for s in mdp.states), path=str(path), name=mdp.name)
    return mdp


def save_mdp(mdp: LatentBlockMDP, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(mdp_to_document(mdp), f, sort_keys=False, allow_unicode=True)
    return path


def write_trajectories(logs: Iterable[TrajectoryLog], path: PathLike) -> int:
    """Escribir trayectorias como JSON lines; devuelve cuántas se escribieron"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for log in logs:
            f.write(json.dumps(log.to_record(), sort_keys=True) + "\n")
            count += 1
    return count


def read_trajectories(path: PathLike) -> List[TrajectoryLog]:
    with open(path, "r", encoding="utf-8") as f:
        return [TrajectoryLog.from_record(json.loads(line)) for line in f if line.strip()]
