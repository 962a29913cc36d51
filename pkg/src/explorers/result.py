"""
Resultados de exploración y su persistencia en el directorio de ejecución.

Cada artefacto es un .npz con los arrays y un manifiesto JSON con los
metadatos necesarios para reconstruirlo.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..block_mdp.policies import NonstationaryPolicy, decider_from_artifact
from ..psdp.cover import PolicyCover
from ..utils.logging_config import get_logger, log_data_loaded
from .abstraction import Abstraction, combine

logger = get_logger("result")

PathLike = Union[str, Path]
MANIFEST = "manifest.json"


def save_policy(policy: NonstationaryPolicy, path: Path) -> Dict[str, Any]:
    metas, arrays = [], {}
    for h, decider in enumerate(policy.deciders, start=1):
        meta, decider_arrays = decider.to_artifact()
        metas.append(meta)
        arrays.update({f"d{h}_{key}": value for key, value in decider_arrays.items()})
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **arrays)
    return {"file": path.name, "label": policy.label, "deciders": metas}


def load_policy(directory: Path, entry: Dict[str, Any]) -> NonstationaryPolicy:
    with np.load(directory / entry["file"]) as data:
        arrays = {key: data[key] for key in data.files}
    deciders = []
    for h, meta in enumerate(entry["deciders"], start=1):
        prefix = f"d{h}_"
        deciders.append(decider_from_artifact(meta, {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}))
    return NonstationaryPolicy(deciders, label=entry.get("label", ""))


def _save_abstraction(abstraction: Abstraction, directory: Path, side: str) -> Dict[str, Any]:
    entries = {}
    for h, (meta, arrays) in abstraction.to_artifacts().items():
        path = directory / f"{side}_h{h}.npz"
        np.savez(path, **arrays)
        entries[str(h)] = {"file": path.name, "meta": meta}
    return {"provenance": abstraction.provenance, "steps": entries}


def _load_abstraction(directory: Path, document: Dict[str, Any]) -> Abstraction:
    artifacts = {}
    for h, entry in document["steps"].items():
        with np.load(directory / entry["file"]) as data:
            artifacts[int(h)] = (entry["meta"], {key: data[key] for key in data.files})
    return Abstraction.from_artifacts(artifacts, document["provenance"])


@dataclass
class ExplorationResult:
    algorithm: str
    covers: Dict[int, PolicyCover]
    policy: NonstationaryPolicy
    forward: Optional[Abstraction] = None
    backward: Optional[Abstraction] = None
    iterations: List[Dict[str, Any]] = field(default_factory=list)
    episodes: int = 0
    flags: Dict[str, Any] = field(default_factory=dict)

    @property
    def abstraction(self) -> Optional[Abstraction]:
        """φ̄_h = (φ̂_F_h, φ̂_B_h) cuando hay abstracciones aprendidas"""
        if self.forward is None or self.backward is None:
            return self.backward
        return combine(self.forward, self.backward)

    def cover_policies(self) -> List[NonstationaryPolicy]:
        return [p for h in sorted(self.covers) for p in self.covers[h].policies]

    def save(self, directory: PathLike) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        covers = {}
        for h, cover in sorted(self.covers.items()):
            covers[str(h)] = {
                "alpha": cover.alpha,
                "policies": [save_policy(p, directory / f"cover_h{h}_{k}.npz") for k, p in enumerate(cover.policies)],
            }
        manifest = {
            "algorithm": self.algorithm,
            "episodes": self.episodes,
            "flags": self.flags,
            "iterations": self.iterations,
            "policy": save_policy(self.policy, directory / "policy.npz"),
            "covers": covers,
            "forward": _save_abstraction(self.forward, directory, "forward") if self.forward else None,
            "backward": _save_abstraction(self.backward, directory, "backward") if self.backward else None,
        }
        with open(directory / MANIFEST, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True, default=float)
        return directory

    @classmethod
    def load(cls, directory: PathLike) -> "ExplorationResult":
        directory = Path(directory)
        with open(directory / MANIFEST, "r", encoding="utf-8") as f:
            manifest = json.load(f)
        covers = {
            int(h): PolicyCover(int(h), [load_policy(directory, e) for e in entry["policies"]], entry["alpha"])
            for h, entry in manifest["covers"].items()
        }
        result = cls(
            algorithm=manifest["algorithm"],
            covers=covers,
            policy=load_policy(directory, manifest["policy"]),
            forward=_load_abstraction(directory, manifest["forward"]) if manifest.get("forward") else None,
            backward=_load_abstraction(directory, manifest["backward"]) if manifest.get("backward") else None,
            iterations=manifest.get("iterations", []),
            episodes=manifest.get("episodes", 0),
            flags=manifest.get("flags", {}),
        )
        log_data_loaded(logger, "resultado de exploración", sum(len(c) for c in covers.values()), path=str(directory))
        return result


@dataclass
class AbstractDynamics:
    """T̂_t(j | i, a) por transición t, con los conteos; filas sin datos en NaN"""

    counts: Dict[int, np.ndarray]

    def tensor(self, t: int) -> np.ndarray:
        counts = self.counts[t]
        totals = counts.sum(axis=2, keepdims=True)
        return np.divide(counts, totals, out=np.full(counts.shape, np.nan), where=totals > 0)

    @property
    def tensors(self) -> Dict[int, np.ndarray]:
        return {t: self.tensor(t) for t in self.counts}

    def populated(self, t: int) -> np.ndarray:
        """Máscara (i, a) de filas con datos"""
        return self.counts[t].sum(axis=2) > 0

    def row_sum_error(self) -> float:
        worst = 0.0
        for t in self.counts:
            rows = self.tensor(t)[self.populated(t)]
            if rows.size:
                worst = max(worst, float(np.abs(rows.sum(axis=1) - 1.0).max()))
        return worst

    def save(self, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, **{f"t{t}_counts": c for t, c in self.counts.items()})
        return path

    @classmethod
    def load(cls, path: PathLike) -> "AbstractDynamics":
        with np.load(path) as data:
            return cls({int(key[1:].split("_")[0]): data[key] for key in data.files})

