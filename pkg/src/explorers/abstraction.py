"""
Abstracciones por paso: decodificadores observación -> índice.

Procedencia ``oracle``: etiquetas de bloque de una partición KI aplicadas al
estado latente (g*). Es el único decodificador que lee latentes y sólo se usa
como entrada oráculo de ExpOracle y en diagnósticos.
Procedencia ``learned``: codificadores φ̂ del regresor con cuello de botella.
"""
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from ..block_mdp.emissions import DiscreteEmission
from ..block_mdp.observations import ObservationBatch, g_star
from ..kinematics.partition import DEFAULT_TOL, backward_ki_partition
from ..oracles.encoders import Artifact, ConstantEncoder, Encoder, TableEncoder, encoder_from_artifact
from ..utils.errors import ConfigurationError, UnsupportedOperationError

ORACLE, LEARNED = "oracle", "learned"


class OracleDecoder(Encoder):
    """φ*(x) = etiqueta del bloque de g*(x)"""

    kind = "oracle"

    def __init__(self, labels: np.ndarray, capacity: Optional[int] = None):
        labels = np.asarray(labels, dtype=np.int64)
        super().__init__(int(labels.max()) + 1 if capacity is None else capacity)
        self.labels = labels

    def encode(self, batch: ObservationBatch) -> np.ndarray:
        return self.labels[g_star(batch)]

    def to_artifact(self) -> Artifact:
        return {"kind": self.kind, "capacity": self.capacity}, {"labels": self.labels}


class CombinedDecoder(Encoder):
    """φ̄ = (φ̂_F, φ̂_B) codificado como φ̂_F·|B| + φ̂_B"""

    kind = "combined"

    def __init__(self, forward: Encoder, backward: Encoder):
        super().__init__(forward.capacity * backward.capacity)
        self.forward = forward
        self.backward = backward

    def encode(self, batch: ObservationBatch) -> np.ndarray:
        return self.forward.encode(batch) * self.backward.capacity + self.backward.encode(batch)

    def to_artifact(self) -> Artifact:
        fmeta, farrays = self.forward.to_artifact()
        bmeta, barrays = self.backward.to_artifact()
        arrays = {f"forward_{k}": v for k, v in farrays.items()}
        arrays.update({f"backward_{k}": v for k, v in barrays.items()})
        return {"kind": self.kind, "forward": fmeta, "backward": bmeta}, arrays


def decoder_from_artifact(meta: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> Encoder:
    if meta["kind"] == OracleDecoder.kind:
        return OracleDecoder(arrays["labels"], meta["capacity"])
    if meta["kind"] == CombinedDecoder.kind:
        def side(prefix):
            return {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}

        return CombinedDecoder(
            decoder_from_artifact(meta["forward"], side("forward_")),
            decoder_from_artifact(meta["backward"], side("backward_")),
        )
    return encoder_from_artifact(meta, arrays)


class Abstraction:
    """Decodificador por paso con su capacidad y procedencia"""

    def __init__(self, decoders: Mapping[int, Encoder], provenance: str):
        self.decoders: Dict[int, Encoder] = dict(decoders)
        self.provenance = provenance

    @property
    def steps(self) -> Tuple[int, ...]:
        return tuple(sorted(self.decoders))

    def decoder(self, h: int) -> Encoder:
        if h not in self.decoders:
            raise ConfigurationError(f"La abstracción no cubre el paso {h}")
        return self.decoders[h]

    def capacity(self, h: int) -> int:
        return self.decoder(h).capacity

    def decode(self, batch: ObservationBatch) -> np.ndarray:
        return self.decoder(batch.timestep).encode(batch)

    def to_artifacts(self) -> Dict[int, Artifact]:
        return {h: decoder.to_artifact() for h, decoder in self.decoders.items()}

    @classmethod
    def from_artifacts(cls, artifacts: Mapping[int, Artifact], provenance: str) -> "Abstraction":
        return cls({h: decoder_from_artifact(meta, arrays) for h, (meta, arrays) in artifacts.items()}, provenance)


def oracle_abstraction(mdp, partitions: Mapping[int, Any]) -> Abstraction:
    """Abstracción oráculo a partir de particiones de S_h"""
    return Abstraction(
        {h: OracleDecoder(partition.labels(), partition.n_blocks) for h, partition in partitions.items()}, ORACLE
    )


def backward_ki_abstraction(mdp, tol: float = DEFAULT_TOL) -> Abstraction:
    """φ* de ExpOracle: bloques de la partición backward KI en cada paso"""
    return oracle_abstraction(mdp, {h: backward_ki_partition(mdp, h, tol) for h in range(1, mdp.horizon + 1)})


def combine(forward: Abstraction, backward: Abstraction) -> Abstraction:
    """φ̄_h = (φ̂_F_h, φ̂_B_h); lados ausentes se toman constantes"""
    steps = sorted(set(forward.steps) | set(backward.steps))
    decoders = {
        h: CombinedDecoder(
            forward.decoders.get(h, ConstantEncoder()), backward.decoders.get(h, ConstantEncoder())
        )
        for h in steps
    }
    return Abstraction(decoders, LEARNED)


def latent_membership(decoder: Encoder, mdp, h: int) -> np.ndarray:
    """P(φ(x) = i | s) por estado del paso h, forma (n_h, capacidad)"""
    if isinstance(decoder, OracleDecoder):
        out = np.zeros((mdp.n_states(h), decoder.capacity))
        out[np.arange(len(decoder.labels)), decoder.labels] = 1.0
        return out
    if isinstance(decoder, ConstantEncoder):
        return np.ones((mdp.n_states(h), 1))
    if isinstance(decoder, TableEncoder) and isinstance(mdp.emission, DiscreteEmission):
        one_hot = np.zeros((len(decoder.table), decoder.capacity))
        one_hot[np.arange(len(decoder.table)), decoder.table] = 1.0
        return mdp.emission.table(h) @ one_hot
    raise UnsupportedOperationError(f"Pertenencia latente no disponible para el decodificador {decoder.kind}")
