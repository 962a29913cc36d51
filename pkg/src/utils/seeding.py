"""
Streams aleatorios derivados.

Cada stream se identifica por la semilla maestra y una tupla de claves
semánticas (fase, paso, índice, bloque de episodios). Nunca se usa el índice
de worker como clave: el resultado no depende del paralelismo.
"""
import zlib
from typing import Iterator, Tuple, Union

import numpy as np

Key = Union[int, str]

# Episodios por bloque de muestreo vectorizado
EPISODE_CHUNK = 4096


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"Clave de semilla negativa: {key}")
    return int(key)


def derive_seed_sequence(master_seed: int, *keys: Key) -> np.random.SeedSequence:
    """SeedSequence determinista para (semilla maestra, claves...)"""
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(_key_to_int(k) for k in keys))


def derive_rng(master_seed: int, *keys: Key) -> np.random.Generator:
    """Generator de numpy para (semilla maestra, claves...)"""
    return np.random.default_rng(derive_seed_sequence(master_seed, *keys))


def derive_child_seed(master_seed: int, *keys: Key) -> int:
    """Semilla entera derivada, útil para pasar a sub-tareas"""
    return int(derive_seed_sequence(master_seed, *keys).generate_state(1, dtype=np.uint32)[0])


def episode_chunks(n: int, chunk: int = EPISODE_CHUNK) -> Iterator[Tuple[int, int, int]]:
    """Itera (índice de bloque, inicio, tamaño) cubriendo n episodios"""
    for index, start in enumerate(range(0, n, chunk)):
        yield index, start, min(chunk, n - start)
