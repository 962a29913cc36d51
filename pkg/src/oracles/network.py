"""
Regresor con cuello de botella categórico Gumbel-softmax y retropropagación manual.

f(x, a, x') = σ(W2 · leaky(W1 · [z(x), onehot(a), z(x')] + b1) + b2)

Cada lado pasa por un codificador lineal seguido de Gumbel-softmax sobre k
categorías, o por la identidad si ese lado no tiene cuello de botella.
Entrenamiento con muestras suaves (ruido fijo por minibatch); evaluación con
el one-hot del argmax de los logits, de modo que la predicción sólo depende de
los índices.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.special import expit, softmax

from ..block_mdp.observations import DISCRETE, ObservationBatch
from ..utils.seeding import derive_rng
from .dto import LossKind

LEAKY_SLOPE = 0.01
SOFT, PLAIN, HARD = "soft", "plain", "hard"
SIDES = ("prev", "next")


def featurize(batch: ObservationBatch, width: int) -> np.ndarray:
    """Matriz de características: one-hot para símbolos, el vector tal cual si no"""
    if batch.kind == DISCRETE:
        out = np.zeros((len(batch), width))
        out[np.arange(len(batch)), batch.payload] = 1.0
        return out
    return np.asarray(batch.payload, dtype=np.float64)


def leaky_relu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, LEAKY_SLOPE * x)


@dataclass
class _Cache:
    x: Dict[str, np.ndarray]
    z: Dict[str, np.ndarray]
    one_hot: np.ndarray
    head_in: np.ndarray
    pre: np.ndarray
    act: np.ndarray
    out: np.ndarray
    p: np.ndarray
    mode: str


class GumbelBottleneckNetwork:
    """
    Args:
        prev_dim, next_dim: dimensión de las características de x y x'
        n_actions: |A|
        prev_bottleneck: M, o None para pasar x sin codificar
        next_bottleneck: N, o None para pasar x' sin codificar
        hidden: unidades de la capa oculta
        temperature: temperatura de Gumbel-softmax
        loss: cuadrática o entropía cruzada
        seed: semilla de la inicialización
    """

    def __init__(
        self,
        prev_dim: int,
        next_dim: int,
        n_actions: int,
        prev_bottleneck: Optional[int] = None,
        next_bottleneck: Optional[int] = None,
        hidden: int = 56,
        temperature: float = 1.0,
        loss: LossKind = LossKind.SQUARE,
        seed: int = 0,
    ):
        self.dims = {"prev": int(prev_dim), "next": int(next_dim)}
        self.bottleneck = {"prev": prev_bottleneck, "next": next_bottleneck}
        self.n_actions = int(n_actions)
        self.hidden = int(hidden)
        self.temperature = float(temperature)
        self.loss_kind = LossKind(loss)
        rng = derive_rng(seed, "network-init")
        self.params: Dict[str, np.ndarray] = {}
        widths = {}
        for side in SIDES:
            k = self.bottleneck[side]
            if k is None:
                widths[side] = self.dims[side]
                continue
            self.params[f"enc_{side}_w"] = rng.normal(0.0, 1.0 / np.sqrt(self.dims[side]), size=(self.dims[side], k))
            self.params[f"enc_{side}_b"] = np.zeros(k)
            widths[side] = k
        head_in = widths["prev"] + self.n_actions + widths["next"]
        self.params["w1"] = rng.normal(0.0, np.sqrt(2.0 / head_in), size=(head_in, self.hidden))
        self.params["b1"] = np.zeros(self.hidden)
        self.params["w2"] = rng.normal(0.0, np.sqrt(1.0 / self.hidden), size=(self.hidden, 1))
        self.params["b2"] = np.zeros(1)

    # ------------------------------------------------------------------
    # Codificadores
    # ------------------------------------------------------------------
    def logits(self, side: str, x: np.ndarray) -> np.ndarray:
        return x @ self.params[f"enc_{side}_w"] + self.params[f"enc_{side}_b"]

    def encode(self, side: str, x: np.ndarray) -> np.ndarray:
        """Índice de categoría (argmax de logits, empates al menor índice)"""
        if self.bottleneck[side] is None:
            raise ValueError(f"El lado {side} no tiene cuello de botella")
        return np.argmax(self.logits(side, x), axis=1)

    def sample_noise(self, n: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        return {side: rng.gumbel(size=(n, self.bottleneck[side])) for side in SIDES if self.bottleneck[side] is not None}

    def _code(self, side: str, x: np.ndarray, noise: Optional[Dict[str, np.ndarray]], mode: str) -> np.ndarray:
        k = self.bottleneck[side]
        if k is None:
            return x
        logits = self.logits(side, x)
        if mode == HARD:
            out = np.zeros_like(logits)
            out[np.arange(len(x)), np.argmax(logits, axis=1)] = 1.0
            return out
        if mode == SOFT:
            logits = logits + noise[side]
        return softmax(logits / self.temperature, axis=1)

    # ------------------------------------------------------------------
    # Paso hacia delante / atrás
    # ------------------------------------------------------------------
    def forward(
        self,
        x_prev: np.ndarray,
        actions: np.ndarray,
        x_next: np.ndarray,
        noise: Optional[Dict[str, np.ndarray]] = None,
        mode: str = HARD,
    ) -> Tuple[np.ndarray, _Cache]:
        x = {"prev": x_prev, "next": x_next}
        z = {side: self._code(side, x[side], noise, mode) for side in SIDES}
        one_hot = np.zeros((len(actions), self.n_actions))
        one_hot[np.arange(len(actions)), actions] = 1.0
        head_in = np.concatenate([z["prev"], one_hot, z["next"]], axis=1)
        pre = head_in @ self.params["w1"] + self.params["b1"]
        act = leaky_relu(pre)
        out = (act @ self.params["w2"] + self.params["b2"])[:, 0]
        p = expit(out)
        return p, _Cache(x, z, one_hot, head_in, pre, act, out, p, mode)

    def predict(self, x_prev: np.ndarray, actions: np.ndarray, x_next: np.ndarray) -> np.ndarray:
        return self.forward(x_prev, actions, x_next, mode=HARD)[0]

    def loss_from_cache(self, cache: _Cache, labels: np.ndarray) -> float:
        if self.loss_kind == LossKind.SQUARE:
            return float(np.mean((cache.p - labels) ** 2))
        return float(np.mean(np.logaddexp(0.0, cache.out) - labels * cache.out))

    def loss(self, x_prev, actions, x_next, labels, noise=None, mode: str = HARD) -> float:
        _, cache = self.forward(x_prev, actions, x_next, noise, mode)
        return self.loss_from_cache(cache, labels)

    def backward(self, cache: _Cache, labels: np.ndarray) -> Dict[str, np.ndarray]:
        n = len(labels)
        if self.loss_kind == LossKind.SQUARE:
            d_out = 2.0 * (cache.p - labels) * cache.p * (1.0 - cache.p) / n
        else:
            d_out = (cache.p - labels) / n
        grads: Dict[str, np.ndarray] = {}
        grads["w2"] = cache.act.T @ d_out[:, None]
        grads["b2"] = np.array([d_out.sum()])
        d_act = d_out[:, None] @ self.params["w2"].T
        d_pre = d_act * np.where(cache.pre > 0, 1.0, LEAKY_SLOPE)
        grads["w1"] = cache.head_in.T @ d_pre
        grads["b1"] = d_pre.sum(axis=0)
        d_head = d_pre @ self.params["w1"].T
        width_prev = cache.z["prev"].shape[1]
        d_z = {"prev": d_head[:, :width_prev], "next": d_head[:, width_prev + self.n_actions:]}
        for side in SIDES:
            if self.bottleneck[side] is None:
                continue
            if cache.mode == HARD:
                raise ValueError("No hay gradiente a través del argmax; entrenar con muestras suaves")
            z = cache.z[side]
            d_logits = z * (d_z[side] - (d_z[side] * z).sum(axis=1, keepdims=True)) / self.temperature
            grads[f"enc_{side}_w"] = cache.x[side].T @ d_logits
            grads[f"enc_{side}_b"] = d_logits.sum(axis=0)
        return grads

    def loss_and_grads(self, x_prev, actions, x_next, labels, noise=None, mode: str = SOFT) -> Tuple[float, Dict[str, np.ndarray]]:
        _, cache = self.forward(x_prev, actions, x_next, noise, mode)
        return self.loss_from_cache(cache, labels), self.backward(cache, labels)

    # ------------------------------------------------------------------
    # Estado
    # ------------------------------------------------------------------
    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}

    def restore(self, params: Dict[str, np.ndarray]) -> None:
        self.params = {name: value.copy() for name, value in params.items()}

    def metadata(self) -> Dict:
        return {
            "dims": self.dims,
            "bottleneck": self.bottleneck,
            "n_actions": self.n_actions,
            "hidden": self.hidden,
            "temperature": self.temperature,
            "loss": self.loss_kind.value,
        }
