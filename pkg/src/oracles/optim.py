"""
Optimizadores sobre diccionarios de parámetros numpy (actualización in-place).
"""
from typing import Dict

import numpy as np

from ..utils.errors import ConfigurationError
from .dto import OptimizerKind

Params = Dict[str, np.ndarray]


class Optimizer:
    def __init__(self, lr: float):
        self.lr = float(lr)

    def step(self, params: Params, grads: Params) -> None:
        raise NotImplementedError


class SGDMomentum(Optimizer):
    """v <- μ v + g; θ <- θ - lr v"""

    def __init__(self, lr: float, momentum: float = 0.9):
        super().__init__(lr)
        self.momentum = float(momentum)
        self.velocity: Params = {}

    def step(self, params: Params, grads: Params) -> None:
        for name, grad in grads.items():
            v = self.velocity.get(name)
            v = grad.copy() if v is None else self.momentum * v + grad
            self.velocity[name] = v
            params[name] -= self.lr * v


class Adam(Optimizer):
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m: Params = {}
        self.v: Params = {}
        self.t = 0

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        for name, grad in grads.items():
            m = self.beta1 * self.m.get(name, np.zeros_like(grad)) + (1 - self.beta1) * grad
            v = self.beta2 * self.v.get(name, np.zeros_like(grad)) + (1 - self.beta2) * grad**2
            self.m[name], self.v[name] = m, v
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            params[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind: OptimizerKind, lr: float, momentum: float = 0.9) -> Optimizer:
    if kind == OptimizerKind.SGD_MOMENTUM:
        return SGDMomentum(lr, momentum)
    if kind == OptimizerKind.ADAM:
        return Adam(lr)
    raise ConfigurationError(f"Optimizador desconocido: {kind}", field_path="optimizer")
