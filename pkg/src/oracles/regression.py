"""
Oráculo de regresión cuadrática con cuello de botella (REG).

El regresor devuelto siempre predice con la tabla w[φ_F(x), a, φ_B(x')], de
modo que dos entradas con la misma terna de índices reciben exactamente la
misma predicción. Celdas sin datos valen 1/2.

Backends:
- ``exact-erm``: sólo observaciones discretas; recorre una clase finita de
  pares (φ_F, φ_B) y devuelve el minimizador global del riesgo empírico;
- ``sgd-gumbel``: codificadores lineales con Gumbel-softmax entrenados por
  descenso de gradiente, en forma de dos modelos (un cuello de botella cada
  uno) o de un modelo conjunto; al final w se reajusta como media de etiquetas.
"""
import itertools
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..block_mdp.observations import DISCRETE, ObservationBatch
from ..utils.errors import ConfigurationError, EnumerationBudgetError, UnsupportedOperationError
from ..utils.logging_config import (
    get_logger,
    log_data_loaded,
    log_operation_start,
    log_operation_success,
    log_performance_warning,
    log_training_epoch,
    log_validation_warning,
)
from ..utils.seeding import derive_child_seed, derive_rng
from .bounds import reg_excess_risk_bound
from .dto import ContrastiveDataset, LossKind, RegBackend, RegConfigDTO, RegForm, TrainReport
from .encoders import Encoder, LinearEncoder, TableEncoder, encoder_from_artifact
from .network import HARD, PLAIN, SOFT, GumbelBottleneckNetwork, featurize
from .optim import make_optimizer

logger = get_logger("regression")

EMPTY_CELL = 0.5


class BottleneckRegressor:
    """f(x, a, x') = w(φ_F(x), a, φ_B(x'))"""

    def __init__(self, forward: Encoder, backward: Encoder, w: np.ndarray, counts: np.ndarray, backend: str):
        self.forward = forward
        self.backward = backward
        self.w = np.asarray(w, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.float64)
        self.backend = backend

    @property
    def capacity(self) -> Tuple[int, int]:
        """(M, N)"""
        return self.w.shape[0], self.w.shape[2]

    def cells(self, prev: ObservationBatch, actions: np.ndarray, next_obs: ObservationBatch) -> Tuple[np.ndarray, ...]:
        return self.forward.encode(prev), np.asarray(actions), self.backward.encode(next_obs)

    def predict(self, prev: ObservationBatch, actions: np.ndarray, next_obs: ObservationBatch) -> np.ndarray:
        return self.w[self.cells(prev, actions, next_obs)]

    def loss(self, dataset: ContrastiveDataset) -> float:
        if len(dataset) == 0:
            return float("nan")
        return float(np.mean((self.predict(dataset.prev, dataset.actions, dataset.next) - dataset.labels) ** 2))

    def to_artifact(self) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        fmeta, farrays = self.forward.to_artifact()
        bmeta, barrays = self.backward.to_artifact()
        arrays = {"w": self.w, "counts": self.counts}
        arrays.update({f"forward_{k}": v for k, v in farrays.items()})
        arrays.update({f"backward_{k}": v for k, v in barrays.items()})
        return {"backend": self.backend, "forward": fmeta, "backward": bmeta}, arrays

    @classmethod
    def from_artifact(cls, meta: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> "BottleneckRegressor":
        def side(prefix):
            return {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}

        return cls(
            encoder_from_artifact(meta["forward"], side("forward_")),
            encoder_from_artifact(meta["backward"], side("backward_")),
            arrays["w"],
            arrays["counts"],
            meta["backend"],
        )


def refit_table(
    forward: Encoder, backward: Encoder, dataset: ContrastiveDataset, n_actions: int
) -> Tuple[np.ndarray, np.ndarray]:
    """w por celda como media de etiquetas; 1/2 en celdas vacías"""
    shape = (forward.capacity, n_actions, backward.capacity)
    counts = np.zeros(shape)
    sums = np.zeros(shape)
    if len(dataset):
        cells = (forward.encode(dataset.prev), dataset.actions, backward.encode(dataset.next))
        np.add.at(counts, cells, 1.0)
        np.add.at(sums, cells, dataset.labels)
    w = np.divide(sums, counts, out=np.full(shape, EMPTY_CELL), where=counts > 0)
    return w, counts


# =============================================================================
# ERM EXACTO SOBRE UNA CLASE FINITA DE ABSTRACCIONES
# =============================================================================


@dataclass
class AbstractionClass:
    """Candidatos φ_F (etiquetas sobre símbolos de x) y φ_B (sobre símbolos de x')"""

    forward: List[np.ndarray]
    backward: List[np.ndarray]
    M: int
    N: int

    def __len__(self) -> int:
        return len(self.forward) * len(self.backward)

    def log_size(self) -> float:
        return float(np.log(len(self)))

    @staticmethod
    def _maps(n_symbols: int, capacity: int) -> List[np.ndarray]:
        return [np.array(labels, dtype=np.int64) for labels in itertools.product(range(capacity), repeat=n_symbols)]

    @classmethod
    def all_maps(cls, n_prev: int, n_next: int, M: int, N: int, budget: int) -> "AbstractionClass":
        """Todas las funciones símbolo -> índice a ambos lados"""
        total = M**n_prev * N**n_next
        if total > budget:
            raise EnumerationBudgetError("Pares de abstracciones (φ_F, φ_B)", total, budget)
        return cls(cls._maps(n_prev, M), cls._maps(n_next, N), M, N)


@dataclass
class CellStatistics:
    """Pesos y sumas de etiquetas por terna de símbolos (o, a, o')"""

    weight: np.ndarray
    label_sum: np.ndarray
    square_sum: np.ndarray

    @classmethod
    def from_dataset(cls, dataset: ContrastiveDataset, n_prev: int, n_next: int) -> "CellStatistics":
        shape = (n_prev, dataset.n_actions, n_next)
        weight, label_sum = np.zeros(shape), np.zeros(shape)
        cells = (dataset.prev.payload, dataset.actions, dataset.next.payload)
        np.add.at(weight, cells, 1.0)
        np.add.at(label_sum, cells, dataset.labels)
        square = np.zeros(shape)
        np.add.at(square, cells, dataset.labels**2)
        return cls(weight, label_sum, square)

    @classmethod
    def from_population(cls, real: np.ndarray, imposter: np.ndarray) -> "CellStatistics":
        """Distribución poblacional: masa de (o, a, o', y=1) y de (o, a, o', y=0)"""
        return cls(real + imposter, real.copy(), real.copy())


def _one_hot(labels: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((len(labels), width))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def erm_select(stats: CellStatistics, phi_class: AbstractionClass) -> Tuple[np.ndarray, np.ndarray, float]:
    """Par (φ_F, φ_B) de riesgo mínimo; empates al primer candidato"""
    best = (None, None, np.inf)
    total_square = float(stats.square_sum.sum())
    for fwd in phi_class.forward:
        F = _one_hot(fwd, phi_class.M)
        weight_f = np.einsum("oap,om->map", stats.weight, F)
        sum_f = np.einsum("oap,om->map", stats.label_sum, F)
        for bwd in phi_class.backward:
            B = _one_hot(bwd, phi_class.N)
            weight = weight_f @ B
            sums = sum_f @ B
            explained = np.divide(sums**2, weight, out=np.zeros_like(sums), where=weight > 0).sum()
            risk = total_square - explained
            if risk < best[2] - 1e-12:
                best = (fwd, bwd, risk)
    return best


def _table_from_stats(stats: CellStatistics, fwd: np.ndarray, bwd: np.ndarray, M: int, N: int) -> Tuple[np.ndarray, np.ndarray]:
    F, B = _one_hot(fwd, M), _one_hot(bwd, N)
    weight = np.einsum("oap,om,pn->man", stats.weight, F, B)
    sums = np.einsum("oap,om,pn->man", stats.label_sum, F, B)
    w = np.divide(sums, weight, out=np.full(weight.shape, EMPTY_CELL), where=weight > 0)
    return w, weight


def reg_fit_population(stats: CellStatistics, phi_class: AbstractionClass) -> BottleneckRegressor:
    """ERM exacto sobre una distribución poblacional dada por pesos de celda"""
    fwd, bwd, _ = erm_select(stats, phi_class)
    w, weight = _table_from_stats(stats, fwd, bwd, phi_class.M, phi_class.N)
    return BottleneckRegressor(TableEncoder(fwd, phi_class.M), TableEncoder(bwd, phi_class.N), w, weight, RegBackend.EXACT_ERM.value)


def _fit_exact(dataset, N, M, config, widths, phi_class) -> Tuple[BottleneckRegressor, TrainReport]:
    if dataset.prev.kind != DISCRETE or dataset.next.kind != DISCRETE:
        raise UnsupportedOperationError("El backend exact-erm requiere observaciones discretas")
    n_prev, n_next = widths
    phi_class = phi_class or AbstractionClass.all_maps(n_prev, n_next, M, N, config.abstraction_budget)
    if len(phi_class) > config.abstraction_budget:
        raise EnumerationBudgetError("Pares de abstracciones (φ_F, φ_B)", len(phi_class), config.abstraction_budget)
    stats = CellStatistics.from_dataset(dataset, n_prev, n_next)
    fwd, bwd, risk = erm_select(stats, phi_class)
    w, weight = _table_from_stats(stats, fwd, bwd, phi_class.M, phi_class.N)
    regressor = BottleneckRegressor(TableEncoder(fwd, phi_class.M), TableEncoder(bwd, phi_class.N), w, weight, RegBackend.EXACT_ERM.value)
    n = len(dataset)
    report = TrainReport(
        backend=RegBackend.EXACT_ERM.value,
        n_train=n,
        n_val=0,
        train_losses=[risk / n],
        final_val_loss=risk / n,
        generalization_bound=reg_excess_risk_bound(n, phi_class.N, dataset.n_actions, phi_class.log_size(), config.delta),
        extra={"candidates": len(phi_class)},
    )
    return regressor, report


# =============================================================================
# SGD CON GUMBEL-SOFTMAX
# =============================================================================


@dataclass
class _Arrays:
    prev: np.ndarray
    actions: np.ndarray
    next: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def rows(self, index):
        return self.prev[index], self.actions[index], self.next[index], self.labels[index]


def _arrays(dataset: ContrastiveDataset, widths: Tuple[int, int]) -> _Arrays:
    return _Arrays(
        featurize(dataset.prev, widths[0]),
        dataset.actions,
        featurize(dataset.next, widths[1]),
        dataset.labels.astype(np.float64),
    )


def label_baseline(train_labels: np.ndarray, val_labels: np.ndarray, loss: LossKind) -> float:
    """Pérdida de validación del predictor constante igual a la media de etiquetas de entrenamiento"""
    mean = float(np.clip(np.mean(train_labels), 1e-6, 1 - 1e-6)) if len(train_labels) else 0.5
    if loss == LossKind.SQUARE:
        return float(np.mean((val_labels - mean) ** 2))
    return float(-np.mean(val_labels * np.log(mean) + (1 - val_labels) * np.log(1 - mean)))


class EarlyStopping:
    """
    Parada temprana por paciencia sobre la pérdida de validación.

    Mientras la mejor pérdida no baje de ``baseline - margin`` la red sigue
    en la meseta del predictor constante y las épocas sin mejora no cuentan.
    """

    MIN_IMPROVEMENT = 1e-9

    def __init__(self, baseline: float, patience: int, margin: float = 0.0):
        self.baseline = float(baseline)
        self.patience = int(patience)
        self.margin = float(margin)
        self.best = np.inf
        self.best_epoch = -1
        self.waited = 0

    @property
    def escaped(self) -> bool:
        return self.best < self.baseline - self.margin

    @property
    def should_stop(self) -> bool:
        return self.waited >= self.patience

    def update(self, epoch: int, loss: float, counting: bool = True) -> bool:
        """Registrar la pérdida de una época; devuelve si es la mejor hasta ahora"""
        if loss < self.best - self.MIN_IMPROVEMENT:
            self.best, self.best_epoch, self.waited = loss, epoch, 0
            return True
        if counting and self.escaped:
            self.waited += 1
        return False


def train_network(
    network: GumbelBottleneckNetwork,
    train: _Arrays,
    val: _Arrays,
    config: RegConfigDTO,
    rng: np.random.Generator,
    name: str,
) -> Tuple[List[float], List[float], int]:
    """
    Pre-entrenamiento sin ruido Gumbel (softmax determinista) y entrenamiento
    con muestras suaves. La pérdida de validación se evalúa siempre con
    índices duros; se restauran los parámetros de la mejor época.
    """
    optimizer = make_optimizer(config.optimizer, config.learning_rate, config.momentum)
    held_out = val if len(val) else train
    stopping = EarlyStopping(label_baseline(train.labels, held_out.labels, config.loss), config.patience, config.escape_margin)
    train_losses: List[float] = []
    val_losses: List[float] = []
    best_params = network.snapshot()
    for epoch in range(config.pretrain_epochs + config.max_epochs):
        mode = PLAIN if epoch < config.pretrain_epochs else SOFT
        order = rng.permutation(len(train))
        running = 0.0
        for start in range(0, len(order), config.batch_size):
            xp, a, xn, y = train.rows(order[start:start + config.batch_size])
            noise = network.sample_noise(len(y), rng) if mode == SOFT else None
            loss, grads = network.loss_and_grads(xp, a, xn, y, noise, mode)
            optimizer.step(network.params, grads)
            running += loss * len(y)
        train_losses.append(running / max(len(train), 1))
        val_loss = network.loss(*held_out.rows(slice(None)), mode=HARD)
        val_losses.append(val_loss)
        log_training_epoch(logger, name, epoch, train_losses[-1], val_loss)
        if stopping.update(epoch, val_loss, counting=mode == SOFT):
            best_params = network.snapshot()
        if stopping.should_stop:
            break
    if not stopping.escaped:
        log_validation_warning(logger, name, "la validación no bajó de la línea base", baseline=stopping.baseline, best=stopping.best)
    network.restore(best_params)
    return train_losses, val_losses, max(stopping.best_epoch, 0)


def _build_network(config, widths, n_actions, prev_bottleneck, next_bottleneck, seed) -> GumbelBottleneckNetwork:
    return GumbelBottleneckNetwork(
        prev_dim=widths[0],
        next_dim=widths[1],
        n_actions=n_actions,
        prev_bottleneck=prev_bottleneck,
        next_bottleneck=next_bottleneck,
        hidden=config.hidden,
        temperature=config.temperature,
        loss=config.loss,
        seed=seed,
    )


def _fit_sgd(dataset, N, M, config, widths, seed) -> Tuple[BottleneckRegressor, TrainReport]:
    rng = derive_rng(seed, "reg-split")
    train_set, val_set = dataset.split(config.validation_fraction, rng)
    train, val = _arrays(train_set, widths), _arrays(val_set, widths)
    A = dataset.n_actions
    curves: Dict[str, Dict[str, Any]] = {}

    if config.form == RegForm.JOINT:
        net = _build_network(config, widths, A, M, N, seed)
        tl, vl, chosen = train_network(net, train, val, config, derive_rng(seed, "reg-train", "joint"), "reg-joint")
        curves["joint"] = {"train": tl, "val": vl, "chosen": chosen}
        forward_net = backward_net = net
    else:
        backward_net = _build_network(config, widths, A, None, N, derive_child_seed(seed, "init", "backward"))
        tl, vl, chosen = train_network(backward_net, train, val, config, derive_rng(seed, "reg-train", "backward"), "reg-backward")
        curves["backward"] = {"train": tl, "val": vl, "chosen": chosen}
        forward_net = _build_network(config, widths, A, M, None, derive_child_seed(seed, "init", "forward"))
        ftl, fvl, fchosen = train_network(forward_net, train, val, config, derive_rng(seed, "reg-train", "forward"), "reg-forward")
        curves["forward"] = {"train": ftl, "val": fvl, "chosen": fchosen}

    forward = LinearEncoder(forward_net.params["enc_prev_w"], forward_net.params["enc_prev_b"], widths[0])
    backward = LinearEncoder(backward_net.params["enc_next_w"], backward_net.params["enc_next_b"], widths[1])
    w, counts = refit_table(forward, backward, train_set, A)
    regressor = BottleneckRegressor(forward, backward, w, counts, RegBackend.SGD_GUMBEL.value)
    main = curves.get("backward", curves.get("joint"))
    used = np.unique(backward.encode(dataset.next))
    report = TrainReport(
        backend=RegBackend.SGD_GUMBEL.value,
        n_train=len(train_set),
        n_val=len(val_set),
        train_losses=main["train"],
        val_losses=main["val"],
        chosen_epoch=main["chosen"],
        final_val_loss=regressor.loss(val_set) if len(val_set) else regressor.loss(train_set),
        extra={
            "form": config.form.value,
            "curves": {k: {"chosen": v["chosen"], "epochs": len(v["train"])} for k, v in curves.items()},
            "backward_indices_used": int(len(used)),
            "degenerate_backward": bool(len(used) < 2),
        },
    )
    return regressor, report


def _feature_width(batch: ObservationBatch) -> int:
    if batch.kind == DISCRETE:
        return int(batch.payload.max()) + 1
    return batch.dim


def reg_fit(
    dataset: ContrastiveDataset,
    N: int,
    M: int,
    config: Optional[RegConfigDTO] = None,
    widths: Optional[Tuple[int, int]] = None,
    phi_class: Optional[AbstractionClass] = None,
    seed: int = 0,
) -> Tuple[BottleneckRegressor, TrainReport]:
    """
    Ajustar el regresor con cuello de botella sobre un dataset contrastivo.

    Args:
        dataset: transiciones etiquetadas de h-1 -> h
        N: capacidad de φ_B; M: capacidad de φ_F
        config: hiperparámetros y backend
        widths: tamaño de las características de x y x' (alfabeto si son discretas)
        phi_class: clase finita de abstracciones para ``exact-erm``
        seed: semilla de la partición, inicialización y ruido
    """
    config = config or RegConfigDTO()
    dataset.validate()
    if N < 1 or M < 1:
        raise ConfigurationError("Las capacidades N y M deben ser >= 1", field_path="N")
    if widths is None:
        widths = (_feature_width(dataset.prev), _feature_width(dataset.next))
    if dataset.next.kind == DISCRETE and N > widths[1]:
        log_validation_warning(logger, "N", "capacidad mayor que el número de observaciones", N=N, observations=widths[1])
    if dataset.prev.kind == DISCRETE and M > widths[0]:
        log_validation_warning(logger, "M", "capacidad mayor que el número de observaciones", M=M, observations=widths[0])
    started = time.time()
    log_operation_start(logger, "reg_fit", backend=config.backend.value, step=dataset.step, N=N, M=M)
    log_data_loaded(logger, "dataset contrastivo", len(dataset), positives=int(dataset.labels.sum()))
    if config.backend == RegBackend.EXACT_ERM:
        regressor, report = _fit_exact(dataset, N, M, config, widths, phi_class)
    else:
        regressor, report = _fit_sgd(dataset, N, M, config, widths, seed)
    duration = time.time() - started
    log_operation_success(logger, "reg_fit", duration, final_val_loss=report.final_val_loss)
    log_performance_warning(logger, "reg_fit", duration, threshold=300.0)
    return regressor, report
