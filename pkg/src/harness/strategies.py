"""
Estrategias de ejecución usando el patrón Strategy: una por algoritmo
seleccionable, más la fábrica de entornos que todas comparten.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Type

import numpy as np
import yaml

from ..block_mdp.dynamics import eta_exact, optimal_value, value_of
from ..block_mdp.environment import EnvironmentAccess
from ..block_mdp.io import load_mdp, save_mdp
from ..block_mdp.mdp import LatentBlockMDP
from ..block_mdp.rewards import ExternalReward
from ..envs.analyses import autoencoder_monte_carlo, counterexample_report
from ..envs.combolock import lock_summary, make_combolock
from ..envs.counterexamples import make_fig4a, make_fig4b_chain, make_noisy_bits
from ..envs.fig1 import make_fig1
from ..envs.random_mdp import make_random_block_mdp
from ..explorers.abstraction import backward_ki_abstraction
from ..explorers.dynamics import recover_dynamics
from ..explorers.evaluation import best_cover_visitation, dynamics_tv, evaluate_backward_partitions
from ..explorers.exp_oracle import emit, exp_oracle, final_policy, level_summary
from ..explorers.homer import homer
from ..explorers.result import ExplorationResult
from ..kinematics.canonical import canonicalize
from ..kinematics.report import ki_report, write_report
from ..psdp.cover import best_visitation, homing_covers
from ..utils.errors import ConfigurationError, UnsupportedOperationError
from ..utils.logging_config import get_logger, log_metric
from ..utils.seeding import derive_child_seed
from .dto import AlgorithmType, EnvironmentConfigDTO, EnvironmentKind, ExperimentConfigDTO
from .metrics import MetricsStream

logger = get_logger("strategies")

# =============================================================================
# ENTORNOS
# =============================================================================


def build_environment(environment: EnvironmentConfigDTO, seed: int = 0) -> LatentBlockMDP:
    """Construir el Block MDP descrito por la configuración"""
    params = dict(environment.params)
    try:
        if environment.kind == EnvironmentKind.COMBOLOCK:
            H = int(params.pop("H", 10))
            K = int(params.pop("K", 4))
            return make_combolock(H, K, int(params.pop("seed", seed)), **params)
        if environment.kind == EnvironmentKind.FIG1_LEFT:
            return make_fig1("left")
        if environment.kind == EnvironmentKind.FIG1_RIGHT:
            return make_fig1("right")
        if environment.kind == EnvironmentKind.FIG4A:
            return make_fig4a()
        if environment.kind == EnvironmentKind.FIG4B:
            return make_fig4b_chain(int(params.get("depth", 3)))
        if environment.kind == EnvironmentKind.NOISY_BITS:
            return make_noisy_bits(int(params.get("d", 16)), float(params.get("state_prob", 0.8)))
        if environment.kind == EnvironmentKind.RANDOM:
            return make_random_block_mdp(int(params.pop("seed", seed)), **params)
        return load_mdp(environment.path)
    except TypeError as e:
        raise ConfigurationError(f"Parámetros no válidos para {environment.kind.value}: {e}", field_path="environment.params") from e


# =============================================================================
# CONTEXTO Y RESULTADO
# =============================================================================


@dataclass
class RunContext:
    """Todo lo que una estrategia necesita para ejecutarse"""

    config: ExperimentConfigDTO
    mdp: LatentBlockMDP
    run_dir: Path
    metrics: MetricsStream

    def environment_access(self) -> EnvironmentAccess:
        return EnvironmentAccess(self.mdp, self.config.budget.max_episodes)


@dataclass
class StrategyOutcome:
    summary: Dict[str, Any]
    result: Optional[ExplorationResult] = None
    tables: Dict[str, Any] = field(default_factory=dict)


class AlgorithmStrategy(ABC):
    """Interfaz base de las estrategias"""

    @abstractmethod
    def get_algorithm(self) -> AlgorithmType:
        """Selector que activa esta estrategia"""

    @abstractmethod
    def execute(self, context: RunContext) -> StrategyOutcome:
        """Ejecutar y devolver el resumen y los artefactos"""


# =============================================================================
# EXPLORADORES
# =============================================================================


class ExplorationStrategy(AlgorithmStrategy):
    """Explorar, guardar el resultado y evaluarlo contra el modelo latente"""

    @abstractmethod
    def explore(self, context: RunContext, env: EnvironmentAccess) -> ExplorationResult:
        """Construir coberturas y la política final"""

    def execute(self, context: RunContext) -> StrategyOutcome:
        env = context.environment_access()
        result = self.explore(context, env)
        result.save(context.run_dir / "artifacts")
        summary = {"algorithm": result.algorithm, "episodes": result.episodes, "flags": result.flags}
        summary.update(evaluate_result(context, result))
        tables = {}
        evaluation = context.config.evaluation
        if result.backward is not None and result.algorithm == AlgorithmType.HOMER.value:
            frame = evaluate_backward_partitions(
                context.mdp,
                result.backward,
                result.covers,
                evaluation.partition_samples,
                derive_child_seed(context.config.seed, "eval-partitions"),
                evaluation.match_threshold,
            )
            tables["partitions"] = frame
            summary["partition_steps_matched"] = int(frame["matched"].sum())
            summary["partition_steps"] = int(len(frame))
        if evaluation.recover_dynamics and result.abstraction is not None:
            tables["dynamics_tv"] = recovered_dynamics_tv(context, result)
            summary["dynamics_max_tv"] = float(tables["dynamics_tv"]["tv"].max()) if len(tables["dynamics_tv"]) else None
        return StrategyOutcome(summary, result, tables)


def evaluate_result(context: RunContext, result: ExplorationResult) -> Dict[str, Any]:
    """Valor de la política final, óptimo exacto y visitación de las coberturas"""
    mdp, evaluation = context.mdp, context.config.evaluation
    seed = derive_child_seed(context.config.seed, "eval-value")
    estimate = value_of(mdp, result.policy, ExternalReward(), evaluation.value_episodes, seed=seed, delta=evaluation.delta)
    optimum, _ = optimal_value(mdp)
    out: Dict[str, Any] = {
        "value": estimate.value,
        "value_exact": estimate.exact,
        "value_band": estimate.band,
        "optimal_value": optimum,
    }
    eta = eta_exact(mdp)
    per_step = cover_visitation(context, result)
    worst = [
        float(per_step[h - 1][s])
        for h in range(2, mdp.horizon + 1)
        for s in range(mdp.n_states(h))
        if (h, s) not in eta.unreachable
    ]
    out["min_reachable_visitation"] = min(worst) if worst else 1.0
    log_metric(logger, "final_value", estimate.value, exact=estimate.exact, optimum=optimum)
    context.metrics.emit("evaluation", result.episodes, **out)
    return out


def cover_visitation(context: RunContext, result: ExplorationResult) -> List[np.ndarray]:
    """Mejor visitación por estado dentro de cada Ψ_h: exacta si se puede, Monte Carlo si no"""
    mdp = context.mdp
    try:
        return [best_visitation(mdp, result.covers[h]) for h in range(1, mdp.horizon + 1)]
    except UnsupportedOperationError:
        seed = derive_child_seed(context.config.seed, "eval-visitation")
        return best_cover_visitation(mdp, result.covers, context.config.evaluation.visitation_episodes, seed)


def recovered_dynamics_tv(context: RunContext, result: ExplorationResult):
    evaluation = context.config.evaluation
    seed = derive_child_seed(context.config.seed, "eval-dynamics")
    env = EnvironmentAccess(context.mdp)
    dynamics = recover_dynamics(env, result.covers, result.abstraction, evaluation.dynamics_samples, seed)
    dynamics.save(context.run_dir / "artifacts" / "dynamics.npz")
    return dynamics_tv(
        context.mdp,
        dynamics,
        result.abstraction,
        result.covers,
        evaluation.partition_samples,
        seed,
        evaluation.min_row_count,
    )


class HomerStrategy(ExplorationStrategy):
    def get_algorithm(self) -> AlgorithmType:
        return AlgorithmType.HOMER

    def explore(self, context: RunContext, env: EnvironmentAccess) -> ExplorationResult:
        return homer(env, context.config.hyperparameters, context.config.seed, context.metrics)


class ExpOracleStrategy(ExplorationStrategy):
    def get_algorithm(self) -> AlgorithmType:
        return AlgorithmType.EXP_ORACLE

    def explore(self, context: RunContext, env: EnvironmentAccess) -> ExplorationResult:
        phi_star = backward_ki_abstraction(context.mdp, context.config.evaluation.ki_tol)
        return exp_oracle(env, phi_star, context.config.hyperparameters, context.config.seed, context.metrics)


class PsdpOnlyStrategy(ExplorationStrategy):
    """PSDP sobre la recompensa externa con coberturas homing exactas (α = 1)"""

    def get_algorithm(self) -> AlgorithmType:
        return AlgorithmType.PSDP_ONLY

    def explore(self, context: RunContext, env: EnvironmentAccess) -> ExplorationResult:
        covers = homing_covers(context.mdp)
        levels: List[Dict] = []
        policy = final_policy("psdp-only", env, covers, context.config.hyperparameters, context.config.seed, levels)
        emit(context.metrics, "final_policy", env, **level_summary(levels))
        return ExplorationResult("psdp-only", covers, policy, iterations=[{"h": "final", "levels": levels}], episodes=env.episodes_consumed)


# =============================================================================
# ANÁLISIS EXACTOS
# =============================================================================


class KiAnalyzeStrategy(AlgorithmStrategy):
    def get_algorithm(self) -> AlgorithmType:
        return AlgorithmType.KI_ANALYZE

    def execute(self, context: RunContext) -> StrategyOutcome:
        config = context.config
        report = ki_report(context.mdp, config.evaluation.ki_tol, budget=config.budget.enumeration)
        write_report(report, context.run_dir / "ki_report.yaml", context.run_dir / "ki_report.txt")
        for step in report["steps"]:
            context.metrics.emit("ki_step", 0, h=step["h"], n_fd=step["n_fd"], n_bd=step["n_bd"], n_kd=step["n_kd"])
        return StrategyOutcome({"mdp": report["mdp"], "steps": report["steps"]})


class CanonicalizeStrategy(AlgorithmStrategy):
    def get_algorithm(self) -> AlgorithmType:
        return AlgorithmType.CANONICALIZE

    def execute(self, context: RunContext) -> StrategyOutcome:
        form = canonicalize(context.mdp, context.config.evaluation.ki_tol)
        save_mdp(form.mdp, context.run_dir / "canonical.yaml")
        sizes = [
            {"h": h, "original": context.mdp.n_states(h), "canonical": form.mdp.n_states(h)}
            for h in range(1, context.mdp.horizon + 1)
        ]
        context.metrics.emit("canonical", 0, merged=sum(s["original"] - s["canonical"] for s in sizes))
        mapping = {f"{h}:{name}": merged for (h, name), merged in sorted(form.mapping.items())}
        return StrategyOutcome({"mdp": context.mdp.name, "steps": sizes, "mapping": mapping})


class CounterexampleReportStrategy(AlgorithmStrategy):
    def get_algorithm(self) -> AlgorithmType:
        return AlgorithmType.COUNTEREXAMPLE_REPORT

    def execute(self, context: RunContext) -> StrategyOutcome:
        params = context.config.environment.params
        depths = range(1, int(params.get("max_depth", 6)) + 1)
        noisy_d = int(params.get("d", 16))
        probs = tuple(params.get("state_probs", (0.5, 0.6, 0.8, 0.9)))
        report = counterexample_report(depths, noisy_d, probs)
        mc_episodes = int(params.get("monte_carlo_episodes", 0))
        if mc_episodes > 0:
            report["noisy_bits_monte_carlo"] = [
                autoencoder_monte_carlo(noisy_d, p, mc_episodes, derive_child_seed(context.config.seed, "autoencoder", k))
                for k, p in enumerate(probs)
            ]
        write_report_document(report, context.run_dir / "counterexamples.yaml")
        for row in report["fig4b_chain"]:
            context.metrics.emit("fig4b_reach", 0, **row)
        return StrategyOutcome(report)


def write_report_document(document: Dict[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(document, fh, sort_keys=False, allow_unicode=True)
    return path


# =============================================================================
# REGISTRO
# =============================================================================

STRATEGIES: Dict[AlgorithmType, Type[AlgorithmStrategy]] = {
    AlgorithmType.HOMER: HomerStrategy,
    AlgorithmType.EXP_ORACLE: ExpOracleStrategy,
    AlgorithmType.PSDP_ONLY: PsdpOnlyStrategy,
    AlgorithmType.KI_ANALYZE: KiAnalyzeStrategy,
    AlgorithmType.CANONICALIZE: CanonicalizeStrategy,
    AlgorithmType.COUNTEREXAMPLE_REPORT: CounterexampleReportStrategy,
}


def strategy_for(algorithm: AlgorithmType) -> AlgorithmStrategy:
    return STRATEGIES[AlgorithmType(algorithm)]()


def environment_summary(mdp: LatentBlockMDP) -> Dict[str, Any]:
    summary = {"name": mdp.name, "horizon": mdp.horizon, "n_actions": mdp.n_actions}
    if "combolock" in mdp.metadata:
        summary["combolock"] = lock_summary(mdp)
    return summary
