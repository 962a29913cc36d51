import argparse
import json
import os
import sys
import time
from pathlib import Path

from dotenv import load_dotenv

# Cargar variables de entorno desde .env
load_dotenv()

# Configurar PYTHONPATH si no está configurado
if 'PYTHONPATH' not in os.environ:
    os.environ['PYTHONPATH'] = '.'

# Configurar logging antes de importar otros módulos
from src.utils.logging_config import setup_logging, get_logger, log_operation_start, log_operation_success, log_operation_error

setup_logging(log_file=os.getenv("KINOPANDA_LOG_FILE", "logs/kinopanda.log"), console_output=True, structured=True)
logger = get_logger("kino_cli")

from src.block_mdp.dynamics import exact_value
from src.block_mdp.environment import EnvironmentAccess
from src.block_mdp.rewards import ExternalReward
from src.block_mdp.sampling import monte_carlo_value
from src.envs.combolock import lock_summary, make_combolock, uniform_success_probability
from src.explorers.dynamics import recover_dynamics
from src.explorers.evaluation import dynamics_tv
from src.harness.config import load_config, parse_config
from src.harness.dto import AlgorithmType
from src.harness.reports import visitation_trace
from src.harness.runner import load_run, restart_homer, run
from src.psdp.sample_sizes import SizeVariant, theory_sample_sizes
from src.utils.errors import KinoPandaError, UnsupportedOperationError

# Rutas base
CONFIG_PATH = Path("config/config.yaml")


def print_document(document) -> None:
    print(json.dumps(document, indent=2, sort_keys=True, default=float))


def parse_params(pairs):
    """key=value -> dict, con valores interpretados como JSON cuando se puede"""
    params = {}
    for pair in pairs or []:
        key, _, raw = pair.partition("=")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return params


def environment_document(args):
    if args.mdp:
        return {"kind": "file", "path": args.mdp}
    return {"kind": args.env, "params": parse_params(args.param)}


def run_experiment(args):
    start_time = time.time()
    log_operation_start(logger, "experimento", config_path=str(args.config))
    config = load_config(args.config, {"seed": args.seed, "output_dir": args.output_dir})
    run_dir, outcome = run(config)
    log_operation_success(logger, "experimento", duration=time.time() - start_time, run_dir=str(run_dir))
    print_document({"run_dir": str(run_dir), **outcome.summary})


def run_exact_analysis(args, algorithm: AlgorithmType):
    """ki-analyze, canonicalize y counterexample-report comparten el mismo flujo"""
    start_time = time.time()
    log_operation_start(logger, algorithm.value)
    config = parse_config(
        {
            "name": args.name or algorithm.value,
            "algorithm": algorithm.value,
            "environment": environment_document(args),
            "seed": args.seed or 0,
            "output_dir": args.output_dir,
        }
    )
    run_dir, outcome = run(config)
    log_operation_success(logger, algorithm.value, duration=time.time() - start_time, run_dir=str(run_dir))
    print_document({"run_dir": str(run_dir), **outcome.summary})


def run_eval_policy(args):
    start_time = time.time()
    log_operation_start(logger, "evaluación de política", run=args.run)
    _, mdp, result = load_run(Path(args.run))
    policy = result.policy
    if args.cover:
        h, k = (int(x) for x in args.cover.split(":"))
        policy = result.covers[h].policies[k]
    estimate = monte_carlo_value(mdp, policy, ExternalReward(), args.episodes, seed=args.seed or 0, delta=args.delta)
    document = {"monte_carlo": estimate.value, "band": estimate.band, "episodes": estimate.episodes, "delta": args.delta}
    try:
        document["exact"] = exact_value(mdp, policy, ExternalReward())
        document["within_band"] = estimate.contains(document["exact"])
    except UnsupportedOperationError as e:
        document["exact"] = None
        logger.info(f"Valor exacto no disponible: {e}")
    log_operation_success(logger, "evaluación de política", duration=time.time() - start_time)
    print_document(document)


def run_visitation_trace(args):
    start_time = time.time()
    log_operation_start(logger, "traza de visitación", run=args.run, episodes=args.episodes)
    _, mdp, result = load_run(Path(args.run))
    frame = visitation_trace(mdp, result, args.episodes, args.seed or 0)
    target = Path(args.output) if args.output else Path(args.run) / "visitation_trace.csv"
    frame.to_csv(target, index=False)
    log_operation_success(logger, "traza de visitación", duration=time.time() - start_time, path=str(target))
    print(frame.to_string(index=False))


def run_recover_dynamics(args):
    start_time = time.time()
    log_operation_start(logger, "recuperación de dinámica", run=args.run, samples=args.samples)
    config, mdp, result = load_run(Path(args.run))
    abstraction = result.abstraction
    seed = config.seed if args.seed is None else args.seed
    dynamics = recover_dynamics(EnvironmentAccess(mdp), result.covers, abstraction, args.samples, seed)
    dynamics.save(Path(args.run) / "dynamics.npz")
    frame = dynamics_tv(mdp, dynamics, abstraction, result.covers, config.evaluation.partition_samples, seed, args.min_count)
    frame.to_csv(Path(args.run) / "dynamics_tv.csv", index=False)
    log_operation_success(logger, "recuperación de dinámica", duration=time.time() - start_time, rows=len(frame))
    print(frame.to_string(index=False))


def run_theory_sizes(args):
    sizes = theory_sample_sizes(
        args.N, args.H, args.actions, args.eta, args.epsilon, args.delta,
        args.policies, args.abstractions, SizeVariant(args.variant),
    )
    print_document(sizes.to_record())


def run_combolock_info(args):
    mdp = make_combolock(args.H, args.K, args.seed or 0, emission=args.emission)
    summary = lock_summary(mdp)
    summary["uniform_success_probability"] = uniform_success_probability(args.H, args.K)
    print_document(summary)


def run_restart(args):
    start_time = time.time()
    log_operation_start(logger, "bucle de reinicios", config_path=str(args.config))
    config = load_config(args.config, {"seed": args.seed, "output_dir": args.output_dir})
    run_dir, frame = restart_homer(config, tol=args.tol, max_rounds=args.max_rounds)
    log_operation_success(logger, "bucle de reinicios", duration=time.time() - start_time, rounds=len(frame))
    print(frame.to_string(index=False))


def add_environment_options(parser):
    parser.add_argument("--env", default="combolock", help="Entorno: combolock, fig1-left, fig1-right, fig4a, fig4b, noisy-bits, random")
    parser.add_argument("--param", action="append", help="Parámetro del entorno key=value (repetible)")
    parser.add_argument("--mdp", help="Fichero YAML con un MDP tabular")
    parser.add_argument("--name", help="Nombre de la ejecución")


def build_parser():
    parser = argparse.ArgumentParser(description="KinoPanda CLI")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Semilla maestra")
    common.add_argument("--output-dir", default=None, help="Raíz de salida (por defecto KINOPANDA_OUTPUT_ROOT)")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("run", help="Ejecutar un experimento desde YAML", parents=[common])
    p.add_argument("--config", default=str(CONFIG_PATH))

    for name, text in (
        ("ki-analyze", "Particiones KI, dimensiones y comprobaciones de lemas"),
        ("canonicalize", "Forma canónica de un MDP tabular"),
        ("counterexample-report", "Análisis exacto de los contraejemplos"),
    ):
        add_environment_options(sub.add_parser(name, help=text, parents=[common]))

    p = sub.add_parser("eval-policy", help="Valor Monte Carlo (y exacto si se puede) de una política guardada", parents=[common])
    p.add_argument("--run", required=True)
    p.add_argument("--cover", help="Política de cobertura h:k en lugar de la final")
    p.add_argument("--episodes", type=int, default=20_000)
    p.add_argument("--delta", type=float, default=1e-3)

    p = sub.add_parser("visitation-trace", help="Conteos por estado latente y peso ln(count+1)", parents=[common])
    p.add_argument("--run", required=True)
    p.add_argument("--episodes", type=int, default=1_000)
    p.add_argument("--output")

    p = sub.add_parser("recover-dynamics", help="Dinámica abstracta y su distancia TV a la canónica", parents=[common])
    p.add_argument("--run", required=True)
    p.add_argument("--samples", type=int, default=5_000)
    p.add_argument("--min-count", type=int, default=50)

    p = sub.add_parser("theory-sizes", help="Tamaños de muestra de la teoría", parents=[common])
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--H", type=int, default=10)
    p.add_argument("--actions", type=int, default=4)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--policies", type=float, default=1e6)
    p.add_argument("--abstractions", type=float, default=1.0)
    p.add_argument("--variant", choices=[v.value for v in SizeVariant], default=SizeVariant.HOMER.value)

    p = sub.add_parser("combolock-info", help="d, u/v y checksum de la cerradura", parents=[common])
    p.add_argument("--H", type=int, default=10)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--emission", choices=["gaussian", "discrete"], default="gaussian")

    p = sub.add_parser("restart", help="HOMER con N creciente y η decreciente hasta estabilizar", parents=[common])
    p.add_argument("--config", default=str(CONFIG_PATH))
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-rounds", type=int, default=4)
    return parser


COMMANDS = {
    "run": run_experiment,
    "ki-analyze": lambda args: run_exact_analysis(args, AlgorithmType.KI_ANALYZE),
    "canonicalize": lambda args: run_exact_analysis(args, AlgorithmType.CANONICALIZE),
    "counterexample-report": lambda args: run_exact_analysis(args, AlgorithmType.COUNTEREXAMPLE_REPORT),
    "eval-policy": run_eval_policy,
    "visitation-trace": run_visitation_trace,
    "recover-dynamics": run_recover_dynamics,
    "theory-sizes": run_theory_sizes,
    "combolock-info": run_combolock_info,
    "restart": run_restart,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 0

    try:
        COMMANDS[args.command](args)
    except KinoPandaError as e:
        log_operation_error(logger, args.command, e)
        print(f"Error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
