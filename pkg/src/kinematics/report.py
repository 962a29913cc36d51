"""
Informe de particiones KI para la CLI: bloques, dimensiones y desviaciones.
"""
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd
import yaml

from ..utils.errors import EnumerationBudgetError
from ..utils.logging_config import get_logger, log_validation_warning
from .enumeration import DEFAULT_BUDGET
from .lemmas import check_policy_ratio, check_simultaneous_maximization
from .partition import DEFAULT_TOL, backward_ki_partition, forward_ki_partition, ki_partition

logger = get_logger("ki_report")


def ki_report(mdp, tol: float = DEFAULT_TOL, check_lemmas: bool = True, budget: int = DEFAULT_BUDGET) -> Dict[str, Any]:
    """Documento con particiones y N_FD/N_BD/N_KD por paso y, si se puede enumerar, las verificaciones"""
    steps = []
    for h in range(1, mdp.horizon + 1):
        forward = forward_ki_partition(mdp, h, tol)
        backward = backward_ki_partition(mdp, h, tol)
        full = ki_partition(mdp, h, tol)
        entry: Dict[str, Any] = {
            "h": h,
            "n_states": mdp.n_states(h),
            "n_fd": forward.n_blocks,
            "n_bd": backward.n_blocks,
            "n_kd": full.n_blocks,
            "forward": forward.named_blocks(),
            "backward": backward.named_blocks(),
            "full": full.named_blocks(),
            "unreachable": [mdp.state_names(h)[i] for i in backward.unreachable],
        }
        if check_lemmas:
            try:
                entry["policy_ratio_deviation"] = check_policy_ratio(mdp, backward, budget)
                entry["simultaneous_maximization"] = check_simultaneous_maximization(mdp, backward, budget=budget).holds
            except EnumerationBudgetError as error:
                log_validation_warning(logger, f"paso {h}", "verificación omitida", reason=str(error))
                entry["policy_ratio_deviation"] = None
                entry["skipped"] = str(error)
        steps.append(entry)
    return {"mdp": mdp.name, "tol": tol, "steps": steps}


def report_frame(report: Dict[str, Any]) -> pd.DataFrame:
    """Resumen tabular (una fila por paso)"""
    columns = ["h", "n_states", "n_fd", "n_bd", "n_kd", "policy_ratio_deviation"]
    return pd.DataFrame([{c: step.get(c) for c in columns} for step in report["steps"]], columns=columns)


def write_report(report: Dict[str, Any], path: Union[str, Path], text_path: Optional[Union[str, Path]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(report, fh, sort_keys=False, allow_unicode=True)
    if text_path is not None:
        Path(text_path).write_text(report_frame(report).to_string(index=False) + "\n", encoding="utf-8")
    return path
