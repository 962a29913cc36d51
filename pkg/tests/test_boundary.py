"""
Los módulos que aprenden sólo ven observaciones: ni el decodificador oráculo,
ni el muestreo latente, ni los campos privados del entorno.
"""
import ast
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parent.parent / "src"
LEARNER_PACKAGES = ("psdp", "oracles", "explorers")
ORACLE_SIDE = {"explorers/abstraction.py", "explorers/evaluation.py"}
FORBIDDEN_NAMES = {"g_star", "strip_latent"}
FORBIDDEN_MODULES = {"block_mdp.sampling"}
FORBIDDEN_ATTRIBUTES = {"_latent", "_states", "_mdp"}


def learner_files():
    for package in LEARNER_PACKAGES:
        for path in sorted((SRC / package).glob("*.py")):
            relative = path.relative_to(SRC).as_posix()
            if relative not in ORACLE_SIDE:
                yield relative


def violations(path: Path):
    tree = ast.parse(path.read_text(encoding="utf-8"))
    found = []
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            module = (node.module or "").lstrip(".")
            if any(module.endswith(m) for m in FORBIDDEN_MODULES):
                found.append(f"importa {module}")
            found += [f"importa {alias.name}" for alias in node.names if alias.name in FORBIDDEN_NAMES]
        elif isinstance(node, ast.Import):
            found += [f"importa {alias.name}" for alias in node.names if any(alias.name.endswith(m) for m in FORBIDDEN_MODULES)]
        elif isinstance(node, ast.Attribute) and node.attr in FORBIDDEN_ATTRIBUTES:
            found.append(f"accede a .{node.attr}")
    return found


@pytest.mark.parametrize("relative", list(learner_files()))
def test_learner_module_sees_only_observations(relative):
    assert violations(SRC / relative) == []


def test_scan_detects_oracle_access():
    assert "importa g_star" in violations(SRC / "explorers" / "abstraction.py")
