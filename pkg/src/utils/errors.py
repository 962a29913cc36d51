"""
Jerarquía de excepciones de KinoPanda
"""
from typing import Optional


class KinoPandaError(Exception):
    """Excepción base del proyecto"""


class ConfigurationError(KinoPandaError):
    """Configuración inválida o representación incompatible con el entorno"""

    def __init__(self, message: str, field_path: Optional[str] = None):
        self.field_path = field_path
        if field_path:
            message = f"{field_path}: {message}"
        super().__init__(message)


class MalformedMDPError(KinoPandaError):
    """Block MDP que viola sus invariantes (sumas, soportes disjuntos, recompensa total)"""


class UnsupportedOperationError(KinoPandaError):
    """Operación exacta no disponible para este tipo de emisión o política"""


class EnumerationBudgetError(KinoPandaError):
    """La enumeración de políticas o abstracciones excede el presupuesto"""

    def __init__(self, what: str, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(f"{what}: {count} candidatos exceden el presupuesto de {budget}")


class EmptyDatasetError(KinoPandaError):
    """Dataset vacío entregado a un oráculo"""


class CoverError(KinoPandaError):
    """Cobertura de políticas vacía o inconsistente para un paso de roll-in"""


class AlgorithmError(KinoPandaError):
    """Fallo de un algoritmo con el contexto de la iteración donde ocurrió"""

    def __init__(self, algorithm: str, cause: Exception, **context):
        self.algorithm = algorithm
        self.cause = cause
        self.context = context
        detail = ", ".join(f"{k}={v}" for k, v in sorted(context.items()))
        super().__init__(f"{algorithm} falló ({detail}): {cause}")


class BudgetExceededError(KinoPandaError):
    """Se agotó el presupuesto de episodios de una ejecución"""

    def __init__(self, consumed: int, budget: int):
        self.consumed = consumed
        self.budget = budget
        super().__init__(f"Presupuesto de episodios agotado: {consumed} > {budget}")
