from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

# =============================================================================
# DTOs DEL DOCUMENTO DE MDP TABULAR
# =============================================================================


class TransitionDTO(BaseModel):
    step: int = Field(ge=1)
    state: str
    action: str
    next: Dict[str, float]


class RewardDTO(BaseModel):
    """Recompensa ``scale * Ber(prob)``; ``next`` nulo en el último paso"""

    step: int = Field(ge=1)
    state: str
    action: str
    next: Optional[str] = None
    scale: float
    prob: float = Field(default=1.0, ge=0.0, le=1.0)


class EmissionDTO(BaseModel):
    step: int = Field(ge=1)
    state: str
    observations: Dict[str, float]


class MdpDocumentDTO(BaseModel):
    """Documento de texto estructurado con un Block MDP de emisión discreta"""

    name: str = "mdp"
    horizon: int = Field(ge=1)
    actions: List[str]
    states: List[List[str]]
    start: Dict[str, float]
    transitions: List[TransitionDTO] = Field(default_factory=list)
    rewards: List[RewardDTO] = Field(default_factory=list)
    emissions: List[EmissionDTO]

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.states) != self.horizon:
            raise ValueError(f"states tiene {len(self.states)} pasos, horizon es {self.horizon}")
        if len(set(self.actions)) != len(self.actions):
            raise ValueError("acciones repetidas")
        for item in self.transitions:
            if item.step >= self.horizon:
                raise ValueError(f"transición en el paso {item.step} >= horizon")
        return self
