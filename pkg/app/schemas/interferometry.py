"""
Schemas del interferómetro de Michelson virtual
"""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Margen numérico admitido sobre los límites de contraste
_BOUND_TOLERANCE = 1e-6


class EnvelopeShape(str, Enum):
    """Forma de la envolvente de visibilidad"""

    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"


class Interferogram(BaseModel):
    """Intensidad normalizada de salida frente al retardo"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    delays: np.ndarray
    intensity: np.ndarray
    V0: float = Field(0.8, ge=0, le=1)

    @model_validator(mode="before")
    @classmethod
    def _as_arrays(cls, data: dict[str, object]) -> dict[str, object]:
        if isinstance(data, dict):
            data = dict(data)
            data["delays"] = np.asarray(data.get("delays"), dtype=float)
            data["intensity"] = np.asarray(data.get("intensity"), dtype=float)
        return data

    @model_validator(mode="after")
    def _check(self) -> "Interferogram":
        if self.delays.ndim != 1 or self.delays.shape != self.intensity.shape:
            raise ValueError("Retardos e intensidades deben tener igual longitud")
        if not np.all(np.isfinite(self.delays)):
            raise ValueError("Los retardos deben ser finitos")
        if np.any(np.diff(self.delays) <= 0):
            raise ValueError("Los retardos deben ser estrictamente crecientes")
        low = (1.0 - self.V0) / 2.0 - _BOUND_TOLERANCE
        high = (1.0 + self.V0) / 2.0 + _BOUND_TOLERANCE
        if np.any(self.intensity < low) or np.any(self.intensity > high):
            raise ValueError("La intensidad excede los límites fijados por V0")
        return self


class VisibilityTrace(BaseModel):
    """Visibilidad por periodo de franja"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    delays: np.ndarray
    visibility: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _as_arrays(cls, data: dict[str, object]) -> dict[str, object]:
        if isinstance(data, dict):
            data = dict(data)
            data["delays"] = np.asarray(data.get("delays"), dtype=float)
            data["visibility"] = np.asarray(data.get("visibility"), dtype=float)
        return data

    @model_validator(mode="after")
    def _check(self) -> "VisibilityTrace":
        if self.delays.ndim != 1 or self.delays.shape != self.visibility.shape:
            raise ValueError("Retardos y visibilidades deben tener igual longitud")
        if np.any(np.diff(self.delays) <= 0):
            raise ValueError("Los retardos deben ser crecientes")
        if np.any(self.visibility < 0):
            raise ValueError("La visibilidad no puede ser negativa")
        return self

    def __len__(self) -> int:
        return int(self.delays.size)


class EnvelopeModel(BaseModel):
    """Envolvente V0·e^{−τ/T2*} (exponencial) o V0·e^{−(τ/T2*)²} (gaussiana)"""

    model_config = ConfigDict(frozen=True)

    shape: EnvelopeShape = EnvelopeShape.EXPONENTIAL
    V0: float = Field(0.8, ge=0, le=1)
    T2_star: float = Field(..., gt=0)

    def evaluate(self, delays: np.ndarray) -> np.ndarray:
        x = np.abs(np.asarray(delays, dtype=float)) / self.T2_star
        if self.shape == EnvelopeShape.GAUSSIAN:
            return self.V0 * np.exp(-(x**2))
        return self.V0 * np.exp(-x)


class ShapeSelection(BaseModel):
    """Comparación de residuos entre ambas formas de envolvente"""

    chi2_exponential: float
    chi2_gaussian: float
    preferred: EnvelopeShape
