"""
Schemas de Pydantic para tasas de coherencia y saturación
"""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CoherenceRates(BaseModel):
    """
    Tiempos y tasas de coherencia de un emisor.

    Convención: tiempos 1/e en segundos; gamma = 1/T1, gamma_star = 1/T2*,
    Gamma_total = gamma + 2·gamma_star y T2 = 2/Gamma_total.
    La anchura de línea (FWHM, Hz) es Gamma_total/(2π).
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    T1: float = Field(..., gt=0)
    T2_star: float = Field(..., gt=0)
    gamma: float = Field(..., ge=0)
    gamma_star: float = Field(..., ge=0)
    Gamma_total: float = Field(..., gt=0)
    T2: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _rate_identity(self) -> "CoherenceRates":
        if self.Gamma_total != self.gamma + 2.0 * self.gamma_star:
            raise ValueError("Gamma_total debe ser gamma + 2·gamma_star")
        return self

    @property
    def linewidth_hz(self) -> float:
        """FWHM de la línea en Hz"""
        return self.Gamma_total / (2.0 * math.pi)


class SaturationModel(BaseModel):
    """Saturación de un sistema de dos niveles: I(P) = I_inf/(1 + P_sat/P)"""

    model_config = ConfigDict(frozen=True)

    I_inf: float = Field(..., gt=0, description="Tasa de cuentas asintótica (Hz)")
    P_sat: float = Field(..., gt=0, description="Potencia de saturación (W)")
