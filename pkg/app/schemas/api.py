"""
Schemas de petición y respuesta de la API HTTP
"""

from typing import Literal

from pydantic import BaseModel, Field, model_validator


class CoherenceRequest(BaseModel):
    T1: float = Field(..., description="Tiempo de vida (s)")
    T2_star: float = Field(..., description="Desfase puro (s)")


class CoherenceResponse(BaseModel):
    T1: float
    T2_star: float
    gamma: float
    gamma_star: float
    Gamma_total: float
    T2: float
    linewidth_hz: float
    indistinguishability: float


class LinewidthResponse(BaseModel):
    T1: float
    linewidth_hz: float


class SaturationIntensityRequest(BaseModel):
    I_inf: float = Field(..., gt=0)
    P_sat: float = Field(..., gt=0)
    P: float = Field(..., description="Potencia de bombeo (W)")


class SaturationIntensityResponse(BaseModel):
    P: float
    intensity_hz: float


class SourceEfficiencyRequest(BaseModel):
    """Eficiencia fuente-detector: I_inf·T1 (CW) o I_inf/rep_rate (pulsado)"""

    I_inf: float = Field(..., ge=0)
    T1: float | None = Field(None, gt=0)
    rep_rate: float | None = Field(None, gt=0)

    @model_validator(mode="after")
    def _one_convention(self) -> "SourceEfficiencyRequest":
        if (self.T1 is None) == (self.rep_rate is None):
            raise ValueError("Indique exactamente uno de T1 o rep_rate")
        return self


class SourceEfficiencyResponse(BaseModel):
    convention: Literal["cw", "pulsed"]
    efficiency: float


class SaturationFitRequest(BaseModel):
    power: list[float] = Field(..., min_length=3)
    intensity: list[float] = Field(..., min_length=3)
    sigma: list[float] | None = None

    @model_validator(mode="after")
    def _lengths(self) -> "SaturationFitRequest":
        if len(self.power) != len(self.intensity):
            raise ValueError("power e intensity deben tener igual longitud")
        if self.sigma is not None and len(self.sigma) != len(self.power):
            raise ValueError("sigma debe tener la misma longitud que power")
        return self


class EnvelopeFitRequest(BaseModel):
    delays: list[float] = Field(..., min_length=6)
    visibility: list[float] = Field(..., min_length=6)
    shape: Literal["exponential", "gaussian", "auto"] = "auto"

    @model_validator(mode="after")
    def _lengths(self) -> "EnvelopeFitRequest":
        if len(self.delays) != len(self.visibility):
            raise ValueError("delays y visibility deben tener igual longitud")
        return self


class LorentzianInterferogramRequest(BaseModel):
    T1: float
    T2_star: float
    energy_ev: float = Field(..., gt=0, description="Centro de la ZPL (eV)")
    V0: float = Field(0.8, ge=0, le=1)
    delays: list[float] = Field(..., min_length=1)


class InterferogramResponse(BaseModel):
    delays: list[float]
    intensity: list[float]
    V0: float


class ScanPlanRequest(BaseModel):
    fine_window: float = Field(133e-15, gt=0)
    coarse_min: float = -20e-12
    coarse_max: float = 14e-12
    points_per_window: int = Field(20, ge=2)
    coarse_step: float | None = Field(None, gt=0)


class ScanPlanResponse(BaseModel):
    windows: int
    spacing: float
    delays: list[float]


class FitParameterOut(BaseModel):
    value: float | None
    stderr: float | None
    unit: str = ""


class FitResponse(BaseModel):
    """Esquema JSON común de los ajustes (no finitos como null)"""

    model: str
    params: dict[str, FitParameterOut]
    chi2_reduced: float | None
    converged: bool
    iterations: int
    flags: list[str] = Field(default_factory=list)
    metrics: dict[str, float | None] = Field(default_factory=dict)


class ModelInfo(BaseModel):
    """Descripción de un modelo registrado en el motor de ajustes"""

    id: str
    param_names: list[str]
    units: list[str]
    repeating: bool
    analytic_jacobian: bool
