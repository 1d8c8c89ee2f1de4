"""
Schemas de Pydantic para el emisor de tres niveles, el detector y la simulación
"""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.spectrum import ParametricSpectrum


class DriveMode(str, Enum):
    """Régimen de excitación"""

    CW = "cw"
    PULSED = "pulsed"


class SplitterMode(str, Enum):
    """Reparto de fotones entre detectores"""

    SINGLE = "single"
    HBT = "hbt"


class PulseTrain(BaseModel):
    """Tren de pulsos láser"""

    model_config = ConfigDict(frozen=True)

    rep_rate: float = Field(..., gt=0, description="Frecuencia de repetición (Hz)")
    excitation_probability: float = Field(1.0, ge=0, le=1)
    pulse_width: float = Field(0.0, ge=0, description="Anchura del pulso (s)")
    P_ref: float | None = Field(
        None, gt=0, description="Potencia de referencia p = 1 − exp(−P/P_ref) (W)"
    )

    @property
    def period(self) -> float:
        return 1.0 / self.rep_rate


class EmitterParams(BaseModel):
    """Descripción física de un emisor con estados fundamental, excitado y oscuro"""

    model_config = ConfigDict(frozen=True)

    T1: float = Field(..., gt=0, description="Tiempo de vida radiativo (s)")
    T2_star: float = Field(float("inf"), gt=0, description="Desfase puro (s)")
    pump_rate: float = Field(0.0, ge=0, description="Bombeo CW G→E (Hz)")
    P_sat: float | None = Field(None, gt=0, description="Potencia de saturación CW (W)")
    pulse: PulseTrain | None = None
    shelve_rate: float = Field(0.0, ge=0, description="Tasa E→D (Hz)")
    deshelve_rate: float = Field(0.0, ge=0, description="Tasa D→G (Hz)")
    spectrum: ParametricSpectrum | None = None


class DetectorModel(BaseModel):
    """Detector de fotones individuales"""

    model_config = ConfigDict(frozen=True)

    efficiency: float = Field(1.0, ge=0, le=1)
    jitter_fwhm: float = Field(0.0, ge=0, description="Jitter gaussiano, FWHM (s)")
    dead_time: float = Field(0.0, ge=0, description="Tiempo muerto (s)")
    dark_count_rate: float = Field(0.0, ge=0, description="Cuentas oscuras (Hz)")


class SimConfig(BaseModel):
    """Parámetros de una adquisición simulada"""

    model_config = ConfigDict(frozen=True)

    duration: float = Field(..., gt=0, description="Duración (s)")
    seed: int = Field(0, ge=0, lt=2**64)
    drive_mode: DriveMode = DriveMode.CW
    power: float | None = Field(None, gt=0, description="Potencia de bombeo (W)")
    collection_efficiency: float = Field(1.0, ge=0, le=1)
    splitter: SplitterMode = SplitterMode.HBT
    resolution: float = Field(1e-12, gt=0, description="Resolución de etiquetas (s)")


class SimulationSetup(BaseModel):
    """Emisor, detector y adquisición: todo lo que define un fichero de configuración"""

    model_config = ConfigDict(frozen=True)

    emitter: EmitterParams
    detector: DetectorModel
    config: SimConfig

    @model_validator(mode="after")
    def _drive_consistent(self) -> "SimulationSetup":
        if self.config.drive_mode == DriveMode.PULSED and self.emitter.pulse is None:
            raise ValueError("El modo pulsado requiere un tren de pulsos")
        if self.config.power is not None:
            if self.config.drive_mode == DriveMode.CW and self.emitter.P_sat is None:
                raise ValueError("Para fijar la potencia en CW hace falta P_sat")
            if (
                self.config.drive_mode == DriveMode.PULSED
                and self.emitter.pulse is not None
                and self.emitter.pulse.P_ref is None
            ):
                raise ValueError("Para fijar la potencia pulsada hace falta P_ref")
        return self


class BlinkingRecord(BaseModel):
    """Emisiones de una trayectoria junto con sus intervalos oscuros"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    duration: float = Field(..., gt=0)
    emissions: np.ndarray
    dark_start: np.ndarray
    dark_end: np.ndarray

    def bright_dwell_times(self) -> np.ndarray:
        """Duración de los periodos brillantes completos (terminados en un apagado)"""
        if self.dark_start.size == 0:
            return np.empty(0)
        previous_end = np.concatenate(([0.0], self.dark_end[:-1]))
        return self.dark_start - previous_end

    def dark_dwell_times(self) -> np.ndarray:
        """Duración de los periodos oscuros que terminan dentro de la adquisición"""
        done = self.dark_end < self.duration
        return (self.dark_end - self.dark_start)[done]


class CalibrationPoint(BaseModel):
    """Tasas de parpadeo que reproducen un (τ2, a) objetivo a una potencia dada"""

    model_config = ConfigDict(frozen=True)

    power_psat: float = Field(..., gt=0)
    tau2: float = Field(..., gt=0)
    a: float = Field(..., ge=0)
    shelve_rate: float = Field(..., ge=0)
    deshelve_rate: float = Field(..., gt=0)
