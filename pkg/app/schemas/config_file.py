"""
Schema del fichero de configuración de simulación (`clave = valor`).

Las claves llevan la unidad en el nombre; `to_setup()` convierte a SI.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.units import FS, MEV, MW, NS, PS
from app.schemas.emitter import (
    DetectorModel,
    DriveMode,
    EmitterParams,
    PulseTrain,
    SimConfig,
    SimulationSetup,
    SplitterMode,
)
from app.schemas.spectrum import ComponentKind, LorentzianComponent, ParametricSpectrum

MHZ = 1e6


class SimulationFile(BaseModel):
    """Contenido validado de un fichero de configuración"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Adquisición
    mode: DriveMode = DriveMode.CW
    duration_s: float = Field(..., gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    splitter: SplitterMode = SplitterMode.HBT
    resolution_ps: float = Field(1.0, gt=0)
    collection_efficiency: float = Field(1.0, ge=0, le=1)

    # Emisor
    t1_ns: float = Field(..., gt=0)
    t2_star_fs: float | None = Field(None, gt=0)
    pump_rate_mhz: float = Field(0.0, ge=0)
    psat_mw: float | None = Field(None, gt=0)
    power_mw: float | None = Field(None, gt=0)
    power_psat: float | None = Field(None, gt=0)
    shelve_rate_mhz: float = Field(0.0, ge=0)
    deshelve_rate_mhz: float = Field(0.0, ge=0)
    zpl_ev: float | None = Field(None, gt=0)
    zpl_fwhm_mev: float = Field(5.0, gt=0)

    # Tren de pulsos
    rep_rate_mhz: float | None = Field(None, gt=0)
    excitation_probability: float = Field(1.0, ge=0, le=1)
    pulse_width_ps: float = Field(0.0, ge=0)
    pref_mw: float | None = Field(None, gt=0)

    # Detector
    efficiency: float = Field(1.0, ge=0, le=1)
    jitter_fwhm_ps: float = Field(0.0, ge=0)
    dead_time_ns: float = Field(0.0, ge=0)
    dark_count_rate_hz: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _power_keys(self) -> "SimulationFile":
        if self.power_mw is not None and self.power_psat is not None:
            raise ValueError("Indique power_mw o power_psat, no ambos")
        if self.power_psat is not None and self.psat_mw is None:
            raise ValueError("power_psat requiere psat_mw")
        if self.mode == DriveMode.PULSED and self.rep_rate_mhz is None:
            raise ValueError("El modo pulsado requiere rep_rate_mhz")
        return self

    def power_w(self) -> float | None:
        if self.power_mw is not None:
            return self.power_mw * MW
        if self.power_psat is not None and self.psat_mw is not None:
            return self.power_psat * self.psat_mw * MW
        return None

    def to_setup(self) -> SimulationSetup:
        """Convertir a tipos de dominio en unidades SI"""
        pulse = None
        if self.rep_rate_mhz is not None:
            pref = self.pref_mw if self.pref_mw is not None else self.psat_mw
            pulse = PulseTrain(
                rep_rate=self.rep_rate_mhz * MHZ,
                excitation_probability=self.excitation_probability,
                pulse_width=self.pulse_width_ps * PS,
                P_ref=pref * MW if pref is not None else None,
            )
        spectrum = None
        if self.zpl_ev is not None:
            spectrum = ParametricSpectrum(
                components=(
                    LorentzianComponent(
                        center=self.zpl_ev,
                        fwhm=self.zpl_fwhm_mev * MEV,
                        area=1.0,
                        kind=ComponentKind.ZPL,
                    ),
                )
            )
        emitter = EmitterParams(
            T1=self.t1_ns * NS,
            T2_star=self.t2_star_fs * FS if self.t2_star_fs else float("inf"),
            pump_rate=self.pump_rate_mhz * MHZ,
            P_sat=self.psat_mw * MW if self.psat_mw is not None else None,
            pulse=pulse,
            shelve_rate=self.shelve_rate_mhz * MHZ,
            deshelve_rate=self.deshelve_rate_mhz * MHZ,
            spectrum=spectrum,
        )
        detector = DetectorModel(
            efficiency=self.efficiency,
            jitter_fwhm=self.jitter_fwhm_ps * PS,
            dead_time=self.dead_time_ns * NS,
            dark_count_rate=self.dark_count_rate_hz,
        )
        config = SimConfig(
            duration=self.duration_s,
            seed=self.seed,
            drive_mode=self.mode,
            power=self.power_w(),
            collection_efficiency=self.collection_efficiency,
            splitter=self.splitter,
            resolution=self.resolution_ps * PS,
        )
        return SimulationSetup(emitter=emitter, detector=detector, config=config)
