"""
Schemas de Pydantic para espectros de fotoluminiscencia
"""

from enum import Enum

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ComponentKind(str, Enum):
    """Origen físico de una componente lorentziana"""

    ZPL = "ZPL"
    LO_PHONON = "LO_phonon"
    LE_PHONON = "LE_phonon"
    OTHER = "other"


class LorentzianComponent(BaseModel):
    """Componente lorentziana normalizada (área unidad multiplicada por `area`)"""

    model_config = ConfigDict(frozen=True)

    center: float = Field(..., gt=0, description="Centro (eV)")
    fwhm: float = Field(..., gt=0, description="Anchura a media altura (eV)")
    area: float = Field(..., ge=0, description="Peso adimensional")
    kind: ComponentKind = ComponentKind.OTHER

    @property
    def peak_height(self) -> float:
        """Altura del máximo, 2·area/(π·fwhm)"""
        return 2.0 * self.area / (np.pi * self.fwhm)


class ParametricSpectrum(BaseModel):
    """Espectro como suma de lorentzianas (fuente de verdad)"""

    model_config = ConfigDict(frozen=True)

    components: tuple[LorentzianComponent, ...]

    @field_validator("components")
    @classmethod
    def _at_least_one(
        cls, value: tuple[LorentzianComponent, ...]
    ) -> tuple[LorentzianComponent, ...]:
        if not value:
            raise ValueError("El espectro necesita al menos una componente")
        return value

    @property
    def total_area(self) -> float:
        return float(sum(c.area for c in self.components))

    def of_kind(self, kind: ComponentKind) -> list[LorentzianComponent]:
        return [c for c in self.components if c.kind == kind]


class SampledSpectrum(BaseModel):
    """Espectro muestreado: rejilla de energías (eV) estrictamente creciente y cuentas"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    energy: np.ndarray
    counts: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _as_arrays(cls, data: dict[str, object]) -> dict[str, object]:
        if isinstance(data, dict):
            data = dict(data)
            data["energy"] = np.asarray(data.get("energy"), dtype=float)
            data["counts"] = np.asarray(data.get("counts"), dtype=float)
        return data

    @model_validator(mode="after")
    def _check(self) -> "SampledSpectrum":
        if self.energy.ndim != 1 or self.energy.shape != self.counts.shape:
            raise ValueError("Energías y cuentas deben ser vectores de igual longitud")
        if self.energy.size == 0:
            raise ValueError("El espectro necesita al menos una muestra")
        if np.any(np.diff(self.energy) <= 0):
            raise ValueError("La rejilla de energías debe ser estrictamente creciente")
        if not np.all(np.isfinite(self.counts)) or np.any(self.counts < 0):
            raise ValueError("Las cuentas deben ser finitas y no negativas")
        return self

    def integral(self) -> float:
        """Integral trapezoidal de las cuentas sobre la energía"""
        if self.energy.size < 2:
            return float(self.counts.sum())
        return float(np.trapezoid(self.counts, self.energy))


class FilterSpec(BaseModel):
    """Filtro rectangular ideal; None = borde no acotado"""

    model_config = ConfigDict(frozen=True)

    low_edge: float | None = None
    high_edge: float | None = None

    @model_validator(mode="after")
    def _ordered(self) -> "FilterSpec":
        if (
            self.low_edge is not None
            and self.high_edge is not None
            and self.low_edge >= self.high_edge
        ):
            raise ValueError("El borde inferior del filtro debe ser menor que el superior")
        return self

    def passes(self, energy: NDArray[np.float64]) -> NDArray[np.bool_]:
        mask = np.ones(energy.shape, dtype=bool)
        if self.low_edge is not None:
            mask &= energy >= self.low_edge
        if self.high_edge is not None:
            mask &= energy <= self.high_edge
        return mask


class SpectrumFit(BaseModel):
    """Descomposición lorentziana de un espectro muestreado"""

    spectrum: ParametricSpectrum
    dw_factor: float
    kind_fractions: dict[str, float]
    chi2_reduced: float
    converged: bool
