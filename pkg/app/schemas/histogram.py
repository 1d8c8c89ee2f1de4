"""
Schemas de histogramas de retardos, curvas g² normalizadas y modelos asociados
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Histogram(BaseModel):
    """
    Histograma de bins uniformes.

    El bin i cubre [start + i·bin_width, start + (i+1)·bin_width).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    bin_width: float = Field(..., gt=0, description="Anchura de bin (s)")
    start: float = Field(..., description="Borde izquierdo del primer bin (s)")
    counts: np.ndarray
    total_starts: int = Field(0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _as_array(cls, data: dict[str, object]) -> dict[str, object]:
        if isinstance(data, dict):
            data = dict(data)
            data["counts"] = np.asarray(data.get("counts"), dtype=np.int64)
        return data

    @model_validator(mode="after")
    def _non_negative(self) -> "Histogram":
        if self.counts.ndim != 1 or self.counts.size == 0:
            raise ValueError("El histograma necesita al menos un bin")
        if np.any(self.counts < 0):
            raise ValueError("Las cuentas deben ser no negativas")
        return self

    @property
    def nbins(self) -> int:
        return int(self.counts.size)

    @property
    def edges(self) -> np.ndarray:
        return self.start + self.bin_width * np.arange(self.nbins + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.start + self.bin_width * (np.arange(self.nbins) + 0.5)

    @property
    def range(self) -> tuple[float, float]:
        return (self.start, self.start + self.bin_width * self.nbins)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


class G2Curve(BaseModel):
    """
    Curva g²(τ) normalizada.

    `norm` es el nivel de coincidencias no correlacionadas de cada bin, de modo
    que g2 = counts/norm y sigma = sqrt(max(counts, 1))/norm.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tau: np.ndarray
    counts: np.ndarray
    norm: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _as_arrays(cls, data: dict[str, object]) -> dict[str, object]:
        if isinstance(data, dict):
            data = dict(data)
            for key in ("tau", "counts", "norm"):
                data[key] = np.asarray(data.get(key), dtype=float)
        return data

    @model_validator(mode="after")
    def _check(self) -> "G2Curve":
        if not (self.tau.shape == self.counts.shape == self.norm.shape):
            raise ValueError("tau, cuentas y normalización deben tener igual forma")
        if np.any(self.norm <= 0):
            raise ValueError("La normalización debe ser positiva")
        return self

    @property
    def g2(self) -> np.ndarray:
        return self.counts / self.norm

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.counts, 1.0)) / self.norm

    def value_at_zero(self) -> float:
        """g² del bin más cercano a τ = 0"""
        return float(self.g2[np.argmin(np.abs(self.tau))])

    def log_rebin(self, linear_until: float, bins_per_decade: int = 10) -> "G2Curve":
        """
        Reagrupar en bandas logarítmicas a partir de |τ| = linear_until.

        Los bins con |τ| < linear_until se conservan; el resto se suma en bandas
        log-espaciadas por signo de τ (cuentas y normalizaciones se suman).
        """
        if linear_until <= 0 or bins_per_decade < 1:
            raise ValueError("linear_until y bins_per_decade deben ser positivos")
        abs_tau = np.abs(self.tau)
        keep = abs_tau < linear_until
        tau_parts = [self.tau[keep]]
        count_parts = [self.counts[keep]]
        norm_parts = [self.norm[keep]]
        far = ~keep
        if np.any(far):
            band = np.floor(
                bins_per_decade * np.log10(abs_tau[far] / linear_until)
            ).astype(np.int64)
            sign = np.sign(self.tau[far]).astype(np.int64)
            key = sign * (band + 1)
            for k in np.unique(key):
                members = key == k
                weights = self.counts[far][members]
                norms = self.norm[far][members]
                tau_parts.append(np.array([self.tau[far][members].mean()]))
                count_parts.append(np.array([weights.sum()]))
                norm_parts.append(np.array([norms.sum()]))
        tau = np.concatenate(tau_parts)
        order = np.argsort(tau, kind="stable")
        return G2Curve(
            tau=tau[order],
            counts=np.concatenate(count_parts)[order],
            norm=np.concatenate(norm_parts)[order],
        )


class G2Model(BaseModel):
    """Forma de tres niveles: baseline·(1 − (1+a)·e^{−|τ|/τ1} + a·e^{−|τ|/τ2})"""

    model_config = ConfigDict(frozen=True)

    tau1: float = Field(..., gt=0)
    tau2: float = Field(..., gt=0)
    a: float = Field(..., ge=0)
    baseline: float = Field(1.0, ge=0)

    @model_validator(mode="after")
    def _non_negative(self) -> "G2Model":
        # con τ1 ≤ τ2 el modelo es ≥ 0 para todo τ
        if self.a > 0 and self.tau1 > self.tau2:
            raise ValueError("Con a > 0 se requiere tau1 ≤ tau2")
        return self

    def evaluate(self, tau: np.ndarray) -> np.ndarray:
        x = np.abs(np.asarray(tau, dtype=float))
        return self.baseline * (
            1.0
            - (1.0 + self.a) * np.exp(-x / self.tau1)
            + self.a * np.exp(-x / self.tau2)
        )


class LifetimeModel(BaseModel):
    """Decaimiento monoexponencial convolucionado con un IRF gaussiano"""

    model_config = ConfigDict(frozen=True)

    T1: float = Field(..., gt=0)
    amplitude: float = Field(..., ge=0)
    background: float = 0.0
    irf_fwhm: float = Field(0.0, ge=0)
    t0: float = 0.0


class PulsedG2(BaseModel):
    """Resultado de normalizar un histograma pulsado por áreas de pico"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    g2_0: float
    peak_delays: np.ndarray
    peak_areas: np.ndarray
    reference_area: float
    excluded: int = Field(..., ge=0)
