"""
Schemas del motor de ajuste por mínimos cuadrados
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Bound = tuple[float | None, float | None]


class FitProblem(BaseModel):
    """
    Problema de mínimos cuadrados ponderados.

    Si `sigma` no se indica se usan pesos unidad; en ese caso conviene
    `absolute_sigma=False` para escalar la covarianza con el χ² reducido.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: str
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray
    initial: dict[str, float] | None = None
    bounds: dict[str, Bound] = Field(default_factory=dict)
    fixed: dict[str, float] = Field(default_factory=dict)
    max_iterations: int = Field(200, ge=1)
    ftol: float = Field(1e-10, gt=0)
    gtol: float = Field(1e-12, gt=0)
    absolute_sigma: bool = True

    @model_validator(mode="before")
    @classmethod
    def _as_arrays(cls, data: dict[str, object]) -> dict[str, object]:
        if isinstance(data, dict):
            data = dict(data)
            data["x"] = np.asarray(data.get("x"), dtype=float)
            data["y"] = np.asarray(data.get("y"), dtype=float)
            sigma = data.get("sigma")
            if sigma is None:
                data["sigma"] = np.ones_like(data["y"])
            else:
                data["sigma"] = np.broadcast_to(
                    np.asarray(sigma, dtype=float), np.shape(data["y"])
                ).copy()
        return data

    @field_validator("bounds")
    @classmethod
    def _ordered_bounds(cls, value: dict[str, Bound]) -> dict[str, Bound]:
        for name, (lo, hi) in value.items():
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"Límites invertidos para '{name}'")
        return value

    @model_validator(mode="after")
    def _check_data(self) -> "FitProblem":
        if self.y.ndim != 1 or self.y.shape != self.sigma.shape:
            raise ValueError("y y sigma deben ser vectores de igual longitud")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError("x e y deben tener el mismo número de muestras")
        if not np.all(np.isfinite(self.y)) or not np.all(np.isfinite(self.x)):
            raise ValueError("Los datos deben ser finitos")
        if not np.all(np.isfinite(self.sigma)) or np.any(self.sigma <= 0):
            raise ValueError("Las incertidumbres deben ser positivas")
        return self

    def scaled(self, factor: float) -> "FitProblem":
        """Mismo problema con y y sigma multiplicados por `factor`"""
        return self.model_copy(
            update={"y": self.y * factor, "sigma": self.sigma * factor}
        )


class FitParameter(BaseModel):
    """Valor ajustado, error 1σ y unidad"""

    value: float
    stderr: float
    unit: str = ""
    fixed: bool = False

    @field_validator("stderr")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if not math.isnan(value) and value < 0:
            raise ValueError("El error estándar no puede ser negativo")
        return value


class FitResult(BaseModel):
    """Resultado de un ajuste; nunca se lanza excepción por no converger"""

    model: str
    params: dict[str, FitParameter]
    chi2: float
    dof: int
    chi2_reduced: float
    converged: bool
    iterations: int
    flags: list[str] = Field(default_factory=list)
    objective_history: list[float] = Field(default_factory=list)
    metrics: dict[str, float] = Field(default_factory=dict)
    gradient_norm: float = 0.0

    def value(self, name: str) -> float:
        return self.params[name].value

    def stderr(self, name: str) -> float:
        return self.params[name].stderr

    def values(self) -> dict[str, float]:
        return {name: p.value for name, p in self.params.items()}

    def has_flag(self, prefix: str) -> bool:
        return any(flag.startswith(prefix) for flag in self.flags)

    def with_metrics(self, **metrics: float) -> "FitResult":
        return self.model_copy(update={"metrics": {**self.metrics, **metrics}})

    def with_flags(self, *flags: str) -> "FitResult":
        merged = list(self.flags)
        merged.extend(f for f in flags if f not in merged)
        return self.model_copy(update={"flags": merged})
