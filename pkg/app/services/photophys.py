"""
Física en forma cerrada: espectros, álgebra de tasas de coherencia, filtros,
factor de Debye-Waller y métricas escalares derivadas.

Todas las funciones son puras sobre valores inmutables.
"""

import math
from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike
from joblib import Parallel, delayed
from scipy.signal import find_peaks, peak_widths

from app.core.config import thread_count
from app.core.errors import PhysicsDomainError
from app.core.logging import get_logger
from app.core.units import PLANCK_EV_S
from app.schemas.coherence import CoherenceRates, SaturationModel
from app.schemas.fit import FitProblem, FitResult
from app.schemas.spectrum import (
    ComponentKind,
    FilterSpec,
    LorentzianComponent,
    ParametricSpectrum,
    SampledSpectrum,
    SpectrumFit,
)
from app.services.fit_engine import lm_minimize
from app.services.models import lorentzian_peaks

logger = get_logger(__name__)

# Ventanas de clasificación respecto a la ZPL (eV)
LE_WINDOW_EV = 0.100
LO_WINDOW_EV = (0.140, 0.210)

# Residuo relativo a partir del cual se añade una componente
RESIDUAL_THRESHOLD = 5e-3

# Semillas probadas por cada componente añadida
RESIDUAL_CANDIDATES = 4


def _components(
    spec: ParametricSpectrum | Sequence[LorentzianComponent],
) -> tuple[LorentzianComponent, ...]:
    if isinstance(spec, ParametricSpectrum):
        return spec.components
    components = tuple(spec)
    if not components:
        raise PhysicsDomainError("El espectro necesita al menos una componente")
    return components


def lorentzian_density(
    spec: ParametricSpectrum | Sequence[LorentzianComponent], energy: ArrayLike
) -> np.ndarray:
    """Densidad espectral Σ area·(fwhm/2π)/((E − center)² + (fwhm/2)²)"""
    e = np.asarray(energy, dtype=float)
    out = np.zeros_like(e)
    for c in _components(spec):
        out += c.area * (c.fwhm / (2.0 * math.pi)) / ((e - c.center) ** 2 + (c.fwhm / 2.0) ** 2)
    return out


def evaluate_spectrum(
    spec: ParametricSpectrum | Sequence[LorentzianComponent], grid: ArrayLike
) -> SampledSpectrum:
    """Muestrear un espectro paramétrico sobre una rejilla estrictamente creciente"""
    energy = np.asarray(grid, dtype=float)
    if energy.ndim != 1 or np.any(np.diff(energy) <= 0):
        raise PhysicsDomainError("La rejilla de energías debe ser estrictamente creciente")
    return SampledSpectrum(energy=energy, counts=lorentzian_density(spec, energy))


def dw_factor(spec: ParametricSpectrum | Sequence[LorentzianComponent]) -> float:
    """Factor de Debye-Waller: área(ZPL)/área total"""
    components = _components(spec)
    total = sum(c.area for c in components)
    if total <= 0:
        raise PhysicsDomainError("El área total del espectro es cero")
    if not any(c.kind == ComponentKind.ZPL for c in components):
        raise PhysicsDomainError("El espectro no tiene componente ZPL")
    zpl = sum(c.area for c in components if c.kind == ComponentKind.ZPL)
    return zpl / total


def kind_fractions(
    spec: ParametricSpectrum | Sequence[LorentzianComponent],
) -> dict[str, float]:
    """Fracción de área por tipo de componente"""
    components = _components(spec)
    total = sum(c.area for c in components)
    if total <= 0:
        raise PhysicsDomainError("El área total del espectro es cero")
    return {
        kind.value: sum(c.area for c in components if c.kind == kind) / total
        for kind in ComponentKind
    }


def apply_filter(spec: SampledSpectrum, f: FilterSpec) -> SampledSpectrum:
    """Anular las cuentas fuera de [low_edge, high_edge]; la rejilla no cambia"""
    counts = np.where(f.passes(spec.energy), spec.counts, 0.0)
    return SampledSpectrum(energy=spec.energy, counts=counts)


def _check_time(name: str, value: float) -> None:
    if math.isnan(value) or value <= 0:
        raise PhysicsDomainError(f"{name} debe ser positivo (recibido {value})")


def coherence_from_times(T1: float, T2_star: float) -> CoherenceRates:
    """
    Tasas de coherencia a partir de T1 y T2*.

    gamma = 1/T1, gamma_star = 1/T2*, Gamma_total = gamma + 2·gamma_star,
    T2 = 2/Gamma_total. Se admite infinito en uno de los dos tiempos.
    """
    _check_time("T1", T1)
    _check_time("T2_star", T2_star)
    gamma = 1.0 / T1
    gamma_star = 1.0 / T2_star
    total = gamma + 2.0 * gamma_star
    if total <= 0:
        raise PhysicsDomainError("T1 y T2* no pueden ser ambos infinitos")
    return CoherenceRates(
        T1=T1,
        T2_star=T2_star,
        gamma=gamma,
        gamma_star=gamma_star,
        Gamma_total=total,
        T2=2.0 / total,
    )


def fourier_limited_linewidth(T1: float) -> float:
    """Anchura limitada por Fourier 1/(2π·T1) en Hz"""
    _check_time("T1", T1)
    return 1.0 / (2.0 * math.pi * T1)


def linewidth_hz(rates: CoherenceRates) -> float:
    """FWHM de la línea en Hz: Gamma_total/(2π)"""
    return rates.linewidth_hz


def linewidth_to_coherence_time(fwhm_ev: float) -> float:
    """Tiempo 1/e de |g¹| para una lorentziana de FWHM dada en eV: h/(π·fwhm)"""
    if fwhm_ev <= 0:
        raise PhysicsDomainError("La anchura de línea debe ser positiva")
    return PLANCK_EV_S / (math.pi * fwhm_ev)


def indistinguishability(rates: CoherenceRates) -> float:
    """gamma/Gamma_total = T2/(2·T1)"""
    return rates.gamma / rates.Gamma_total


def source_to_detector_efficiency(I_inf: float, T1: float) -> float:
    """Eficiencia fuente-detector en continua: I_inf·T1"""
    if I_inf < 0:
        raise PhysicsDomainError("I_inf no puede ser negativo")
    _check_time("T1", T1)
    return I_inf * T1


def pulsed_source_to_detector_efficiency(I_inf: float, rep_rate: float) -> float:
    """Eficiencia fuente-detector en pulsado: I_inf/rep_rate"""
    if I_inf < 0:
        raise PhysicsDomainError("I_inf no puede ser negativo")
    if rep_rate <= 0:
        raise PhysicsDomainError("La frecuencia de repetición debe ser positiva")
    return I_inf / rep_rate


def saturation_intensity(model: SaturationModel, P: ArrayLike) -> np.ndarray | float:
    """I(P) = I_inf/(1 + P_sat/P)"""
    power = np.asarray(P, dtype=float)
    if np.any(~(power > 0)):
        raise PhysicsDomainError("La potencia debe ser positiva")
    value = model.I_inf / (1.0 + model.P_sat / power)
    return float(value) if value.ndim == 0 else value


def excitation_detuning(laser_ev: float, zpl_ev: float) -> float:
    """Exceso de energía del láser sobre la ZPL (eV)"""
    return laser_ev - zpl_ev


def dw_statistics(values: Sequence[float]) -> tuple[float, float]:
    """Media y desviación típica muestral de factores DW de una población"""
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise PhysicsDomainError("Se necesita al menos un valor")
    if np.any((data < 0) | (data > 1)):
        raise PhysicsDomainError("Los factores DW deben estar en [0, 1]")
    std = float(np.std(data, ddof=1)) if data.size > 1 else 0.0
    return float(np.mean(data)), std


def classify_components(
    components: Sequence[LorentzianComponent],
    zpl: LorentzianComponent | None = None,
) -> tuple[LorentzianComponent, ...]:
    """
    Etiquetar componentes ajustadas.

    La ZPL es la componente más alta salvo que se indique; LE si su centro
    está a menos de 100 meV de la ZPL, LO si está entre 140 y 210 meV por
    debajo, y `other` en otro caso.
    """
    if not components:
        raise PhysicsDomainError("No hay componentes que clasificar")
    reference = zpl if zpl is not None else max(components, key=lambda c: c.peak_height)
    tagged = []
    for c in components:
        if c is reference or (
            zpl is not None and c.center == zpl.center and c.fwhm == zpl.fwhm
        ):
            kind = ComponentKind.ZPL
        else:
            shift = reference.center - c.center
            if abs(shift) < LE_WINDOW_EV:
                kind = ComponentKind.LE_PHONON
            elif LO_WINDOW_EV[0] <= shift <= LO_WINDOW_EV[1]:
                kind = ComponentKind.LO_PHONON
            else:
                kind = ComponentKind.OTHER
        tagged.append(c.model_copy(update={"kind": kind}))
    return tuple(tagged)


def _blocks(result: FitResult) -> list[LorentzianComponent]:
    values = result.values()
    count = sum(1 for name in values if name.startswith("center_"))
    return [
        LorentzianComponent(
            center=values[f"center_{i}"],
            fwhm=values[f"fwhm_{i}"],
            area=values[f"area_{i}"],
        )
        for i in range(count)
    ]


def _initial_from(components: Sequence[LorentzianComponent]) -> dict[str, float]:
    initial: dict[str, float] = {}
    for i, c in enumerate(components):
        initial[f"center_{i}"] = c.center
        initial[f"fwhm_{i}"] = c.fwhm
        initial[f"area_{i}"] = c.area
    return initial


def _residual_candidates(
    energy: np.ndarray, residual: np.ndarray, limit: int = RESIDUAL_CANDIDATES
) -> list[LorentzianComponent]:
    """Lorentzianas semilla en los máximos más altos del residuo positivo, a ambos lados"""
    positive = np.clip(residual, 0.0, None)
    top = float(np.max(positive))
    if top <= 0:
        return []
    peaks, _ = find_peaks(positive, prominence=0.05 * top)
    peaks = np.union1d(peaks, [int(np.argmax(positive))])
    peaks = peaks[np.argsort(positive[peaks])[::-1][:limit]]
    _, _, left, right = peak_widths(positive, peaks, rel_height=0.5)
    index = np.arange(energy.size, dtype=float)
    spacing = float(np.median(np.diff(energy)))
    candidates = []
    for i, peak in enumerate(peaks):
        fwhm = float(np.interp(right[i], index, energy) - np.interp(left[i], index, energy))
        fwhm = max(fwhm, 2.0 * spacing)
        candidates.append(
            LorentzianComponent(
                center=float(energy[peak]),
                fwhm=fwhm,
                area=float(positive[peak]) * math.pi * fwhm / 2.0,
            )
        )
    return candidates


def fit_spectrum(
    sampled: SampledSpectrum,
    initial: Sequence[LorentzianComponent] | None = None,
    max_components: int = 6,
) -> SpectrumFit:
    """
    Descomposición en lorentzianas de un espectro muestreado.

    Parte de los máximos locales (o de `initial`) y, mientras el residuo
    supere el 0.5% del máximo, prueba una componente nueva en cada uno de los
    máximos más altos del residuo (a ambos lados de la ZPL) y se queda con la
    de menor χ², hasta `max_components`. Después clasifica las componentes y
    calcula el factor DW.
    """
    energy, counts = sampled.energy, sampled.counts
    peak = float(np.max(counts))
    if peak <= 0:
        raise PhysicsDomainError("El espectro no tiene cuentas")

    if initial:
        start = _initial_from(initial)
    else:
        start = lorentzian_peaks(energy, counts, max_components=max_components)

    def run(params: dict[str, float]) -> FitResult:
        return lm_minimize(
            FitProblem(
                model="multi_lorentzian",
                x=energy,
                y=counts,
                initial=params,
                absolute_sigma=False,
                max_iterations=500,
            )
        )

    result = run(start)
    components = _blocks(result)
    while len(components) < max_components:
        residual = counts - lorentzian_density(components, energy)
        if np.max(np.abs(residual)) <= RESIDUAL_THRESHOLD * peak:
            break
        extras = _residual_candidates(energy, residual)
        if not extras:
            break
        jobs = max(1, min(len(extras), thread_count()))
        trials = Parallel(n_jobs=jobs, prefer="threads")(
            delayed(run)(_initial_from([*components, extra])) for extra in extras
        )
        candidate = min(
            trials, key=lambda r: r.chi2 if math.isfinite(r.chi2) else math.inf
        )
        if not candidate.chi2 < result.chi2:
            break
        result = candidate
        components = _blocks(result)
        logger.debug("Espectro: %d componentes, chi2=%.4g", len(components), result.chi2)

    tagged = classify_components(components)
    spectrum = ParametricSpectrum(components=tagged)
    dw = dw_factor(spectrum)
    logger.info("Espectro ajustado con %d componentes, DW=%.3f", len(tagged), dw)
    return SpectrumFit(
        spectrum=spectrum,
        dw_factor=dw,
        kind_fractions=kind_fractions(spectrum),
        chi2_reduced=result.chi2_reduced,
        converged=result.converged,
    )


def fit_saturation(
    P: ArrayLike, intensity: ArrayLike, sigma: ArrayLike | None = None
) -> FitResult:
    """Ajuste I(P) = I_inf/(1 + P_sat/P); sin sigma se usan pesos unidad"""
    power = np.asarray(P, dtype=float)
    if np.any(power <= 0):
        raise PhysicsDomainError("Las potencias deben ser positivas")
    problem = FitProblem(
        model="saturation",
        x=power,
        y=np.asarray(intensity, dtype=float),
        sigma=None if sigma is None else np.asarray(sigma, dtype=float),
        absolute_sigma=sigma is not None,
    )
    return lm_minimize(problem)
