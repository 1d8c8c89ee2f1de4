"""
Interferómetro de Michelson virtual.

Interferogramas analíticos para una línea lorentziana y, en general, a partir
de cualquier espectro muestreado (g¹ como transformada de Fourier de la
densidad espectral). Extracción de la visibilidad por periodo de franja y
ajuste de la envolvente para obtener T2*.
"""

import math

import numpy as np
from numpy.typing import ArrayLike
from scipy import fft
from scipy.optimize import minimize_scalar

from app.core.errors import InsufficientDataError, PhysicsDomainError, UndersampledFringeError
from app.core.logging import get_logger
from app.core.units import PLANCK_EV_S
from app.schemas.coherence import CoherenceRates
from app.schemas.fit import FitProblem, FitResult
from app.schemas.interferometry import (
    EnvelopeShape,
    Interferogram,
    ShapeSelection,
    VisibilityTrace,
)
from app.schemas.spectrum import SampledSpectrum
from app.services.fit_engine import lm_minimize
from app.services.models import envelope_seeds

logger = get_logger(__name__)

# Muestras mínimas por periodo de franja
MIN_SAMPLES_PER_PERIOD = 8

# Relleno con ceros de la rejilla de frecuencias (resolución en retardo)
FFT_PADDING = 16
FFT_MAX_POINTS = 2**24

# Búsqueda de la frecuencia local alrededor de la pista
LOCAL_OMEGA_SPAN = 0.1

ENVELOPE_MODELS = {
    EnvelopeShape.EXPONENTIAL: "envelope_exp",
    EnvelopeShape.GAUSSIAN: "envelope_gauss",
}


def _delays(delays: ArrayLike) -> np.ndarray:
    tau = np.asarray(delays, dtype=float)
    if tau.ndim != 1 or not np.all(np.isfinite(tau)):
        raise PhysicsDomainError("Los retardos deben ser un vector de valores finitos")
    return tau


def michelson_lorentzian(
    rates: CoherenceRates, omega0: float, V0: float, delays: ArrayLike
) -> Interferogram:
    """N_out(τ) = ½·(1 + V0·e^{−Γ|τ|/2}·cos(ω0·τ))"""
    tau = _delays(delays)
    envelope = np.exp(-rates.Gamma_total * np.abs(tau) / 2.0)
    intensity = 0.5 * (1.0 + V0 * envelope * np.cos(omega0 * tau))
    return Interferogram(delays=tau, intensity=intensity, V0=V0)


def first_order_coherence(spec: SampledSpectrum, delays: ArrayLike) -> np.ndarray:
    """
    g¹(τ) complejo a partir del espectro (Wiener-Khintchine).

    La densidad se remuestrea en una rejilla uniforme de frecuencias referida
    al máximo espectral; la FFT da la envolvente en banda base, que se
    interpola en los retardos pedidos y se multiplica por la portadora exacta.
    g¹(0) = 1 por construcción.
    """
    tau = _delays(delays)
    nu = spec.energy / PLANCK_EV_S
    if spec.integral() <= 0 or not np.any(spec.counts > 0):
        raise PhysicsDomainError("El espectro tiene integral nula")
    if nu.size < 2:
        return np.exp(-2j * math.pi * nu[0] * tau)

    nu_ref = float(nu[int(np.argmax(spec.counts))])
    f = nu - nu_ref
    span = float(f[-1] - f[0])
    step = span / (nu.size - 1)
    tau_max = float(np.max(np.abs(tau))) if tau.size else 0.0
    if tau_max > 0:
        step = min(step, 1.0 / (4.0 * tau_max))
    m = int(math.ceil(span / step)) + 1
    n = 1 << int(math.ceil(math.log2(m * FFT_PADDING)))
    if n > FFT_MAX_POINTS:
        logger.warning("Rejilla de %d puntos recortada a %d", n, FFT_MAX_POINTS)
        n = FFT_MAX_POINTS
        m = min(m, n // 2)
        step = span / (m - 1)

    grid = f[0] + step * np.arange(m)
    density = np.interp(grid, f, spec.counts, left=0.0, right=0.0)
    total = float(density.sum())
    if total <= 0:
        raise PhysicsDomainError("El espectro tiene integral nula")

    padded = np.zeros(n)
    padded[:m] = density / total
    transform = fft.fftshift(fft.fft(padded))
    lags = fft.fftshift(fft.fftfreq(n, d=step))
    baseband = transform * np.exp(-2j * math.pi * f[0] * lags)
    g1 = np.interp(tau, lags, baseband.real) + 1j * np.interp(tau, lags, baseband.imag)
    return g1 * np.exp(-2j * math.pi * nu_ref * tau)


def interferogram_from_spectrum(
    spec: SampledSpectrum, V0: float, delays: ArrayLike
) -> Interferogram:
    """N_out(τ) = ½·(1 + V0·Re g¹(τ))"""
    tau = _delays(delays)
    g1 = first_order_coherence(spec, tau)
    intensity = 0.5 * (1.0 + V0 * np.clip(g1.real, -1.0, 1.0))
    return Interferogram(delays=tau, intensity=intensity, V0=V0)


def _fringe_fit(tau: np.ndarray, y: np.ndarray, omega: float) -> tuple[float, float, float]:
    design = np.column_stack([np.ones_like(tau), np.cos(omega * tau), np.sin(omega * tau)])
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sum((design @ coef - y) ** 2))
    return float(coef[0]), float(math.hypot(coef[1], coef[2])), residual


def extract_visibility(ig: Interferogram, omega0_hint: float) -> VisibilityTrace:
    """
    Visibilidad por periodo de franja.

    En cada ventana de un periodo local se ajusta c + α·cos(ωτ) + β·sin(ωτ)
    con ω refinado alrededor de la estimación anterior; V = |(α, β)|/c, que
    equivale a (I_max − I_min)/(I_max + I_min) para una franja sinusoidal.
    """
    if omega0_hint <= 0:
        raise PhysicsDomainError("La frecuencia de la franja debe ser positiva")
    tau, intensity = ig.delays, ig.intensity
    omega = omega0_hint
    start = float(tau[0]) if tau.size else 0.0
    centers: list[float] = []
    values: list[float] = []
    while tau.size:
        period = 2.0 * math.pi / omega
        stop = start + period
        if stop > tau[-1]:
            break
        window = (tau >= start) & (tau < stop)
        count = int(np.count_nonzero(window))
        if count < MIN_SAMPLES_PER_PERIOD:
            raise UndersampledFringeError(
                f"{count} muestras en el periodo que empieza en {start:.4g} s; "
                f"se necesitan {MIN_SAMPLES_PER_PERIOD}"
            )
        t, y = tau[window], intensity[window]
        local = minimize_scalar(
            lambda w: _fringe_fit(t, y, w)[2],
            bounds=(omega * (1.0 - LOCAL_OMEGA_SPAN), omega * (1.0 + LOCAL_OMEGA_SPAN)),
            method="bounded",
        )
        offset, amplitude, _ = _fringe_fit(t, y, float(local.x))
        if offset > 0:
            centers.append(float(t.mean()))
            values.append(amplitude / offset)
            omega = float(local.x)
        start = stop
    if not centers:
        raise InsufficientDataError("El interferograma no cubre ni un periodo de franja")
    logger.info("Visibilidad extraída en %d periodos", len(centers))
    return VisibilityTrace(delays=np.array(centers), visibility=np.array(values))


def _envelope_problem(
    v: VisibilityTrace, shape: EnvelopeShape, initial: dict[str, float] | None = None
) -> FitProblem:
    return FitProblem(
        model=ENVELOPE_MODELS[shape],
        x=v.delays,
        y=v.visibility,
        initial=initial,
        absolute_sigma=False,
    )


def _fit_shape(v: VisibilityTrace, shape: EnvelopeShape) -> FitResult:
    """Mejor ajuste (menor χ²) entre el arranque log-lineal y los del cruce 1/e"""
    starts: list[dict[str, float] | None] = [None]
    starts.extend(envelope_seeds(v.delays, v.visibility))
    results = [lm_minimize(_envelope_problem(v, shape, start)) for start in starts]
    return min(
        results, key=lambda r: r.chi2 if math.isfinite(r.chi2) else math.inf
    )


def select_shape(v: VisibilityTrace) -> ShapeSelection:
    """χ² de las dos formas de envolvente y la preferida (menor χ²)"""
    if len(v) < 6:
        raise InsufficientDataError("Se necesitan al menos 6 puntos de visibilidad")
    chi2 = {shape: _fit_shape(v, shape).chi2 for shape in EnvelopeShape}
    preferred = min(EnvelopeShape, key=lambda s: chi2[s])
    return ShapeSelection(
        chi2_exponential=chi2[EnvelopeShape.EXPONENTIAL],
        chi2_gaussian=chi2[EnvelopeShape.GAUSSIAN],
        preferred=preferred,
    )


def fit_envelope(
    v: VisibilityTrace, shape: EnvelopeShape | str | None = None
) -> FitResult:
    """
    Ajuste de V0·e^{−τ/T2*} o V0·e^{−(τ/T2*)²}.

    Sin forma (o con "auto") se ajustan ambas, se devuelve la de menor χ² y se
    añaden las métricas chi2_exponential y chi2_gaussian.
    """
    if len(v) < 6:
        raise InsufficientDataError("Se necesitan al menos 6 puntos de visibilidad")
    if shape is None or shape == "auto":
        selection = select_shape(v)
        result = _fit_shape(v, selection.preferred).with_metrics(
            chi2_exponential=selection.chi2_exponential,
            chi2_gaussian=selection.chi2_gaussian,
        )
    else:
        result = _fit_shape(v, EnvelopeShape(shape))
    span = float(np.max(np.abs(v.delays)) - np.min(np.abs(v.delays)))
    if span < 2.0 * result.value("T2_star"):
        result = result.with_flags("short_delay_span")
    return result


def lorentzian_coherence_time(fwhm_ev: float) -> float:
    """Retardo 1/e de |g¹| para una lorentziana: h/(π·fwhm)"""
    if fwhm_ev <= 0:
        raise PhysicsDomainError("La anchura de línea debe ser positiva")
    return PLANCK_EV_S / (math.pi * fwhm_ev)


def delay_scan_plan(
    fine_window: float,
    coarse_range: tuple[float, float],
    points_per_window: int = 20,
    coarse_step: float | None = None,
) -> np.ndarray:
    """
    Barrido en dos niveles: ventanas finas (piezo) de `points_per_window`
    puntos, separación fine_window/points_per_window, situadas en posiciones
    gruesas (motor) que cubren coarse_range.

    Por defecto las ventanas quedan contiguas; un paso grueso menor que la
    ventana fina las solaparía y es un error.
    Con coarse_range de longitud nula el plan es una única ventana fina.
    """
    lo, hi = coarse_range
    if fine_window <= 0:
        raise PhysicsDomainError("La ventana fina debe ser positiva")
    if points_per_window < 2:
        raise PhysicsDomainError("Se necesitan al menos 2 puntos por ventana")
    if lo > hi:
        raise PhysicsDomainError("El rango grueso debe estar ordenado")
    step = fine_window if coarse_step is None else coarse_step
    if step < fine_window * (1.0 - 1e-12):
        raise PhysicsDomainError("Las ventanas finas se solapan: paso grueso menor que la ventana")
    spacing = fine_window / points_per_window
    if lo == hi:
        # rango grueso nulo: una sola ventana fina desde lo
        return lo + spacing * np.arange(points_per_window)
    positions = lo + step * np.arange(int(math.floor((hi - lo) / step + 1e-9)) + 1)
    fine = spacing * np.arange(points_per_window)
    plan = (positions[:, None] + fine[None, :]).ravel()
    return plan[plan <= hi + 1e-18]
