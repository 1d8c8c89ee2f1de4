"""
Histogramas de flujos de etiquetas: correlación cruzada completa, g² continua
y pulsada, histogramas de tiempo de vida, normalización y ajustes.
"""

import math

import numba
import numpy as np
from numba import prange

from app.core.config import get_settings, thread_count
from app.core.errors import ChannelError, InsufficientDataError, PhysicsDomainError
from app.core.logging import get_logger
from app.core.units import FWHM_TO_SIGMA
from app.schemas.fit import FitProblem, FitResult
from app.schemas.histogram import G2Curve, Histogram, PulsedG2
from app.schemas.tags import SYNC_CHANNEL, TagStream
from app.services.fit_engine import lm_minimize, multi_start
from app.services.models import get_registry

logger = get_logger(__name__)


def _check_channel(stream: TagStream, ch: int) -> None:
    if ch == SYNC_CHANNEL or ch < stream.channels or ch in stream.present_channels():
        return
    raise ChannelError(
        f"Canal {ch} inexistente (el flujo tiene {stream.channels} canales)"
    )


def snap_bin(bin_width: float, resolution: float) -> int:
    """Anchura de bin en ticks, redondeada a un número impar"""
    if bin_width <= 0:
        raise PhysicsDomainError("La anchura de bin debe ser positiva")
    ticks = max(1, round(bin_width / resolution))
    if ticks % 2 == 0:
        ticks += 1
    return ticks


@numba.njit(parallel=True, cache=True)
def _correlate_kernel(ta, tb, same, bin_ticks, half_bins, n_chunks):
    nbins = 2 * half_bins + 1
    partial = np.zeros((n_chunks, nbins), dtype=np.int64)
    n = ta.size
    chunk = (n + n_chunks - 1) // n_chunks
    half = bin_ticks // 2
    maxlag = half_bins * bin_ticks + half
    for c in prange(n_chunks):
        lo = c * chunk
        hi = min(n, lo + chunk)
        if lo >= hi:
            continue
        j0 = np.searchsorted(tb, ta[lo] - maxlag)
        for i in range(lo, hi):
            t = ta[i]
            while j0 < tb.size and tb[j0] < t - maxlag:
                j0 += 1
            j = j0
            while j < tb.size and tb[j] <= t + maxlag:
                if not (same and j == i):
                    d = tb[j] - t
                    if d >= 0:
                        k = (d + half) // bin_ticks
                    else:
                        k = -((half - d) // bin_ticks)
                    partial[c, k + half_bins] += 1
                j += 1
    return partial


def correlate(
    stream: TagStream, ch_a: int, ch_b: int, bin_width: float, window: float
) -> Histogram:
    """
    Correlación cruzada completa (todas las parejas, no start-stop).

    Los bins están centrados en múltiplos de la anchura de bin (ajustada a un
    número impar de ticks), de modo que la autocorrelación es exactamente
    simétrica. Se cuentan las parejas con |t_b − t_a| ≤ K·b + b/2, K = ⌊window/b⌋.
    """
    if window <= 0:
        raise PhysicsDomainError("La ventana debe ser positiva")
    _check_channel(stream, ch_a)
    _check_channel(stream, ch_b)
    bin_ticks = snap_bin(bin_width, stream.resolution)
    half_bins = int(math.floor(window / (bin_ticks * stream.resolution) + 1e-9))
    ta = np.ascontiguousarray(stream.ticks_of(ch_a))
    tb = np.ascontiguousarray(stream.ticks_of(ch_b))
    n_chunks = max(1, min(get_settings().CORRELATOR_CHUNKS, ta.size))
    numba.set_num_threads(min(thread_count(), numba.config.NUMBA_NUM_THREADS))
    partial = _correlate_kernel(ta, tb, ch_a == ch_b, bin_ticks, half_bins, n_chunks)
    counts = partial.sum(axis=0)
    width = bin_ticks * stream.resolution
    logger.info(
        "Correlación %d×%d: %d etiquetas, %d parejas en %d bins",
        ch_a,
        ch_b,
        ta.size + tb.size,
        int(counts.sum()),
        counts.size,
    )
    return Histogram(
        bin_width=width,
        start=-(half_bins + 0.5) * width,
        counts=counts,
        total_starts=int(ta.size),
    )


def normalize_cw(
    h: Histogram, rates: tuple[float, float], duration: float
) -> G2Curve:
    """Dividir por el nivel Poisson r_a·r_b·T·Δτ"""
    r_a, r_b = rates
    if r_a <= 0 or r_b <= 0:
        raise PhysicsDomainError("Las tasas deben ser positivas")
    if duration <= 0:
        raise PhysicsDomainError("La duración debe ser positiva")
    level = r_a * r_b * duration * h.bin_width
    return G2Curve(
        tau=h.centers, counts=h.counts.astype(float), norm=np.full(h.nbins, level)
    )


def normalize_by_tail(h: Histogram, tail_from: float) -> G2Curve:
    """Normalizar con el nivel medio de coincidencias para |τ| ≥ tail_from"""
    tail = np.abs(h.centers) >= tail_from
    if not np.any(tail):
        raise InsufficientDataError("No hay bins en la cola de normalización")
    level = float(h.counts[tail].mean())
    if level <= 0:
        raise InsufficientDataError("La cola del histograma está vacía")
    return G2Curve(
        tau=h.centers, counts=h.counts.astype(float), norm=np.full(h.nbins, level)
    )


def default_exclusion(rep_period: float, tau2: float) -> int:
    """Picos a excluir a cada lado: los que cumplen |τ| < 5·τ2"""
    if rep_period <= 0 or tau2 <= 0:
        raise PhysicsDomainError("Periodo y τ2 deben ser positivos")
    return max(0, math.ceil(5.0 * tau2 / rep_period) - 1)


MIN_PULSED_PEAKS = 21

# Reajustes con pesos del modelo en el ajuste de tiempo de vida
LIFETIME_REWEIGHT_PASSES = 5


def normalize_pulsed(h: Histogram, rep_period: float, exclude: int = 0) -> PulsedG2:
    """
    g²(0) pulsada por áreas de pico.

    Cada pico se integra en una ventana de anchura rep_period/2 centrada en
    k·rep_period; la referencia es la media de los picos con |k| > exclude.
    """
    if rep_period <= 0:
        raise PhysicsDomainError("El periodo debe ser positivo")
    if exclude < 0:
        raise PhysicsDomainError("El número de picos excluidos no puede ser negativo")
    lo, hi = h.range
    quarter = rep_period / 4.0
    k_min = math.ceil((lo + quarter) / rep_period - 1e-9)
    k_max = math.floor((hi - quarter) / rep_period + 1e-9)
    ks = np.arange(k_min, k_max + 1)
    if ks.size < MIN_PULSED_PEAKS:
        raise InsufficientDataError(
            f"Se necesitan al menos {MIN_PULSED_PEAKS} picos; hay {ks.size}"
        )
    centers = h.centers
    index = np.floor((centers + quarter) / rep_period).astype(np.int64)
    offset = centers - index * rep_period
    inside = (offset >= -quarter) & (offset < quarter)
    areas = np.array(
        [float(h.counts[inside & (index == k)].sum()) for k in ks], dtype=float
    )
    far = np.abs(ks) > exclude
    if not np.any(far):
        raise InsufficientDataError("No quedan picos lejanos para normalizar")
    reference = float(areas[far].mean())
    if reference <= 0:
        raise InsufficientDataError("Los picos lejanos están vacíos")
    zero = np.nonzero(ks == 0)[0]
    center = float(areas[zero[0]]) if zero.size else 0.0
    return PulsedG2(
        g2_0=center / reference,
        peak_delays=ks * rep_period,
        peak_areas=areas,
        reference_area=reference,
        excluded=exclude,
    )


def fit_g2(
    curve: G2Curve, n_starts: int | None = None, seed: int = 0
) -> FitResult:
    """
    Ajuste del modelo de tres niveles con pesos de Poisson y arranque múltiple.

    Marca `tau2_unidentifiable` (y `degenerate:tau2`) cuando la amplitud de
    agrupamiento no es significativa, y `timescales_not_separated` cuando
    τ2 < 3·τ1.
    """
    problem = FitProblem(
        model="g2_three_level",
        x=curve.tau,
        y=curve.g2,
        sigma=curve.sigma,
        max_iterations=400,
    )
    result = multi_start(problem, n=n_starts, seed=seed)
    a, a_err = result.value("a"), result.stderr("a")
    tau2, tau2_err = result.value("tau2"), result.stderr("tau2")
    flags: list[str] = []
    if (
        a < 1e-3
        or not (a_err < a / 2.0)
        or not (tau2_err < tau2)
    ):
        flags += ["tau2_unidentifiable", "degenerate:tau2"]
    if tau2 < 3.0 * result.value("tau1"):
        flags.append("timescales_not_separated")
    return result.with_flags(*flags).with_metrics(g2_0=curve.value_at_zero())


def lifetime_histogram(
    stream: TagStream,
    sync_ch: int,
    det_ch: int,
    bin_width: float,
    period: float | None = None,
) -> Histogram:
    """Histograma de (detección − sincronismo anterior), plegado a un periodo"""
    sync = stream.ticks_of(sync_ch)
    if sync.size == 0:
        raise ChannelError(f"No hay etiquetas de sincronismo en el canal {sync_ch}")
    _check_channel(stream, det_ch)
    if period is not None:
        period_ticks = int(round(period / stream.resolution))
    elif sync.size >= 2:
        period_ticks = int(np.median(np.diff(sync)))
    else:
        raise InsufficientDataError("Con un solo pulso hay que indicar el periodo")
    if period_ticks <= 0:
        raise PhysicsDomainError("El periodo debe ser positivo")
    det = stream.ticks_of(det_ch)
    idx = np.searchsorted(sync, det, side="right") - 1
    delays = (det[idx >= 0] - sync[idx[idx >= 0]]) % period_ticks
    bin_ticks = max(1, round(bin_width / stream.resolution))
    nbins = math.ceil(period_ticks / bin_ticks)
    counts = np.bincount(delays // bin_ticks, minlength=nbins)[:nbins]
    logger.info("Tiempo de vida: %d detecciones sobre %d pulsos", delays.size, sync.size)
    return Histogram(
        bin_width=bin_ticks * stream.resolution,
        start=0.0,
        counts=counts,
        total_starts=int(sync.size),
    )


def fit_lifetime(
    h: Histogram, irf_fwhm: float = 0.0, period: float | None = None
) -> FitResult:
    """
    Ajuste de fondo + amplitud·(gaussiana(IRF) ⊛ exponencial(T1)) plegada al
    periodo de repetición.

    El periodo por defecto es el rango del histograma; la anchura del IRF y
    el periodo se mantienen fijos y, sin IRF, el origen t0 se fija en 0. Los
    pesos se recalculan con el modelo (varianza de Poisson) hasta
    LIFETIME_REWEIGHT_PASSES veces.
    """
    if irf_fwhm < 0:
        raise PhysicsDomainError("La anchura del IRF no puede ser negativa")
    period = period if period is not None else h.range[1] - h.range[0]
    if period <= 0:
        raise PhysicsDomainError("El periodo debe ser positivo")
    # el último bin puede cubrir solo parte del periodo
    x = h.centers[:-1]
    y = h.counts[:-1].astype(float)
    fixed = {"irf_fwhm": irf_fwhm, "period": period}
    if irf_fwhm == 0:
        fixed["t0"] = 0.0
    problem = FitProblem(
        model="exp_irf_periodic",
        x=x,
        y=y,
        sigma=np.sqrt(np.maximum(y, 1.0)),
        fixed=fixed,
        max_iterations=400,
    )
    spec = get_registry().get(problem.model)
    result = lm_minimize(problem)
    for _ in range(LIFETIME_REWEIGHT_PASSES):
        values = result.values()
        expected = spec.evaluate(x, np.array([values[n] for n in spec.param_names]))
        problem = problem.model_copy(
            update={"sigma": np.sqrt(np.maximum(expected, 1.0)), "initial": values}
        )
        previous = result.value("T1")
        result = lm_minimize(problem)
        if abs(result.value("T1") - previous) <= 1e-6 * previous:
            break
    T1, T1_err = result.value("T1"), result.stderr("T1")
    if irf_fwhm * FWHM_TO_SIGMA > T1 or not (T1_err < 0.1 * T1):
        result = result.with_flags("t1_poorly_identified")
    return result


def intensity_trace(
    stream: TagStream, channels: list[int] | None, bin_width: float
) -> Histogram:
    """Cuentas por intervalo temporal (traza de parpadeo)"""
    selected = channels if channels is not None else list(range(stream.channels))
    for ch in selected:
        _check_channel(stream, ch)
    mask = np.isin(stream.channel, np.asarray(selected, dtype=np.uint8))
    ticks = stream.timestamp[mask]
    bin_ticks = max(1, round(bin_width / stream.resolution))
    last = int(stream.timestamp[-1]) if len(stream) else 0
    nbins = last // bin_ticks + 1
    counts = np.bincount(ticks // bin_ticks, minlength=nbins)
    return Histogram(
        bin_width=bin_ticks * stream.resolution,
        start=0.0,
        counts=counts,
        total_starts=int(ticks.size),
    )
