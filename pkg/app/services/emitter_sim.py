"""
Simulación Monte Carlo de un emisor de tres niveles (G, E, D) y de la cadena
de detección hasta un flujo de etiquetas temporales.

Continua: muestreo exacto vectorizado. En cada visita a E el sistema emite
(1/T1) o se apaga (shelve_rate); las emisiones se adelgazan con la eficiencia
de colección antes de generarse, de modo que sólo se sortean los eventos
relevantes (emisión recogida o paso al estado oscuro).

Pulsada: núcleo numba pulso a pulso con re-excitación dentro del pulso.
"""

import math

import numba
import numpy as np
from numpy.typing import ArrayLike

from app.core.errors import ConfigError, PhysicsDomainError
from app.core.logging import get_logger
from app.core.units import FWHM_TO_SIGMA
from app.schemas.emitter import (
    BlinkingRecord,
    DetectorModel,
    DriveMode,
    EmitterParams,
    PulseTrain,
    SimConfig,
    SplitterMode,
)
from app.schemas.tags import SYNC_CHANNEL, TagStream

logger = get_logger(__name__)

CW_BLOCK = 1 << 18
PULSE_BUFFER = 1 << 20
MAX_EMISSIONS_PER_PULSE = 64
# Tasa de bombeo dentro del pulso cuando p = 1 (en unidades de 1/anchura)
SATURATED_PULSE_RATE = 50.0


def power_to_pump_rate(P: float, P_sat: float, T1: float) -> float:
    """Bombeo CW tal que pump·T1 = P/P_sat"""
    if P < 0 or P_sat <= 0 or T1 <= 0:
        raise PhysicsDomainError("Potencias y T1 deben ser positivos")
    return (P / P_sat) / T1


def pulse_excitation_probability(P: float, P_ref: float) -> float:
    """Probabilidad de excitación por pulso: 1 − exp(−P/P_ref)"""
    if P < 0 or P_ref <= 0:
        raise PhysicsDomainError("Las potencias deben ser positivas")
    return -math.expm1(-P / P_ref)


def resolve_pump_rate(e: EmitterParams, c: SimConfig) -> float:
    if c.power is not None and e.P_sat is not None:
        return power_to_pump_rate(c.power, e.P_sat, e.T1)
    return e.pump_rate


def resolve_pulse(e: EmitterParams, c: SimConfig) -> PulseTrain:
    if e.pulse is None:
        raise ConfigError("El modo pulsado requiere un tren de pulsos")
    if c.power is not None and e.pulse.P_ref is not None:
        p = pulse_excitation_probability(c.power, e.pulse.P_ref)
        return e.pulse.model_copy(update={"excitation_probability": p})
    return e.pulse


def seed_sequences(seed: int, n: int = 2) -> list[np.random.SeedSequence]:
    """Semillas independientes derivadas de la semilla de la simulación"""
    return np.random.SeedSequence(seed).spawn(n)


def _trajectory_rng(c: SimConfig) -> np.random.Generator:
    return np.random.default_rng(seed_sequences(c.seed)[0])


def _detector_rng(c: SimConfig) -> np.random.Generator:
    return np.random.default_rng(seed_sequences(c.seed)[1])


# ===== Continua =====


def _cw_record(
    rng: np.random.Generator,
    pump: float,
    k_r: float,
    k_s: float,
    k_d: float,
    eta: float,
    duration: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k_e = k_r + k_s
    q = k_s / k_e
    p_event = q + (1.0 - q) * eta
    empty = np.empty(0)
    if pump <= 0 or p_event <= 0:
        return empty, empty, empty
    p_shelve = q / p_event

    emissions: list[np.ndarray] = []
    dark_start: list[np.ndarray] = []
    dark_end: list[np.ndarray] = []
    t = 0.0
    while t < duration:
        visits = rng.geometric(p_event, CW_BLOCK)
        dwell = rng.gamma(visits, 1.0 / pump) + rng.gamma(visits, 1.0 / k_e)
        shelve = rng.random(CW_BLOCK) < p_shelve
        if k_d > 0:
            dark = np.where(shelve, rng.exponential(1.0 / k_d, CW_BLOCK), 0.0)
        else:
            dark = np.where(shelve, np.inf, 0.0)
        ends = t + np.cumsum(dwell + dark)
        starts = np.concatenate(([t], ends[:-1]))
        events = starts + dwell
        inside = events < duration
        emissions.append(events[inside & ~shelve])
        dark_start.append(events[inside & shelve])
        dark_end.append(ends[inside & shelve])
        if not inside[-1]:
            break
        t = float(ends[-1])
    return np.concatenate(emissions), np.concatenate(dark_start), np.concatenate(dark_end)


# ===== Pulsada =====


@numba.njit(cache=True)
def _pulsed_kernel(
    rng,
    first,
    last,
    period,
    width,
    rate,
    p,
    k_e,
    q,
    k_d,
    eta,
    free_at,
    out,
    dark_start,
    dark_end,
):
    n = 0
    nd = 0
    k = first
    while k < last:
        if n + MAX_EMISSIONS_PER_PULSE > out.size or nd + 1 > dark_start.size:
            break
        t_k = k * period
        end = t_k + width
        t = max(t_k, free_at)
        emitted = 0
        while emitted < MAX_EMISSIONS_PER_PULSE:
            if width > 0.0:
                if t >= end:
                    break
                t_exc = t + rng.standard_exponential() / rate
                if t_exc >= end:
                    break
            else:
                if free_at > t_k or emitted > 0:
                    break
                if p < 1.0 and rng.random() >= p:
                    break
                t_exc = t_k
            t_e = t_exc + rng.standard_exponential() / k_e
            if q > 0.0 and rng.random() < q:
                dark_start[nd] = t_e
                if k_d > 0.0:
                    free_at = t_e + rng.standard_exponential() / k_d
                else:
                    free_at = np.inf
                dark_end[nd] = free_at
                nd += 1
                break
            emitted += 1
            if eta >= 1.0 or rng.random() < eta:
                out[n] = t_e
                n += 1
            free_at = t_e
            t = t_e
        k += 1
        if free_at == np.inf:
            k = last
    return n, nd, k, free_at


def pulse_count(duration: float, rep_rate: float) -> int:
    """Número de pulsos en la adquisición (al menos uno, en t = 0)"""
    return max(1, math.ceil(duration * rep_rate - 1e-9))


def _pulsed_record(
    rng: np.random.Generator,
    pulse: PulseTrain,
    k_r: float,
    k_s: float,
    k_d: float,
    eta: float,
    duration: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k_e = k_r + k_s
    q = k_s / k_e
    p = pulse.excitation_probability
    width = pulse.pulse_width
    if width > 0:
        rate = -math.log1p(-p) / width if p < 1.0 else SATURATED_PULSE_RATE / width
    else:
        rate = 0.0
    if p <= 0:
        empty = np.empty(0)
        return empty, empty, empty
    n_pulses = pulse_count(duration, pulse.rep_rate)
    emissions: list[np.ndarray] = []
    dark_start: list[np.ndarray] = []
    dark_end: list[np.ndarray] = []
    out = np.empty(PULSE_BUFFER)
    ds = np.empty(PULSE_BUFFER)
    de = np.empty(PULSE_BUFFER)
    k = 0
    free_at = 0.0
    while k < n_pulses:
        n, nd, k, free_at = _pulsed_kernel(
            rng, k, n_pulses, pulse.period, width, rate, p, k_e, q, k_d, eta,
            free_at, out, ds, de,
        )
        emissions.append(out[:n].copy())
        dark_start.append(ds[:nd].copy())
        dark_end.append(de[:nd].copy())
    times = np.concatenate(emissions)
    starts = np.concatenate(dark_start)
    ends = np.concatenate(dark_end)
    inside = starts < duration
    return times[times < duration], starts[inside], ends[inside]


def simulate_blinking_record(e: EmitterParams, c: SimConfig) -> BlinkingRecord:
    """
    Trayectoria completa: emisiones recogidas e intervalos en el estado oscuro.

    Determinista dada la semilla de `c`.
    """
    rng = _trajectory_rng(c)
    k_r = 1.0 / e.T1
    if c.drive_mode == DriveMode.CW:
        pump = resolve_pump_rate(e, c)
        emissions, starts, ends = _cw_record(
            rng, pump, k_r, e.shelve_rate, e.deshelve_rate,
            c.collection_efficiency, c.duration,
        )
    else:
        emissions, starts, ends = _pulsed_record(
            rng, resolve_pulse(e, c), k_r, e.shelve_rate, e.deshelve_rate,
            c.collection_efficiency, c.duration,
        )
    logger.info(
        "Trayectoria %s: %d emisiones, %d apagados en %.3g s",
        c.drive_mode.value,
        emissions.size,
        starts.size,
        c.duration,
    )
    return BlinkingRecord(
        duration=c.duration, emissions=emissions, dark_start=starts, dark_end=ends
    )


def simulate_trajectory(e: EmitterParams, c: SimConfig) -> np.ndarray:
    """Instantes de emisión (s), ordenados"""
    return simulate_blinking_record(e, c).emissions


# ===== Detección =====


@numba.njit(cache=True)
def _dead_time_mask(channel, ticks, dead_ticks):
    keep = np.ones(ticks.size, dtype=np.bool_)
    last = np.zeros(256, dtype=np.int64)
    seen = np.zeros(256, dtype=np.bool_)
    for i in range(ticks.size):
        ch = channel[i]
        if seen[ch] and ticks[i] - last[ch] < dead_ticks:
            keep[i] = False
        else:
            last[ch] = ticks[i]
            seen[ch] = True
    return keep


def detect(
    emissions: ArrayLike,
    d: DetectorModel,
    splitter: SplitterMode = SplitterMode.HBT,
    seed: int | np.random.SeedSequence | np.random.Generator = 0,
    *,
    duration: float | None = None,
    resolution: float = 1e-12,
) -> TagStream:
    """
    Aplicar el modelo de detector a una lista ordenada de emisiones.

    Orden: eficiencia, divisor 50:50 (HBT), jitter gaussiano, cuentas oscuras
    Poisson por canal, recorte a [0, duration), cuantización, orden por
    (instante, canal) y filtro de tiempo muerto por canal.
    """
    times = np.asarray(emissions, dtype=float)
    if times.size and np.any(np.diff(times) < 0):
        raise PhysicsDomainError("Las emisiones deben estar ordenadas")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if duration is None:
        duration = float(times[-1]) + resolution if times.size else resolution
    n_channels = 2 if splitter == SplitterMode.HBT else 1

    kept = times[rng.random(times.size) < d.efficiency]
    if n_channels == 2:
        channel = rng.integers(0, 2, kept.size).astype(np.uint8)
    else:
        channel = np.zeros(kept.size, dtype=np.uint8)
    # siempre se sortea el jitter para que distintas anchuras compartan la secuencia
    kept = kept + rng.standard_normal(kept.size) * (d.jitter_fwhm * FWHM_TO_SIGMA)

    parts_t = [kept]
    parts_c = [channel]
    for ch in range(n_channels):
        n_dark = rng.poisson(d.dark_count_rate * duration)
        parts_t.append(np.sort(rng.uniform(0.0, duration, n_dark)))
        parts_c.append(np.full(n_dark, ch, dtype=np.uint8))
    t_all = np.concatenate(parts_t)
    c_all = np.concatenate(parts_c)

    inside = (t_all >= 0.0) & (t_all < duration)
    ticks = np.rint(t_all[inside] / resolution).astype(np.int64)
    c_all = c_all[inside]
    order = np.lexsort((c_all, ticks))
    ticks, c_all = ticks[order], c_all[order]

    if d.dead_time > 0 and ticks.size:
        dead_ticks = math.ceil(d.dead_time / resolution - 1e-9)
        keep = _dead_time_mask(c_all, ticks, dead_ticks)
        ticks, c_all = ticks[keep], c_all[keep]

    logger.info("Detección: %d etiquetas en %d canales", ticks.size, n_channels)
    return TagStream(
        resolution=resolution, channels=n_channels, channel=c_all, timestamp=ticks
    )


def sync_channel(c: SimConfig, pulse: PulseTrain) -> TagStream:
    """Una etiqueta por pulso láser, en el canal reservado de sincronismo"""
    if c.drive_mode != DriveMode.PULSED:
        raise ConfigError("El canal de sincronismo sólo existe en modo pulsado")
    n = pulse_count(c.duration, pulse.rep_rate)
    ticks = np.rint(np.arange(n) * (pulse.period / c.resolution)).astype(np.int64)
    return TagStream(
        resolution=c.resolution,
        channels=0,
        channel=np.full(n, SYNC_CHANNEL, dtype=np.uint8),
        timestamp=ticks,
    )


def merge_streams(*streams: TagStream) -> TagStream:
    """Fusión estable por (instante, canal); independiente del orden de llegada"""
    if not streams:
        raise PhysicsDomainError("No hay flujos que fusionar")
    resolution = streams[0].resolution
    if any(s.resolution != resolution for s in streams):
        raise PhysicsDomainError("Los flujos deben compartir resolución")
    ticks = np.concatenate([s.timestamp for s in streams])
    channel = np.concatenate([s.channel for s in streams])
    order = np.lexsort((channel, ticks))
    return TagStream(
        resolution=resolution,
        channels=max(s.channels for s in streams),
        channel=channel[order],
        timestamp=ticks[order],
    )


def simulate(e: EmitterParams, d: DetectorModel, c: SimConfig) -> TagStream:
    """Trayectoria + detector (+ sincronismo en pulsado)"""
    emissions = simulate_trajectory(e, c)
    stream = detect(
        emissions,
        d,
        c.splitter,
        _detector_rng(c),
        duration=c.duration,
        resolution=c.resolution,
    )
    if c.drive_mode == DriveMode.PULSED:
        stream = merge_streams(stream, sync_channel(c, resolve_pulse(e, c)))
    return stream
