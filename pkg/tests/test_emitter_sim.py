"""
Tests del simulador Monte Carlo del emisor y de la cadena de detección
"""

import math

import numpy as np
import pytest

from app.core.errors import ConfigError, PhysicsDomainError
from app.core.units import NS
from app.schemas.emitter import (
    DetectorModel,
    DriveMode,
    EmitterParams,
    PulseTrain,
    SimConfig,
    SplitterMode,
)
from app.schemas.tags import SYNC_CHANNEL
from app.services import emitter_sim

T1 = 2.54 * NS


@pytest.fixture
def cw_emitter() -> EmitterParams:
    """Emisor CW a P = P_sat sin parpadeo"""
    return EmitterParams(T1=T1, pump_rate=1.0 / T1)


@pytest.fixture
def pulsed_emitter() -> EmitterParams:
    """Emisor con pulsos cortos saturantes a 40 MHz"""
    return EmitterParams(T1=T1, pulse=PulseTrain(rep_rate=40e6, excitation_probability=1.0))


def test_simulation_is_deterministic(cw_emitter: EmitterParams) -> None:
    """Misma semilla, mismo flujo; otra semilla, otro flujo"""
    detector = DetectorModel(efficiency=0.5, jitter_fwhm=40e-12, dark_count_rate=100.0)
    config = SimConfig(duration=1e-3, seed=7, collection_efficiency=0.05)
    first = emitter_sim.simulate(cw_emitter, detector, config)
    second = emitter_sim.simulate(cw_emitter, detector, config)
    np.testing.assert_array_equal(first.timestamp, second.timestamp)
    np.testing.assert_array_equal(first.channel, second.channel)
    other = emitter_sim.simulate(cw_emitter, detector, config.model_copy(update={"seed": 8}))
    assert not np.array_equal(first.timestamp[:100], other.timestamp[:100])


def test_cw_emission_rate_follows_saturation(cw_emitter: EmitterParams) -> None:
    """Tasa recogida = η·(s/T1)/(1 + s) con s = pump·T1, dentro de 3σ de Poisson con ~10⁶ eventos"""
    config = SimConfig(duration=0.02, seed=1, collection_efficiency=0.3)
    emissions = emitter_sim.simulate_trajectory(cw_emitter, config)
    expected = 0.3 * (1.0 / T1) * 0.5 * config.duration
    assert expected > 1e6
    assert abs(emissions.size - expected) <= 3.0 * math.sqrt(expected)
    assert np.all(np.diff(emissions) >= 0)
    assert emissions[-1] < config.duration


def test_power_sets_pump_rate() -> None:
    """La potencia en unidades de P_sat fija pump·T1"""
    assert emitter_sim.power_to_pump_rate(2e-3, 1e-3, T1) * T1 == pytest.approx(2.0)
    emitter = EmitterParams(T1=T1, P_sat=1e-3)
    config = SimConfig(duration=1e-3, power=0.5e-3)
    assert emitter_sim.resolve_pump_rate(emitter, config) * T1 == pytest.approx(0.5)
    with pytest.raises(PhysicsDomainError):
        emitter_sim.power_to_pump_rate(1e-3, 0.0, T1)


def test_pulse_excitation_probability() -> None:
    """p = 1 − exp(−P/P_ref)"""
    assert emitter_sim.pulse_excitation_probability(1e-3, 1e-3) == pytest.approx(1 - math.exp(-1))
    assert emitter_sim.pulse_excitation_probability(0.0, 1e-3) == 0.0


def test_zero_pump_gives_no_emissions() -> None:
    """Sin bombeo no hay emisiones"""
    emitter = EmitterParams(T1=T1)
    assert emitter_sim.simulate_trajectory(emitter, SimConfig(duration=1e-3)).size == 0


def test_zero_efficiency_gives_empty_stream(cw_emitter: EmitterParams) -> None:
    """Eficiencia nula y sin cuentas oscuras: flujo vacío"""
    stream = emitter_sim.simulate(
        cw_emitter, DetectorModel(efficiency=0.0), SimConfig(duration=1e-4)
    )
    assert len(stream) == 0
    assert stream.channels == 2


def test_dark_counts_are_poisson_per_channel() -> None:
    """Sólo cuentas oscuras: ~tasa·duración en cada canal"""
    stream = emitter_sim.detect(
        [], DetectorModel(dark_count_rate=1e4), SplitterMode.HBT, seed=3, duration=1.0
    )
    for ch in (0, 1):
        assert stream.ticks_of(ch).size == pytest.approx(1e4, rel=0.05)


def test_single_splitter_uses_one_channel(cw_emitter: EmitterParams) -> None:
    """Sin divisor todo llega al canal 0"""
    config = SimConfig(duration=1e-4, splitter=SplitterMode.SINGLE, collection_efficiency=0.1)
    stream = emitter_sim.simulate(cw_emitter, DetectorModel(), config)
    assert stream.channels == 1
    assert stream.present_channels() == {0}


def test_dead_time_enforced_per_channel(cw_emitter: EmitterParams) -> None:
    """Dos etiquetas del mismo canal nunca están más cerca que el tiempo muerto"""
    detector = DetectorModel(dead_time=50 * NS)
    config = SimConfig(duration=1e-3, collection_efficiency=0.5)
    stream = emitter_sim.simulate(cw_emitter, detector, config)
    dead_ticks = round(50 * NS / config.resolution)
    for ch in (0, 1):
        ticks = stream.ticks_of(ch)
        assert ticks.size > 100
        assert np.min(np.diff(ticks)) >= dead_ticks


def test_detect_requires_sorted_emissions() -> None:
    """Las emisiones desordenadas son un error"""
    with pytest.raises(PhysicsDomainError):
        emitter_sim.detect([2e-9, 1e-9], DetectorModel())


def test_jitter_does_not_change_the_draws() -> None:
    """Con la misma semilla el jitter sólo desplaza las etiquetas"""
    emissions = np.arange(1, 1001) * 1e-6
    sharp = emitter_sim.detect(emissions, DetectorModel(), seed=5, duration=2e-3)
    blurred = emitter_sim.detect(
        emissions, DetectorModel(jitter_fwhm=200e-12), seed=5, duration=2e-3
    )
    np.testing.assert_array_equal(sharp.channel, blurred.channel)
    assert np.max(np.abs(sharp.timestamp - blurred.timestamp)) < 1000


def test_sync_channel_only_in_pulsed_mode(pulsed_emitter: EmitterParams) -> None:
    """El canal de sincronismo exige modo pulsado"""
    assert pulsed_emitter.pulse is not None
    with pytest.raises(ConfigError):
        emitter_sim.sync_channel(SimConfig(duration=1e-6), pulsed_emitter.pulse)


def test_pulsed_one_photon_per_short_pulse(pulsed_emitter: EmitterParams) -> None:
    """Pulsos instantáneos con p = 1: como mucho una emisión por pulso"""
    config = SimConfig(duration=1e-3, drive_mode=DriveMode.PULSED)
    stream = emitter_sim.simulate(pulsed_emitter, DetectorModel(), config)
    sync = stream.ticks_of(SYNC_CHANNEL)
    assert sync.size == emitter_sim.pulse_count(1e-3, 40e6) == 40_000
    detected = stream.ticks_of(0).size + stream.ticks_of(1).size
    assert 0.99 * sync.size <= detected <= sync.size
    emissions = emitter_sim.simulate_trajectory(pulsed_emitter, config)
    pulse_index = np.floor(emissions * 40e6 + 1e-9)
    assert np.unique(pulse_index).size == emissions.size


def test_pulsed_requires_pulse_train() -> None:
    """Modo pulsado sin tren de pulsos"""
    emitter = EmitterParams(T1=T1)
    with pytest.raises(ConfigError):
        emitter_sim.simulate(emitter, DetectorModel(), SimConfig(duration=1e-6, drive_mode="pulsed"))


def test_merge_streams_order_independent(cw_emitter: EmitterParams) -> None:
    """La fusión no depende del orden de los flujos"""
    config = SimConfig(duration=1e-4, drive_mode=DriveMode.PULSED)
    pulse = PulseTrain(rep_rate=80e6)
    a = emitter_sim.simulate(cw_emitter, DetectorModel(), SimConfig(duration=1e-4, collection_efficiency=0.1))
    b = emitter_sim.sync_channel(config, pulse)
    ab = emitter_sim.merge_streams(a, b)
    ba = emitter_sim.merge_streams(b, a)
    np.testing.assert_array_equal(ab.timestamp, ba.timestamp)
    np.testing.assert_array_equal(ab.channel, ba.channel)
    assert len(ab) == len(a) + len(b)


def test_blinking_dark_dwell_times() -> None:
    """Los periodos oscuros duran en media 1/deshelve_rate y los brillantes lo que marca el apagado"""
    emitter = EmitterParams(T1=T1, pump_rate=1.0 / T1, shelve_rate=1e6, deshelve_rate=1e6)
    config = SimConfig(duration=0.05, seed=2, collection_efficiency=1e-3)
    record = emitter_sim.simulate_blinking_record(emitter, config)
    dark = record.dark_dwell_times()
    assert dark.size > 1000
    assert dark.mean() == pytest.approx(1e-6, rel=0.05)
    assert np.all(record.bright_dwell_times() >= 0)
    # ciclos hasta el apagado: geométrica de p = k_s/(k_r + k_s), cada uno 1/pump + 1/(k_r + k_s)
    k_e = 1.0 / T1 + 1e6
    bright_expected = (T1 + 1.0 / k_e) * k_e / 1e6
    assert bright_expected == pytest.approx(2.0025e-6, rel=1e-3)
    assert record.bright_dwell_times().mean() == pytest.approx(bright_expected, rel=0.03)
    # ninguna emisión ocurre dentro de un periodo oscuro
    inside = np.searchsorted(record.dark_start, record.emissions, side="right") - 1
    valid = inside >= 0
    assert np.all(record.emissions[valid] >= record.dark_end[inside[valid]])
