"""
Tests de la g² analítica de tres niveles y de la calibración del parpadeo
"""

import numpy as np
import pytest

from app.core.errors import PhysicsDomainError
from app.core.units import NS, US
from app.schemas.emitter import DetectorModel, EmitterParams, SimConfig
from app.services import blinking, correlator, emitter_sim

T1 = 2.97 * NS


def test_two_level_limit() -> None:
    """Sin estado oscuro: antiagrupamiento puro con τ1 = 1/(pump + 1/T1)"""
    model = blinking.three_level_g2(T1, 1.0 / T1, 0.0, 0.0)
    assert model.a == 0.0
    assert model.tau1 == pytest.approx(T1 / 2.0)
    assert model.evaluate(np.array([0.0]))[0] == pytest.approx(0.0)


def test_rate_matrix_conserves_population() -> None:
    """Las columnas de la matriz de tasas suman cero"""
    matrix = blinking.rate_matrix(T1, 1e8, 1e6, 2e6)
    np.testing.assert_allclose(matrix.sum(axis=0), 0.0, atol=1e-6)


def test_invalid_rates() -> None:
    """Apagado sin retorno o bombeo nulo no tienen estado estacionario"""
    with pytest.raises(PhysicsDomainError):
        blinking.three_level_g2(T1, 1e8, 1e6, 0.0)
    with pytest.raises(PhysicsDomainError):
        blinking.three_level_g2(T1, 0.0, 1e6, 1e6)


def test_three_level_g2_shape() -> None:
    """g²(0) = 0, agrupamiento a τ intermedios y g² → 1 a τ largos"""
    model = blinking.three_level_g2(T1, 1.0 / T1, 2e6, 1e6)
    assert model.a > 0
    assert model.tau2 > 10 * model.tau1
    values = model.evaluate(np.array([0.0, 20 * model.tau1, 50 * model.tau2]))
    assert values[0] == pytest.approx(0.0, abs=1e-9)
    assert values[1] > 1.0
    assert values[2] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize(("power_psat", "tau2", "a"), blinking.REFERENCE_TARGETS)
def test_calibration_reproduces_targets(power_psat: float, tau2: float, a: float) -> None:
    """Las tasas calibradas reproducen (τ2, a) con precisión relativa 1e-6"""
    point = blinking.calibrate_blinking(T1, power_psat, tau2, a)
    model = blinking.three_level_g2(T1, power_psat / T1, point.shelve_rate, point.deshelve_rate)
    assert model.tau2 == pytest.approx(tau2, rel=1e-6)
    assert model.a == pytest.approx(a, rel=1e-6)


def test_calibration_table_trends() -> None:
    """Al subir la potencia τ2 baja y la amplitud de agrupamiento sube"""
    table = blinking.calibration_table(T1)
    assert [p.tau2 for p in table] == sorted((p.tau2 for p in table), reverse=True)
    assert [p.a for p in table] == sorted(p.a for p in table)
    low = blinking.three_level_g2(T1, table[0].power_psat / T1, table[0].shelve_rate, table[0].deshelve_rate)
    assert low.tau1 == pytest.approx(2.78 * NS, rel=0.02)


def test_calibration_rejects_non_positive_targets() -> None:
    """Objetivos no positivos"""
    with pytest.raises(PhysicsDomainError):
        blinking.calibrate_blinking(T1, 1.0, 0.0, 1.0)


@pytest.mark.slow
def test_simulated_g2_follows_power_trends() -> None:
    """g² simulada a tres potencias: τ2 decrece, a crece, τ1 ≈ 2.78 ns a baja potencia"""
    fits = []
    for point in blinking.calibration_table(T1):
        emitter = EmitterParams(
            T1=T1,
            pump_rate=point.power_psat / T1,
            shelve_rate=point.shelve_rate,
            deshelve_rate=point.deshelve_rate,
        )
        duration = 20.0 if point.power_psat < 1.0 else 2.0
        config = SimConfig(duration=duration, seed=11, collection_efficiency=1e-2)
        stream = emitter_sim.simulate(emitter, DetectorModel(), config)
        window = 6.0 * point.tau2
        h = correlator.correlate(stream, 0, 1, 1 * NS, window)
        rates = (stream.ticks_of(0).size / duration, stream.ticks_of(1).size / duration)
        curve = correlator.normalize_cw(h, rates, duration).log_rebin(40 * NS)
        fits.append(correlator.fit_g2(curve, n_starts=4, seed=0))
    tau2 = [f.value("tau2") for f in fits]
    a = [f.value("a") for f in fits]
    assert tau2[0] > tau2[1] > tau2[2]
    assert a[0] < a[1] < a[2]
    assert fits[0].value("tau1") == pytest.approx(2.78 * NS, rel=0.1)
    assert tau2[0] == pytest.approx(2.28 * US, rel=0.2)
