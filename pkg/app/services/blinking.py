"""
g² analítica del modelo de tres niveles y calibración de las tasas de parpadeo
"""

import math

import numpy as np
from scipy.optimize import least_squares

from app.core.errors import PhysicsDomainError
from app.core.logging import get_logger
from app.core.units import US
from app.schemas.emitter import CalibrationPoint
from app.schemas.histogram import G2Model

logger = get_logger(__name__)

# (potencia/P_sat, τ2 objetivo, a objetivo) para bombeo bajo, medio y alto
REFERENCE_TARGETS: tuple[tuple[float, float, float], ...] = (
    (0.07, 2.28 * US, 0.3),
    (1.85, 0.30 * US, 2.0),
    (4.76, 0.08 * US, 4.0),
)


def rate_matrix(T1: float, pump_rate: float, shelve: float, deshelve: float) -> np.ndarray:
    """Matriz de tasas sobre las poblaciones (G, E, D)"""
    k_r = 1.0 / T1
    return np.array(
        [
            [-pump_rate, k_r, deshelve],
            [pump_rate, -(k_r + shelve), 0.0],
            [0.0, shelve, -deshelve],
        ]
    )


def three_level_g2(
    T1: float, pump_rate: float, shelve: float, deshelve: float
) -> G2Model:
    """
    g²(τ) exacta del sistema G/E/D partiendo de G tras una emisión.

    g²(τ) = E(τ)/E_ss; los dos autovalores no nulos dan τ1 (rápido) y τ2
    (lento), y el coeficiente del lento es la amplitud de agrupamiento a.
    """
    if T1 <= 0 or pump_rate <= 0:
        raise PhysicsDomainError("T1 y el bombeo deben ser positivos")
    if shelve < 0 or deshelve < 0:
        raise PhysicsDomainError("Las tasas de parpadeo no pueden ser negativas")
    if shelve > 0 and deshelve == 0:
        raise PhysicsDomainError("Sin retorno desde el estado oscuro no hay estado estacionario")
    if shelve == 0:
        tau1 = 1.0 / (pump_rate + 1.0 / T1)
        return G2Model(tau1=tau1, tau2=tau1, a=0.0)

    matrix = rate_matrix(T1, pump_rate, shelve, deshelve)
    values, vectors = np.linalg.eig(matrix)
    weights = np.linalg.solve(vectors, np.array([1.0, 0.0, 0.0]))
    coeff = vectors[1, :] * weights
    order = np.argsort(np.abs(values.real))
    steady = coeff[order[0]].real
    slow, fast = order[1], order[2]
    a = float(coeff[slow].real / steady)
    return G2Model(
        tau1=float(-1.0 / values[fast].real),
        tau2=float(-1.0 / values[slow].real),
        a=max(a, 0.0),
    )


def calibrate_blinking(
    T1: float, power_psat: float, tau2: float, a: float
) -> CalibrationPoint:
    """
    Tasas (shelve, deshelve) cuyo g² exacto tiene el τ2 y la amplitud pedidos.

    Punto de partida: aproximación de escalas separadas
    deshelve = 1/(τ2·(1+a)), shelve = a·deshelve·(1+s)/s con s = P/P_sat.
    """
    if tau2 <= 0 or a <= 0 or power_psat <= 0:
        raise PhysicsDomainError("τ2, a y la potencia deben ser positivos")
    pump = power_psat / T1
    k_d0 = 1.0 / (tau2 * (1.0 + a))
    k_s0 = a * k_d0 * (1.0 + power_psat) / power_psat

    def residuals(log_rates: np.ndarray) -> np.ndarray:
        k_s, k_d = np.exp(log_rates)
        model = three_level_g2(T1, pump, k_s, k_d)
        return np.array([math.log(model.tau2 / tau2), math.log(max(model.a, 1e-12) / a)])

    solution = least_squares(
        residuals, np.log([k_s0, k_d0]), xtol=1e-14, ftol=1e-14, gtol=1e-14
    )
    k_s, k_d = (float(v) for v in np.exp(solution.x))
    logger.info(
        "Calibración s=%.3g: shelve=%.4g Hz, deshelve=%.4g Hz (coste %.2e)",
        power_psat,
        k_s,
        k_d,
        solution.cost,
    )
    return CalibrationPoint(
        power_psat=power_psat, tau2=tau2, a=a, shelve_rate=k_s, deshelve_rate=k_d
    )


def calibration_table(
    T1: float,
    targets: tuple[tuple[float, float, float], ...] = REFERENCE_TARGETS,
) -> list[CalibrationPoint]:
    """Calibrar cada punto (potencia, τ2, a) de referencia"""
    return [calibrate_blinking(T1, s, tau2, a) for s, tau2, a in targets]
