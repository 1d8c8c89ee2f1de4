"""
Tests del motor de ajuste: Levenberg-Marquardt, registro de modelos,
jacobianos, invariancia de escala y cobertura de los errores
"""

import numpy as np
import pytest

from app.core.errors import DuplicateModelError, InsufficientDataError, ModelNotFoundError
from app.schemas.fit import FitProblem
from app.services.fit_engine import finite_difference_jacobian, lm_minimize, multi_start
from app.services.models import ModelRegistry, ModelSpec, get_registry, register_models

P_SAT = 0.54e-3
I_INF = 18.0e3


def _saturation_data(seed: int, noise: float = 0.05) -> FitProblem:
    power = np.geomspace(0.05e-3, 5e-3, 15)
    clean = I_INF * power / (power + P_SAT)
    sigma = noise * clean if noise > 0 else np.ones_like(clean)
    rng = np.random.default_rng(seed)
    return FitProblem(
        model="saturation",
        x=power,
        y=clean * (1.0 + noise * rng.standard_normal(power.size)),
        sigma=sigma,
    )


def test_registry_contents() -> None:
    """El registro compartido trae al menos los cinco modelos incorporados"""
    registry = get_registry()
    assert len(registry) >= 5
    for model_id in ("linear", "saturation", "multi_lorentzian", "exp_irf", "g2_three_level"):
        assert model_id in registry


def test_registry_duplicate_and_missing() -> None:
    """Registrar dos veces es un error; un modelo desconocido también"""
    registry = register_models()
    with pytest.raises(DuplicateModelError):
        registry.register(registry.get("linear"))
    with pytest.raises(ModelNotFoundError):
        registry.get("no_existe")
    with pytest.raises(KeyError):
        registry.get("no_existe")


def test_unknown_model_in_problem() -> None:
    """Ajustar un modelo no registrado falla antes de iterar"""
    problem = FitProblem(model="no_existe", x=[0.0, 1.0], y=[0.0, 1.0])
    with pytest.raises(ModelNotFoundError):
        lm_minimize(problem)


def test_linear_exact() -> None:
    """Una recta sin ruido se recupera exactamente"""
    x = np.linspace(-3.0, 5.0, 20)
    result = lm_minimize(FitProblem(model="linear", x=x, y=2.5 * x - 1.25))
    assert result.converged
    assert result.value("slope") == pytest.approx(2.5, abs=1e-9)
    assert result.value("intercept") == pytest.approx(-1.25, abs=1e-9)
    assert result.params["slope"].unit == ""


def test_saturation_noiseless_exact() -> None:
    """Datos de saturación sin ruido: parámetros exactos desde el inicializador"""
    problem = _saturation_data(0, noise=0.0)
    result = lm_minimize(problem)
    assert result.converged
    assert result.value("I_inf") == pytest.approx(I_INF, rel=1e-8)
    assert result.value("P_sat") == pytest.approx(P_SAT, rel=1e-8)
    assert result.params["P_sat"].unit == "W"


def test_rosenbrock_converges() -> None:
    """Rosenbrock como residuos: converge a (1, 1) desde (−1.2, 1)"""
    registry = ModelRegistry()
    registry.register(
        ModelSpec(
            id="rosenbrock",
            param_names=("u", "v"),
            units=("", ""),
            evaluate=lambda x, p: np.array([10.0 * (p[1] - p[0] ** 2), 1.0 - p[0]]),
        )
    )
    problem = FitProblem(
        model="rosenbrock",
        x=np.zeros(2),
        y=np.zeros(2),
        initial={"u": -1.2, "v": 1.0},
    )
    result = lm_minimize(problem, registry)
    assert result.converged
    assert result.iterations <= 200
    assert result.value("u") == pytest.approx(1.0, abs=1e-6)
    assert result.value("v") == pytest.approx(1.0, abs=1e-6)


def test_objective_history_non_increasing() -> None:
    """El χ² aceptado nunca aumenta"""
    result = lm_minimize(_saturation_data(3))
    history = np.array(result.objective_history)
    assert history.size >= 2
    assert np.all(np.diff(history) <= 0)
    assert result.chi2 == history[-1]


def test_sigma_scale_invariance() -> None:
    """Escalar sigma por 8 no cambia los parámetros y escala los errores por 8"""
    problem = _saturation_data(7)
    scaled = problem.model_copy(update={"sigma": problem.sigma * 8.0})
    base = lm_minimize(problem)
    other = lm_minimize(scaled)
    assert other.values() == base.values()
    assert other.iterations == base.iterations
    for name in ("I_inf", "P_sat"):
        assert other.stderr(name) == pytest.approx(8.0 * base.stderr(name), rel=1e-10)


def test_data_scale_equivariance() -> None:
    """Escalar y y sigma escala la amplitud y deja P_sat igual"""
    problem = _saturation_data(11)
    base = lm_minimize(problem)
    scaled = lm_minimize(problem.scaled(8.0))
    assert scaled.value("I_inf") == pytest.approx(8.0 * base.value("I_inf"), rel=1e-5)
    assert scaled.value("P_sat") == pytest.approx(base.value("P_sat"), rel=1e-5)
    assert scaled.chi2 == pytest.approx(base.chi2, rel=1e-5)


def test_fixed_parameter() -> None:
    """Un parámetro fijo conserva su valor y no tiene error"""
    problem = _saturation_data(5).model_copy(update={"fixed": {"P_sat": P_SAT}})
    result = lm_minimize(problem)
    assert result.value("P_sat") == P_SAT
    assert result.params["P_sat"].fixed
    assert result.stderr("P_sat") == 0.0
    assert result.dof == 14


def test_iteration_cap_is_not_an_exception() -> None:
    """Al agotar las iteraciones se devuelve un resultado no convergido"""
    problem = _saturation_data(2).model_copy(
        update={"initial": {"I_inf": 1.0, "P_sat": 1.0}, "max_iterations": 1}
    )
    result = lm_minimize(problem)
    assert not result.converged
    assert "max_iterations" in result.flags


def test_singular_normal_equations_flagged() -> None:
    """Con todas las abscisas iguales pendiente y ordenada son degeneradas"""
    problem = FitProblem(
        model="linear",
        x=np.full(10, 2.0),
        y=np.full(10, 3.0),
        initial={"slope": 1.0, "intercept": 0.0},
    )
    result = lm_minimize(problem)
    assert "singular_normal_equations" in result.flags
    assert result.has_flag("degenerate:")
    assert result.value("slope") * 2.0 + result.value("intercept") == pytest.approx(3.0)


def test_too_few_points() -> None:
    """Menos datos que parámetros libres"""
    with pytest.raises(InsufficientDataError):
        lm_minimize(FitProblem(model="linear", x=[1.0], y=[2.0], initial={"slope": 1.0, "intercept": 0.0}))


def test_invalid_sigma_rejected() -> None:
    """Las incertidumbres deben ser positivas"""
    with pytest.raises(ValueError):
        FitProblem(model="linear", x=[0.0, 1.0], y=[0.0, 1.0], sigma=[1.0, 0.0])


def test_multi_start_deterministic() -> None:
    """El arranque múltiple no depende del orden de ejecución"""
    problem = _saturation_data(9)
    first = multi_start(problem, n=6, seed=3)
    second = multi_start(problem, n=6, seed=3)
    assert first.values() == second.values()
    single = lm_minimize(problem)
    assert first.chi2 <= single.chi2 * (1 + 1e-9)


JACOBIAN_CASES = [
    ("linear", np.linspace(-5.0, 5.0, 50), [(-3.0, 3.0), (-2.0, 2.0)]),
    ("saturation", np.geomspace(1e-5, 5e-3, 50), [(1e3, 1e5), (1e-4, 1e-3)]),
    (
        "multi_lorentzian",
        np.linspace(1.6, 1.9, 200),
        [(1.70, 1.80), (2e-3, 3e-2), (0.1, 1.0)] * 2,
    ),
    (
        "g2_three_level",
        np.linspace(-1e-6, 1e-6, 201),
        [(1e-9, 5e-9), (1e-7, 1e-6), (0.5, 3.0), (0.8, 1.2)],
    ),
    ("envelope_exp", np.linspace(0.0, 1e-12, 60), [(0.2, 0.9), (1e-13, 5e-13)]),
    ("envelope_gauss", np.linspace(0.0, 1e-12, 60), [(0.2, 0.9), (1e-13, 5e-13)]),
]


@pytest.mark.parametrize(("model_id", "x", "ranges"), JACOBIAN_CASES)
def test_analytic_jacobians_match_finite_differences(
    model_id: str, x: np.ndarray, ranges: list[tuple[float, float]]
) -> None:
    """Jacobianos analíticos frente a diferencias centrales en 100 puntos"""
    spec = get_registry().get(model_id)
    assert spec.jacobian is not None
    rng = np.random.default_rng(42)
    for _ in range(100):
        params = np.array([rng.uniform(lo, hi) for lo, hi in ranges])
        analytic = spec.jacobian(x, params)
        numeric = finite_difference_jacobian(spec, x, params)
        scale = np.max(np.abs(analytic))
        np.testing.assert_allclose(numeric, analytic, rtol=1e-5, atol=1e-5 * scale)


@pytest.mark.slow
def test_stderr_coverage() -> None:
    """El intervalo ±1σ de P_sat contiene el valor verdadero ~68 % de las veces"""
    hits = 0
    trials = 1000
    for seed in range(trials):
        result = lm_minimize(_saturation_data(seed))
        hits += abs(result.value("P_sat") - P_SAT) <= result.stderr("P_sat")
    assert 0.63 <= hits / trials <= 0.73


def test_small_positive_start_is_kept() -> None:
    """Un valor inicial de 90 fs con límite inferior 0 no se desplaza al suelo de la transformación"""
    delays = np.linspace(0.0, 200e-15, 30)
    visibility = 0.9 * np.exp(-((delays / 90e-15) ** 2))
    result = lm_minimize(
        FitProblem(
            model="envelope_gauss",
            x=delays,
            y=visibility,
            initial={"V0": 0.85, "T2_star": 80e-15},
            max_iterations=1,
        )
    )
    assert 60e-15 < result.value("T2_star") < 120e-15
