"""
Motor de mínimos cuadrados no lineales (Levenberg-Marquardt).

Los límites se imponen con transformaciones de parámetro: logística para
intervalos cerrados y softplus para límites de un solo lado. El núcleo LM
trabaja en el espacio transformado sin restricciones; la covarianza se
calcula en el espacio físico.
"""

import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.special import expit, logit

from app.core.config import get_settings, thread_count
from app.core.errors import InsufficientDataError
from app.core.logging import get_logger
from app.schemas.fit import FitParameter, FitProblem, FitResult
from app.services.models import ModelRegistry, ModelSpec, get_registry

logger = get_logger(__name__)

LAMBDA_START = 1e-3
LAMBDA_UP = 10.0
LAMBDA_DOWN = 10.0
LAMBDA_MAX = 1e15
FD_RELATIVE_STEP = 1e-6
CHI2_FLOOR = 1e-28
SINGULAR_RATIO = 1e-10
_EDGE = 1e-12


@dataclass(frozen=True)
class _Transform:
    """Aplicación u ↦ p para un parámetro con límites"""

    lo: float | None
    hi: float | None

    def to_internal(self, p: float) -> float:
        lo, hi = self.lo, self.hi
        if lo is not None and hi is not None:
            if hi == lo:
                return 0.0
            frac = min(max((p - lo) / (hi - lo), _EDGE), 1.0 - _EDGE)
            return float(logit(frac))
        if lo is not None:
            gap = p - lo
            return _softplus_inv(gap if gap > 0 else _EDGE * max(1.0, abs(lo)))
        if hi is not None:
            gap = hi - p
            return _softplus_inv(gap if gap > 0 else _EDGE * max(1.0, abs(hi)))
        return p

    def to_external(self, u: np.ndarray) -> np.ndarray:
        lo, hi = self.lo, self.hi
        if lo is not None and hi is not None:
            return lo + (hi - lo) * expit(u)
        if lo is not None:
            return lo + np.logaddexp(0.0, u)
        if hi is not None:
            return hi - np.logaddexp(0.0, u)
        return u

    def derivative(self, u: np.ndarray) -> np.ndarray:
        """dp/du"""
        lo, hi = self.lo, self.hi
        if lo is not None and hi is not None:
            s = expit(u)
            return (hi - lo) * s * (1.0 - s)
        if lo is not None:
            return expit(u)
        if hi is not None:
            return -expit(u)
        return np.ones_like(u)


def _softplus_inv(y: float) -> float:
    # log(e^y − 1), estable para y grande y pequeño
    return float(y + math.log(-math.expm1(-y)))


class _Objective:
    """Residuos ponderados y jacobianos de un problema concreto"""

    def __init__(self, problem: FitProblem, spec: ModelSpec, initial: dict[str, float]):
        self.problem = problem
        self.spec = spec
        self.names = spec.names_for(initial)
        self.fixed = {n: float(problem.fixed[n]) for n in self.names if n in problem.fixed}
        self.free = [n for n in self.names if n not in self.fixed]
        self.transforms = [
            _Transform(*problem.bounds.get(n, spec.bound_of(n))) for n in self.free
        ]
        self.initial = initial

    def full_vector(self, free_values: np.ndarray) -> np.ndarray:
        values = dict(self.fixed)
        values.update(zip(self.free, free_values, strict=True))
        return np.array([values[n] for n in self.names], dtype=float)

    def external(self, u: np.ndarray) -> np.ndarray:
        return np.array(
            [t.to_external(np.asarray(ui)) for t, ui in zip(self.transforms, u, strict=True)],
            dtype=float,
        )

    def internal_start(self) -> np.ndarray:
        return np.array(
            [t.to_internal(float(self.initial[n])) for t, n in zip(self.transforms, self.free, strict=True)],
            dtype=float,
        )

    def residuals(self, p_free: np.ndarray) -> np.ndarray:
        model = self.spec.evaluate(self.problem.x, self.full_vector(p_free))
        return (self.problem.y - model) / self.problem.sigma

    def model_jacobian(self, p_free: np.ndarray) -> np.ndarray:
        """∂modelo/∂p para los parámetros libres"""
        full = self.full_vector(p_free)
        index = [self.names.index(n) for n in self.free]
        if self.spec.jacobian is not None:
            return np.asarray(self.spec.jacobian(self.problem.x, full))[:, index]
        return finite_difference_jacobian(self.spec, self.problem.x, full)[:, index]


def finite_difference_jacobian(
    spec: ModelSpec, x: np.ndarray, params: np.ndarray
) -> np.ndarray:
    """Jacobiano por diferencias centrales con paso relativo 1e-6"""
    params = np.asarray(params, dtype=float)
    cols = []
    for k in range(params.size):
        h = FD_RELATIVE_STEP * (abs(params[k]) if params[k] != 0 else 1.0)
        up = params.copy()
        down = params.copy()
        up[k] += h
        down[k] -= h
        cols.append((spec.evaluate(x, up) - spec.evaluate(x, down)) / (2.0 * h))
    return np.column_stack(cols)


def _covariance(
    jac_w: np.ndarray, names: list[str]
) -> tuple[np.ndarray, list[str]]:
    """Inversa de JᵀJ con detección de ecuaciones normales singulares"""
    flags: list[str] = []
    k = jac_w.shape[1]
    if k == 0:
        return np.zeros((0, 0)), flags
    norms = np.linalg.norm(jac_w, axis=0)
    dead = norms == 0
    scale = np.where(dead, 1.0, norms)
    scaled = jac_w / scale
    _, s, vt = np.linalg.svd(scaled, full_matrices=False)
    singular = bool(np.any(dead)) or s[-1] <= SINGULAR_RATIO * s[0]
    if singular:
        flags.append("singular_normal_equations")
        degenerate = set(np.nonzero(dead)[0].tolist())
        if s[-1] <= SINGULAR_RATIO * s[0]:
            degenerate.add(int(np.argmax(np.abs(vt[-1]))))
        flags.extend(f"degenerate:{names[i]}" for i in sorted(degenerate))
        inner = np.linalg.pinv(scaled.T @ scaled)
        cov = inner / np.outer(scale, scale)
        for i in degenerate:
            cov[i, :] = np.inf
            cov[:, i] = np.inf
        return cov, flags
    inner = np.linalg.inv(scaled.T @ scaled)
    return inner / np.outer(scale, scale), flags


def lm_minimize(
    problem: FitProblem, registry: ModelRegistry | None = None
) -> FitResult:
    """
    Ajuste por Levenberg-Marquardt.

    Nunca lanza por falta de convergencia: el resultado lleva
    `converged=False` y las banderas correspondientes.

    Args:
        problem: Datos, modelo, valores iniciales, límites y tolerancias
        registry: Registro de modelos (por defecto el compartido)

    Returns:
        FitResult con parámetros, errores 1σ y diagnóstico
    """
    registry = registry if registry is not None else get_registry()
    spec = registry.get(problem.model)

    initial = dict(problem.initial) if problem.initial is not None else {}
    if spec.initializer is not None and (
        not initial or any(n not in initial for n in spec.names_for(initial))
    ):
        guessed = spec.initializer(problem.x, problem.y)
        guessed.update(initial)
        initial = guessed
    initial.update(problem.fixed)

    objective = _Objective(problem, spec, initial)
    missing = [n for n in objective.names if n not in initial]
    if missing:
        raise InsufficientDataError(
            f"Faltan valores iniciales para {', '.join(missing)}"
        )
    n_free = len(objective.free)
    n_data = problem.y.size
    if n_data < n_free:
        raise InsufficientDataError(
            f"{n_data} datos no bastan para {n_free} parámetros libres"
        )

    u = objective.internal_start()
    p = objective.external(u)
    r = objective.residuals(p)
    chi2 = float(r @ r)
    history = [chi2]
    lam = LAMBDA_START
    converged = False
    flags: list[str] = []
    iterations = 0
    gradient = np.zeros(n_free)

    if not math.isfinite(chi2):
        flags.append("non_finite_start")

    while iterations < problem.max_iterations and math.isfinite(chi2):
        if chi2 <= CHI2_FLOOR:
            converged = True
            break
        jac = -objective.model_jacobian(p) / problem.sigma[:, None]
        jac_u = jac * np.array([t.derivative(np.asarray(ui)) for t, ui in zip(objective.transforms, u, strict=True)])
        gradient = jac_u.T @ r
        if n_free == 0 or np.max(np.abs(gradient)) <= problem.gtol * chi2:
            converged = True
            break
        normal = jac_u.T @ jac_u
        diag = np.diag(normal).copy()
        diag[diag <= 0] = 1.0

        accepted = False
        while lam <= LAMBDA_MAX and iterations < problem.max_iterations:
            iterations += 1
            try:
                step = np.linalg.solve(normal + lam * np.diag(diag), -gradient)
            except np.linalg.LinAlgError:
                lam *= LAMBDA_UP
                continue
            u_trial = u + step
            p_trial = objective.external(u_trial)
            r_trial = objective.residuals(p_trial)
            chi2_trial = float(r_trial @ r_trial)
            change = chi2 - chi2_trial
            if math.isfinite(chi2_trial) and abs(change) <= problem.ftol * chi2:
                if change > 0:
                    u, p, r, chi2 = u_trial, p_trial, r_trial, chi2_trial
                    history.append(chi2)
                converged = True
                accepted = True
                break
            if math.isfinite(chi2_trial) and chi2_trial < chi2:
                u, p, r, chi2 = u_trial, p_trial, r_trial, chi2_trial
                history.append(chi2)
                lam = max(lam / LAMBDA_DOWN, 1e-15)
                accepted = True
                break
            lam *= LAMBDA_UP
        logger.debug(
            "LM %s: iteración %d, chi2=%.6g, lambda=%.1e", problem.model, iterations, chi2, lam
        )
        if converged:
            break
        if not accepted:
            if lam > LAMBDA_MAX:
                flags.append("damping_limit")
            break

    if not converged and iterations >= problem.max_iterations:
        flags.append("max_iterations")

    dof = n_data - n_free
    chi2_reduced = chi2 / dof if dof > 0 else float("nan")

    jac_w = objective.model_jacobian(p) / problem.sigma[:, None]
    cov, cov_flags = _covariance(jac_w, objective.free)
    flags.extend(cov_flags)
    if not problem.absolute_sigma and dof > 0:
        cov = cov * chi2_reduced

    free_values = dict(zip(objective.free, p, strict=True))
    free_err = {
        n: float(math.sqrt(cov[i, i])) if cov[i, i] >= 0 else float("nan")
        for i, n in enumerate(objective.free)
    }
    params = {
        n: FitParameter(
            value=float(free_values.get(n, objective.fixed.get(n, float("nan")))),
            stderr=free_err.get(n, 0.0),
            unit=spec.unit_of(n),
            fixed=n in objective.fixed,
        )
        for n in objective.names
    }
    grad_norm = float(np.max(np.abs(gradient))) if gradient.size else 0.0
    logger.info(
        "Ajuste %s: convergido=%s en %d iteraciones, chi2_red=%.4g",
        problem.model,
        converged,
        iterations,
        chi2_reduced,
    )
    return FitResult(
        model=problem.model,
        params=params,
        chi2=chi2,
        dof=dof,
        chi2_reduced=chi2_reduced,
        converged=converged,
        iterations=iterations,
        flags=flags,
        objective_history=history,
        gradient_norm=grad_norm,
    )


def _jittered_starts(
    problem: FitProblem,
    spec: ModelSpec,
    n: int,
    seed: int,
    jitter: float,
) -> list[FitProblem]:
    initial = dict(problem.initial) if problem.initial else {}
    if spec.initializer is not None:
        guessed = spec.initializer(problem.x, problem.y)
        guessed.update(initial)
        initial = guessed
    rng = np.random.default_rng(seed)
    problems = [problem.model_copy(update={"initial": initial})]
    for _ in range(n - 1):
        start = {}
        for name, value in initial.items():
            if name in problem.fixed:
                start[name] = value
                continue
            lo, hi = problem.bounds.get(name, spec.bound_of(name))
            if lo is not None and lo >= 0 and value > 0:
                trial = value * math.exp(jitter * rng.standard_normal())
            else:
                trial = value + jitter * max(abs(value), 1e-12) * rng.standard_normal()
            if lo is not None:
                trial = max(trial, lo)
            if hi is not None:
                trial = min(trial, hi)
            start[name] = trial
        problems.append(problem.model_copy(update={"initial": start}))
    return problems


def _rank_key(result: FitResult) -> tuple[float, tuple[float, ...]]:
    chi2 = result.chi2 if math.isfinite(result.chi2) else math.inf
    return chi2, tuple(result.values().values())


def multi_start(
    problem: FitProblem,
    n: int | None = None,
    seed: int = 0,
    registry: ModelRegistry | None = None,
    jitter: float = 0.5,
) -> FitResult:
    """
    Ajuste desde varios puntos de partida en paralelo.

    El mejor resultado es el de menor χ²; a igualdad, el de parámetros
    lexicográficamente menores, de modo que no depende del orden de ejecución.
    """
    registry = registry if registry is not None else get_registry()
    n = n if n is not None else get_settings().G2_MULTISTART
    spec = registry.get(problem.model)
    problems = _jittered_starts(problem, spec, max(n, 1), seed, jitter)
    jobs = max(1, min(len(problems), thread_count()))
    results = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(lm_minimize)(p, registry) for p in problems
    )
    best = min(results, key=_rank_key)
    logger.info(
        "Multi-start %s: %d arranques, mejor chi2=%.6g", problem.model, len(results), best.chi2
    )
    return best
