"""
Registro de modelos de ajuste.

Cada modelo expone evaluación, jacobiano opcional, inicializador por defecto,
nombres de parámetros con unidades y límites por defecto.
"""

from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import find_peaks, peak_widths
from scipy.special import erfc, erfcx

from app.core.errors import DuplicateModelError, ModelNotFoundError
from app.core.units import FWHM_TO_SIGMA

Bound = tuple[float | None, float | None]
Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]
Initializer = Callable[[np.ndarray, np.ndarray], dict[str, float]]


@dataclass(frozen=True)
class ModelSpec:
    """
    Definición de un modelo.

    Si `repeating` es True, `param_names` describe un bloque que se repite;
    los nombres efectivos llevan sufijo `_0`, `_1`, ...
    """

    id: str
    param_names: tuple[str, ...]
    units: tuple[str, ...]
    evaluate: Evaluator
    jacobian: Evaluator | None = None
    initializer: Initializer | None = None
    bounds: dict[str, Bound] = field(default_factory=dict)
    repeating: bool = False

    def names_for(self, initial: dict[str, float]) -> tuple[str, ...]:
        """Nombres efectivos de parámetros dado un conjunto inicial"""
        if not self.repeating:
            return self.param_names
        blocks = 0
        while f"{self.param_names[0]}_{blocks}" in initial:
            blocks += 1
        return tuple(
            f"{name}_{i}" for i in range(blocks) for name in self.param_names
        )

    def unit_of(self, name: str) -> str:
        base = name.rsplit("_", 1)[0] if self.repeating else name
        return self.units[self.param_names.index(base)]

    def bound_of(self, name: str) -> Bound:
        base = name.rsplit("_", 1)[0] if self.repeating else name
        return self.bounds.get(base, (None, None))


class ModelRegistry:
    """Colección de modelos indexada por identificador"""

    def __init__(self) -> None:
        self._models: dict[str, ModelSpec] = {}

    def register(self, spec: ModelSpec) -> ModelSpec:
        if spec.id in self._models:
            raise DuplicateModelError(f"Modelo '{spec.id}' ya registrado")
        self._models[spec.id] = spec
        return spec

    def get(self, model_id: str) -> ModelSpec:
        try:
            return self._models[model_id]
        except KeyError:
            raise ModelNotFoundError(f"Modelo '{model_id}' no encontrado") from None

    def ids(self) -> list[str]:
        return sorted(self._models)

    def __contains__(self, model_id: object) -> bool:
        return model_id in self._models

    def __iter__(self) -> Iterator[ModelSpec]:
        return iter(self._models.values())

    def __len__(self) -> int:
        return len(self._models)


# ===== Lineal =====


def _linear(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    return p[0] * x + p[1]


def _linear_jac(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.column_stack([x, np.ones_like(x)])


def _linear_init(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    slope, intercept = np.polyfit(x, y, 1)
    return {"slope": float(slope), "intercept": float(intercept)}


# ===== Saturación: I(P) = I_inf/(1 + P_sat/P) =====


def _saturation(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    return p[0] * x / (x + p[1])


def _saturation_jac(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    denom = x + p[1]
    return np.column_stack([x / denom, -p[0] * x / denom**2])


def _saturation_init(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    i_inf = 1.2 * float(np.max(ys))
    half = 0.5 * i_inf
    above = np.nonzero(ys >= half)[0]
    p_sat = float(xs[above[0]]) if above.size else float(np.median(xs))
    return {"I_inf": i_inf, "P_sat": max(p_sat, float(xs[0]) * 1e-3)}


# ===== Suma de lorentzianas =====


def _multi_lorentzian(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    blocks = p.reshape(-1, 3)
    out = np.zeros_like(x, dtype=float)
    for center, fwhm, area in blocks:
        out += area * (fwhm / (2.0 * np.pi)) / ((x - center) ** 2 + (fwhm / 2.0) ** 2)
    return out


def _multi_lorentzian_jac(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    blocks = p.reshape(-1, 3)
    cols = []
    for center, fwhm, area in blocks:
        d = x - center
        denom = d**2 + (fwhm / 2.0) ** 2
        cols.append(area * fwhm / (2.0 * np.pi) * 2.0 * d / denom**2)
        cols.append(area / (2.0 * np.pi) * (denom - fwhm**2 / 2.0) / denom**2)
        cols.append(fwhm / (2.0 * np.pi * denom))
    return np.column_stack(cols)


def lorentzian_peaks(
    x: np.ndarray, y: np.ndarray, max_components: int = 6
) -> dict[str, float]:
    """Proponer componentes en los máximos locales más prominentes"""
    prominence = 1e-3 * float(np.max(y)) if np.max(y) > 0 else 0.0
    peaks, props = find_peaks(y, prominence=prominence)
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(y))])
        props = {"prominences": np.array([float(np.max(y))])}
    ranked = peaks[np.argsort(props["prominences"])[::-1][:max_components]]
    ranked = np.sort(ranked)
    _, _, left, right = peak_widths(y, ranked, rel_height=0.5)
    index = np.arange(x.size, dtype=float)
    spacing = float(np.median(np.diff(x))) if x.size > 1 else 1.0
    initial: dict[str, float] = {}
    for i, peak in enumerate(ranked):
        fwhm = float(np.interp(right[i], index, x) - np.interp(left[i], index, x))
        fwhm = max(fwhm, 2.0 * spacing)
        initial[f"center_{i}"] = float(x[peak])
        initial[f"fwhm_{i}"] = fwhm
        initial[f"area_{i}"] = float(y[peak]) * np.pi * fwhm / 2.0
    return initial


def _multi_lorentzian_init(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    return lorentzian_peaks(x, y)


# ===== Exponencial convolucionada con IRF gaussiano =====


def emg(t: np.ndarray, T1: float, t0: float, sigma: float) -> np.ndarray:
    """
    Exponencial unidad (pico 1 sin IRF) convolucionada con una gaussiana de
    desviación `sigma`; para sigma = 0 es escalón·exponencial.
    """
    s = np.asarray(t, dtype=float) - t0
    if sigma <= 0:
        return np.where(s >= 0, np.exp(-np.maximum(s, 0.0) / T1), 0.0)
    z = (sigma**2 / T1 - s) / (sigma * np.sqrt(2.0))
    # erfcx evita el producto exp(grande)·erfc(diminuto)
    safe = np.exp(-(s**2) / (2.0 * sigma**2)) * erfcx(np.maximum(z, 0.0))
    direct = np.exp(
        np.minimum(sigma**2 / (2.0 * T1**2) - s / T1, 700.0)
    ) * erfc(np.minimum(z, 0.0))
    return 0.5 * np.where(z >= 0, safe, direct)


def _exp_irf(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    amplitude, T1, t0, background, irf_fwhm = p
    return background + amplitude * emg(x, T1, t0, irf_fwhm * FWHM_TO_SIGMA)


def _exp_irf_init(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    tail = y[int(0.9 * y.size) :]
    background = float(np.median(tail)) if tail.size else 0.0
    peak = int(np.argmax(y))
    amplitude = max(float(y[peak]) - background, 1.0)
    level = background + amplitude / np.e
    after = np.nonzero(y[peak:] <= level)[0]
    span = float(x[-1] - x[0]) if x.size > 1 else 1.0
    T1 = float(x[peak + after[0]] - x[peak]) if after.size else span / 5.0
    return {
        "amplitude": amplitude,
        "T1": max(T1, span * 1e-4),
        "t0": float(x[peak]),
        "background": background,
        "irf_fwhm": 0.0,
    }


def periodic_emg(
    t: np.ndarray, T1: float, t0: float, sigma: float, period: float
) -> np.ndarray:
    """
    emg plegada a un periodo de repetición: suma el pulso actual, el
    siguiente (detecciones adelantadas por el jitter) y la cola de todos los
    anteriores, esta última como serie geométrica.
    """
    t = np.asarray(t, dtype=float)
    if period <= 0:
        return emg(t, T1, t0, sigma)
    total = emg(t - period, T1, t0, sigma) + emg(t, T1, t0, sigma) + emg(t + period, T1, t0, sigma)
    q = np.exp(-period / T1)
    # del segundo pulso anterior hacia atrás: exponencial pura
    exponent = np.minimum(sigma**2 / (2.0 * T1**2) - (t + 2.0 * period - t0) / T1, 700.0)
    return total + np.exp(exponent) / (1.0 - q)


def _exp_irf_periodic(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    amplitude, T1, t0, background, irf_fwhm, period = p
    return background + amplitude * periodic_emg(x, T1, t0, irf_fwhm * FWHM_TO_SIGMA, period)


def _exp_irf_periodic_init(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    initial = _exp_irf_init(x, y)
    step = float(x[1] - x[0]) if x.size > 1 else 0.0
    initial["period"] = float(x[-1] - x[0]) + step
    return initial


# ===== g² de tres niveles =====


def _g2_three_level(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    tau1, tau2, a, baseline = p
    ax = np.abs(x)
    return baseline * (
        1.0 - (1.0 + a) * np.exp(-ax / tau1) + a * np.exp(-ax / tau2)
    )


def _g2_three_level_jac(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    tau1, tau2, a, baseline = p
    ax = np.abs(x)
    e1 = np.exp(-ax / tau1)
    e2 = np.exp(-ax / tau2)
    return np.column_stack(
        [
            -baseline * (1.0 + a) * e1 * ax / tau1**2,
            baseline * a * e2 * ax / tau2**2,
            baseline * (e2 - e1),
            1.0 - (1.0 + a) * e1 + a * e2,
        ]
    )


def _g2_three_level_init(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    ax = np.abs(x)
    order = np.argsort(ax)
    ax, ys = ax[order], y[order]
    far = ys[int(0.9 * ys.size) :]
    baseline = float(np.mean(far)) if far.size else 1.0
    baseline = baseline if baseline > 0 else 1.0
    peak = int(np.argmax(ys))
    excess = float(ys[peak]) / baseline - 1.0
    a = max(excess, 0.05)
    rise = np.nonzero(ys >= baseline * (1.0 - np.exp(-1.0)))[0]
    tau1 = float(ax[rise[0]]) if rise.size and ax[rise[0]] > 0 else 1e-9
    level = baseline * (1.0 + excess / np.e)
    fall = np.nonzero((ax > ax[peak]) & (ys <= level))[0]
    tau2 = float(ax[fall[0]]) if fall.size else 10.0 * tau1
    return {
        "tau1": tau1,
        "tau2": max(tau2, 2.0 * tau1),
        "a": a,
        "baseline": baseline,
    }


# ===== Envolventes de visibilidad =====


def _envelope_exp(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    return p[0] * np.exp(-np.abs(x) / p[1])


def _envelope_exp_jac(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    e = np.exp(-ax / p[1])
    return np.column_stack([e, p[0] * e * ax / p[1] ** 2])


def _envelope_gauss(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    return p[0] * np.exp(-((x / p[1]) ** 2))


def _envelope_gauss_jac(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    e = np.exp(-((x / p[1]) ** 2))
    return np.column_stack([e, p[0] * e * 2.0 * x**2 / p[1] ** 3])


def _envelope_init(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    ax = np.abs(x)
    order = np.argsort(ax)
    ax, ys = ax[order], y[order]
    v0 = float(np.clip(np.max(ys) * 1.02, 1e-3, 0.999))
    below = np.nonzero(ys <= v0 / np.e)[0]
    span = float(ax[-1] - ax[0]) if ax.size > 1 else 1.0
    t2 = float(ax[below[0]]) if below.size and ax[below[0]] > 0 else span / 2.0
    return {"V0": v0, "T2_star": t2}


def _envelope_loglinear(x: np.ndarray, y: np.ndarray, power: int) -> dict[str, float]:
    """Recta ln V frente a |τ|^power sobre los puntos por encima del 5 % del máximo"""
    crossing = _envelope_init(x, y)
    if not np.max(y) > 0:
        return crossing
    ax = np.abs(x)
    keep = y > 0.05 * np.max(y)
    if np.count_nonzero(keep) < 3 or np.ptp(ax[keep]) == 0:
        return crossing
    scale = float(np.max(ax[keep]))
    slope, intercept = np.polyfit((ax[keep] / scale) ** power, np.log(y[keep]), 1)
    if not slope < 0:
        return crossing
    return {
        "V0": float(np.clip(np.exp(intercept), 1e-3, 0.999)),
        "T2_star": scale * float((-1.0 / slope) ** (1.0 / power)),
    }


def _envelope_exp_init(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    return _envelope_loglinear(x, y, 1)


def _envelope_gauss_init(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    return _envelope_loglinear(x, y, 2)


def envelope_seeds(x: np.ndarray, y: np.ndarray) -> list[dict[str, float]]:
    """Arranques alternativos de T2* alrededor del cruce 1/e"""
    crossing = _envelope_init(x, y)
    return [
        {"V0": crossing["V0"], "T2_star": crossing["T2_star"] * factor}
        for factor in (1.0, 0.5, 2.0)
    ]


def register_models(registry: ModelRegistry | None = None) -> ModelRegistry:
    """Registrar los modelos incorporados; error si un identificador ya existe"""
    registry = registry if registry is not None else ModelRegistry()
    registry.register(
        ModelSpec(
            id="linear",
            param_names=("slope", "intercept"),
            units=("", ""),
            evaluate=_linear,
            jacobian=_linear_jac,
            initializer=_linear_init,
        )
    )
    registry.register(
        ModelSpec(
            id="saturation",
            param_names=("I_inf", "P_sat"),
            units=("Hz", "W"),
            evaluate=_saturation,
            jacobian=_saturation_jac,
            initializer=_saturation_init,
            bounds={"I_inf": (0.0, None), "P_sat": (0.0, None)},
        )
    )
    registry.register(
        ModelSpec(
            id="multi_lorentzian",
            param_names=("center", "fwhm", "area"),
            units=("eV", "eV", ""),
            evaluate=_multi_lorentzian,
            jacobian=_multi_lorentzian_jac,
            initializer=_multi_lorentzian_init,
            bounds={"center": (0.0, None), "fwhm": (0.0, None), "area": (0.0, None)},
            repeating=True,
        )
    )
    registry.register(
        ModelSpec(
            id="exp_irf",
            param_names=("amplitude", "T1", "t0", "background", "irf_fwhm"),
            units=("counts", "s", "s", "counts", "s"),
            evaluate=_exp_irf,
            initializer=_exp_irf_init,
            bounds={"amplitude": (0.0, None), "T1": (1e-13, None)},
        )
    )
    registry.register(
        ModelSpec(
            id="exp_irf_periodic",
            param_names=("amplitude", "T1", "t0", "background", "irf_fwhm", "period"),
            units=("counts", "s", "s", "counts", "s", "s"),
            evaluate=_exp_irf_periodic,
            initializer=_exp_irf_periodic_init,
            bounds={"amplitude": (0.0, None), "T1": (1e-13, None), "period": (0.0, None)},
        )
    )
    registry.register(
        ModelSpec(
            id="g2_three_level",
            param_names=("tau1", "tau2", "a", "baseline"),
            units=("s", "s", "", ""),
            evaluate=_g2_three_level,
            jacobian=_g2_three_level_jac,
            initializer=_g2_three_level_init,
            bounds={
                "tau1": (1e-12, 1e-6),
                "tau2": (1e-10, 1e-1),
                "a": (0.0, 1e3),
                "baseline": (0.0, 10.0),
            },
        )
    )
    registry.register(
        ModelSpec(
            id="envelope_exp",
            param_names=("V0", "T2_star"),
            units=("", "s"),
            evaluate=_envelope_exp,
            jacobian=_envelope_exp_jac,
            initializer=_envelope_exp_init,
            bounds={"V0": (0.0, 1.0), "T2_star": (0.0, None)},
        )
    )
    registry.register(
        ModelSpec(
            id="envelope_gauss",
            param_names=("V0", "T2_star"),
            units=("", "s"),
            evaluate=_envelope_gauss,
            jacobian=_envelope_gauss_jac,
            initializer=_envelope_gauss_init,
            bounds={"V0": (0.0, 1.0), "T2_star": (0.0, None)},
        )
    )
    return registry


@lru_cache
def get_registry() -> ModelRegistry:
    """Registro compartido con los modelos incorporados"""
    return register_models()
