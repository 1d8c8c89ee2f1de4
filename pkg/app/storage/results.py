"""
Resultados en JSON con claves ordenadas.

Los valores no finitos (NaN, ±inf) se escriben como null.
"""

import json
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from app.core.errors import StorageError
from app.schemas.fit import FitResult
from app.schemas.spectrum import ComponentKind, LorentzianComponent
from app.storage.atomic import atomic_write_text


def to_plain(value: Any) -> Any:
    """Convertir a tipos JSON nativos; no finitos → None"""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dumps(payload: Any) -> str:
    """JSON estable (claves ordenadas, sin NaN)"""
    return json.dumps(to_plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path, payload: Any) -> None:
    atomic_write_text(path, dumps(payload))


def read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageError(f"No se pudo leer {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise StorageError(f"{path}: JSON inválido ({exc})") from exc


def fit_to_dict(result: FitResult) -> dict[str, Any]:
    """Esquema JSON común de los ajustes"""
    return {
        "model": result.model,
        "params": {
            name: {"value": p.value, "stderr": p.stderr, "unit": p.unit}
            for name, p in result.params.items()
        },
        "chi2_reduced": result.chi2_reduced,
        "converged": result.converged,
        "iterations": result.iterations,
        "flags": list(result.flags),
        "metrics": dict(result.metrics),
    }


def components_to_list(components: Sequence[LorentzianComponent]) -> list[dict[str, Any]]:
    """Espectro paramétrico como lista de {center_eV, fwhm_eV, area, kind}"""
    return [
        {"center_eV": c.center, "fwhm_eV": c.fwhm, "area": c.area, "kind": c.kind.value}
        for c in components
    ]


def read_components(path: Path) -> list[LorentzianComponent]:
    """Leer un espectro paramétrico en JSON"""
    data = read_json(path)
    if not isinstance(data, list):
        raise StorageError(f"{path}: se esperaba una lista de componentes")
    try:
        return [
            LorentzianComponent(
                center=item["center_eV"],
                fwhm=item["fwhm_eV"],
                area=item["area"],
                kind=ComponentKind(item.get("kind", ComponentKind.OTHER.value)),
            )
            for item in data
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise StorageError(f"{path}: componente inválida ({exc})") from exc
