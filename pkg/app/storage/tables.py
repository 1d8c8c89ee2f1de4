"""
Tablas CSV de dos o tres columnas con cabecera de nombres con unidades.

Formato: UTF-8, separador ',', punto decimal, una fila por muestra.
"""

import io
from pathlib import Path

import numpy as np

from app.core.errors import StorageError
from app.schemas.histogram import G2Curve, Histogram
from app.schemas.spectrum import SampledSpectrum
from app.storage.atomic import atomic_write_text

SPECTRUM_HEADER = ("energy_eV", "counts")
HISTOGRAM_HEADER = ("tau_s", "counts")
G2_HEADER = ("tau_s", "g2")
SERIES_HEADER = ("delay_s", "value")
SATURATION_HEADER = ("power_W", "intensity_Hz")
SATURATION_SIGMA = "sigma_Hz"

FLOAT_FMT = "%.17g"


def write_table(
    path: Path, header: tuple[str, ...], columns: list[np.ndarray], fmt: list[str] | None = None
) -> None:
    """Escribir columnas de igual longitud con su cabecera"""
    if len(header) != len(columns):
        raise StorageError("Cabecera y columnas no coinciden")
    buffer = io.StringIO()
    np.savetxt(
        buffer,
        np.column_stack([np.asarray(c) for c in columns]),
        delimiter=",",
        header=",".join(header),
        comments="",
        fmt=fmt or [FLOAT_FMT] * len(columns),
    )
    atomic_write_text(path, buffer.getvalue())


def read_table(
    path: Path, header: tuple[str, ...], optional: tuple[str, ...] = ()
) -> dict[str, np.ndarray]:
    """
    Leer una tabla validando la cabecera.

    Las columnas de `optional` pueden faltar; cualquier otra diferencia en la
    cabecera es un error de formato.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"No se pudo leer {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise StorageError(f"{path}: fichero vacío")
    names = tuple(name.strip() for name in lines[0].split(","))
    if names[: len(header)] != header or any(n not in optional for n in names[len(header) :]):
        raise StorageError(
            f"{path}: cabecera {','.join(names)} no válida; se esperaba {','.join(header)}"
        )
    try:
        data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise StorageError(f"{path}: valores no numéricos ({exc})") from exc
    if data.size == 0:
        data = np.empty((0, len(names)))
    if data.shape[1] != len(names):
        raise StorageError(f"{path}: número de columnas inconsistente")
    return {name: data[:, i] for i, name in enumerate(names)}


def write_spectrum(path: Path, spec: SampledSpectrum) -> None:
    write_table(path, SPECTRUM_HEADER, [spec.energy, spec.counts])


def read_spectrum(path: Path) -> SampledSpectrum:
    """Espectro muestreado `energy_eV,counts`"""
    table = read_table(path, SPECTRUM_HEADER)
    try:
        return SampledSpectrum(energy=table["energy_eV"], counts=table["counts"])
    except ValueError as exc:
        raise StorageError(f"{path}: espectro inválido ({exc})") from exc


def write_histogram(path: Path, h: Histogram) -> None:
    """Histograma `tau_s,counts` con los centros de bin"""
    write_table(path, HISTOGRAM_HEADER, [h.centers, h.counts], fmt=[FLOAT_FMT, "%d"])


def write_g2(path: Path, curve: G2Curve) -> None:
    write_table(path, G2_HEADER, [curve.tau, curve.g2])


def write_series(path: Path, delays: np.ndarray, values: np.ndarray) -> None:
    """Serie `delay_s,value` (interferogramas y trazas de visibilidad)"""
    write_table(path, SERIES_HEADER, [np.asarray(delays), np.asarray(values)])


def read_saturation(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Barrido de potencia `power_W,intensity_Hz[,sigma_Hz]`"""
    table = read_table(path, SATURATION_HEADER, optional=(SATURATION_SIGMA,))
    return table["power_W"], table["intensity_Hz"], table.get(SATURATION_SIGMA)


def write_saturation(
    path: Path, power: np.ndarray, intensity: np.ndarray, sigma: np.ndarray | None = None
) -> None:
    if sigma is None:
        write_table(path, SATURATION_HEADER, [power, intensity])
    else:
        write_table(path, SATURATION_HEADER + (SATURATION_SIGMA,), [power, intensity, sigma])
