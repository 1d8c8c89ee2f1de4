"""
Fixtures compartidas: espectro de referencia, flujos de etiquetas y clientes
"""

from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient
from typer.testing import CliRunner

from app.core.units import MEV
from app.main import app
from app.schemas.spectrum import ComponentKind, LorentzianComponent, ParametricSpectrum
from app.schemas.tags import TagStream
from app.services.photophys import evaluate_spectrum

ZPL_EV = 1.747


def reference_components() -> tuple[LorentzianComponent, ...]:
    """ZPL de 5 meV con bandas de fonones; área total 1 y DW 0.77"""
    return (
        LorentzianComponent(center=ZPL_EV, fwhm=5 * MEV, area=0.77, kind=ComponentKind.ZPL),
        LorentzianComponent(
            center=1.732, fwhm=30 * MEV, area=0.13, kind=ComponentKind.LE_PHONON
        ),
        LorentzianComponent(
            center=1.760, fwhm=20 * MEV, area=0.05, kind=ComponentKind.LE_PHONON
        ),
        LorentzianComponent(
            center=1.582, fwhm=40 * MEV, area=0.03, kind=ComponentKind.LO_PHONON
        ),
        LorentzianComponent(center=1.630, fwhm=60 * MEV, area=0.02, kind=ComponentKind.OTHER),
    )


@pytest.fixture
def reference_spectrum() -> ParametricSpectrum:
    """Espectro paramétrico de referencia"""
    return ParametricSpectrum(components=reference_components())


@pytest.fixture
def energy_grid() -> np.ndarray:
    """Rejilla de 1.45 a 1.90 eV con paso de 0.2 meV"""
    return np.linspace(1.45, 1.90, 2251)


@pytest.fixture
def sampled_reference(reference_spectrum: ParametricSpectrum, energy_grid: np.ndarray):
    """Espectro de referencia muestreado"""
    return evaluate_spectrum(reference_spectrum, energy_grid)


@pytest.fixture
def small_stream() -> TagStream:
    """Flujo de dos canales con etiquetas conocidas (1 ps por tick)"""
    return TagStream(
        resolution=1e-12,
        channels=2,
        channel=[0, 1, 0, 1],
        timestamp=[0, 3000, 10_000, 10_500],
    )


@pytest.fixture
def client() -> TestClient:
    """Cliente de pruebas para FastAPI"""
    return TestClient(app)


@pytest.fixture
def runner() -> CliRunner:
    """Ejecutor de la línea de comandos"""
    return CliRunner()


def write_config(path: Path, **values: object) -> Path:
    """Escribir un fichero de configuración `clave = valor`"""
    path.write_text("".join(f"{k} = {v}\n" for k, v in values.items()), encoding="utf-8")
    return path
