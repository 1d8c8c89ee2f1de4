"""
Tests de la API HTTP: estado, física en forma cerrada, ajustes e interferometría
"""

import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.main import app


def test_app_structure() -> None:
    """Título y versión de la aplicación"""
    assert app.title == "PhotonStats"
    assert app.version == "1.0.0"


def test_root_and_health(client: TestClient) -> None:
    """Endpoints de bienvenida y salud"""
    response = client.get("/api")
    assert response.status_code == 200
    assert response.json()["status"] == "operational"
    health = client.get("/health")
    assert health.status_code == 200
    assert health.json()["status"] == "healthy"


def test_docs_available(client: TestClient) -> None:
    """La documentación OpenAPI está disponible"""
    response = client.get("/docs")
    assert response.status_code in [200, 307, 308]


def test_coherence(client: TestClient) -> None:
    """T1 = 2.54 ns y T2* = 68 fs: el desfase puro domina"""
    response = client.post(
        "/api/v1/photophys/coherence", json={"T1": 2.54e-9, "T2_star": 68e-15}
    )
    assert response.status_code == 200
    data = response.json()
    assert data["Gamma_total"] == pytest.approx(1 / 2.54e-9 + 2 / 68e-15)
    assert data["T2"] == pytest.approx(2 / data["Gamma_total"])
    assert data["T2"] == pytest.approx(68e-15, rel=1e-4)
    assert data["indistinguishability"] == pytest.approx(data["T2"] / (2 * 2.54e-9))


def test_coherence_invalid_time(client: TestClient) -> None:
    """T1 = 0 es un error de dominio → 400"""
    response = client.post("/api/v1/photophys/coherence", json={"T1": 0, "T2_star": 68e-15})
    assert response.status_code == 400


def test_fourier_linewidth(client: TestClient) -> None:
    """1/(2π·T1) ≈ 62.7 MHz para T1 = 2.54 ns"""
    response = client.get("/api/v1/photophys/fourier-linewidth", params={"T1": 2.54e-9})
    assert response.status_code == 200
    assert response.json()["linewidth_hz"] == pytest.approx(62.7e6, abs=0.1e6)
    assert client.get("/api/v1/photophys/fourier-linewidth", params={"T1": 0}).status_code == 422


def test_saturation_intensity(client: TestClient) -> None:
    """A P = P_sat la intensidad es la mitad de I_inf"""
    response = client.post(
        "/api/v1/photophys/saturation-intensity",
        json={"I_inf": 18e3, "P_sat": 5.4e-4, "P": 5.4e-4},
    )
    assert response.status_code == 200
    assert response.json()["intensity_hz"] == pytest.approx(9e3)
    bad = client.post(
        "/api/v1/photophys/saturation-intensity",
        json={"I_inf": 18e3, "P_sat": 5.4e-4, "P": 0},
    )
    assert bad.status_code == 400


def test_source_efficiency(client: TestClient) -> None:
    """Convenciones continua y pulsada; exactamente una"""
    cw = client.post(
        "/api/v1/photophys/source-efficiency", json={"I_inf": 18e3, "T1": 2.54e-9}
    )
    assert cw.status_code == 200
    assert cw.json() == {"convention": "cw", "efficiency": pytest.approx(4.572e-5)}
    pulsed = client.post(
        "/api/v1/photophys/source-efficiency", json={"I_inf": 4e6, "rep_rate": 80e6}
    )
    assert pulsed.json()["efficiency"] == pytest.approx(0.05)
    both = client.post(
        "/api/v1/photophys/source-efficiency",
        json={"I_inf": 1.0, "T1": 1e-9, "rep_rate": 1e6},
    )
    none = client.post("/api/v1/photophys/source-efficiency", json={"I_inf": 1.0})
    assert both.status_code == 422
    assert none.status_code == 422


def test_fit_saturation_endpoint(client: TestClient) -> None:
    """Ajuste de saturación sin ruido por HTTP"""
    power = np.linspace(5e-5, 3e-3, 12)
    intensity = 18e3 / (1 + 5.4e-4 / power)
    response = client.post(
        "/api/v1/fits/saturation",
        json={"power": power.tolist(), "intensity": intensity.tolist()},
    )
    assert response.status_code == 200
    data = response.json()
    assert data["model"] == "saturation"
    assert data["params"]["I_inf"]["value"] == pytest.approx(18e3, rel=1e-6)
    assert data["params"]["P_sat"]["unit"] == "W"
    mismatch = client.post(
        "/api/v1/fits/saturation", json={"power": [1, 2, 3], "intensity": [1, 2]}
    )
    assert mismatch.status_code == 422


def test_fit_envelope_endpoint(client: TestClient) -> None:
    """Envolvente exponencial exacta de 382 fs"""
    delays = np.linspace(0, 1.2e-12, 40)
    visibility = 0.8 * np.exp(-delays / 382e-15)
    response = client.post(
        "/api/v1/fits/envelope",
        json={
            "delays": delays.tolist(),
            "visibility": visibility.tolist(),
            "shape": "exponential",
        },
    )
    assert response.status_code == 200
    params = response.json()["params"]
    assert params["T2_star"]["value"] == pytest.approx(382e-15, rel=1e-6)
    assert params["V0"]["value"] == pytest.approx(0.8, rel=1e-6)


def test_fit_envelope_auto_metrics(client: TestClient) -> None:
    """En modo automático se informan ambos χ²"""
    delays = np.linspace(0, 200e-15, 30)
    visibility = 0.9 * np.exp(-((delays / 90e-15) ** 2))
    response = client.post(
        "/api/v1/fits/envelope",
        json={"delays": delays.tolist(), "visibility": visibility.tolist()},
    )
    assert response.status_code == 200
    data = response.json()
    assert data["model"] == "envelope_gauss"
    assert data["metrics"]["chi2_gaussian"] < data["metrics"]["chi2_exponential"]


def test_lorentzian_interferogram(client: TestClient) -> None:
    """En τ = 0 la salida vale ½(1 + V0)"""
    response = client.post(
        "/api/v1/interferometry/lorentzian",
        json={
            "T1": 2.54e-9,
            "T2_star": 382e-15,
            "energy_ev": 1.747,
            "V0": 0.8,
            "delays": [0.0, 1e-11],
        },
    )
    assert response.status_code == 200
    intensity = response.json()["intensity"]
    assert intensity[0] == pytest.approx(0.9)
    assert intensity[1] == pytest.approx(0.5, abs=1e-6)
    bad = client.post(
        "/api/v1/interferometry/lorentzian",
        json={"T1": -1, "T2_star": 382e-15, "energy_ev": 1.747, "delays": [0.0]},
    )
    assert bad.status_code == 400


def test_scan_plan(client: TestClient) -> None:
    """Plan por defecto: separación de 6.65 fs desde −20 ps"""
    response = client.post("/api/v1/interferometry/scan-plan", json={})
    assert response.status_code == 200
    data = response.json()
    assert data["spacing"] == pytest.approx(6.65e-15)
    assert data["delays"][0] == pytest.approx(-20e-12)
    assert data["delays"][-1] <= 14e-12
    assert data["windows"] == math.ceil(len(data["delays"]) / 20)
    overlap = client.post(
        "/api/v1/interferometry/scan-plan", json={"coarse_step": 100e-15}
    )
    assert overlap.status_code == 400


def test_models_endpoints(client: TestClient) -> None:
    """Listado de modelos, detalle y modelo inexistente → 404"""
    ids = client.get("/api/v1/fits/models").json()
    assert "saturation" in ids
    assert ids == sorted(ids)
    detail = client.get("/api/v1/fits/models/exp_irf")
    assert detail.status_code == 200
    data = detail.json()
    assert data["param_names"] == ["amplitude", "T1", "t0", "background", "irf_fwhm"]
    assert data["analytic_jacobian"] is False
    multi = client.get("/api/v1/fits/models/multi_lorentzian").json()
    assert multi["repeating"] is True
    missing = client.get("/api/v1/fits/models/nope")
    assert missing.status_code == 404
    assert missing.json()["detail"] == "Modelo no registrado"
