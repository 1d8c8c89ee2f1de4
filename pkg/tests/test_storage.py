"""
Tests de persistencia: PTAG, tablas CSV, JSON de resultados, manifiestos y
ficheros de configuración
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from app.core.errors import ConfigError, StorageError
from app.core.units import MEV, NS
from app.schemas.emitter import DriveMode, SplitterMode
from app.schemas.fit import FitParameter, FitResult
from app.schemas.histogram import Histogram
from app.schemas.manifest import RunManifest
from app.schemas.spectrum import ComponentKind, LorentzianComponent, SampledSpectrum
from app.schemas.tags import SYNC_CHANNEL, TagStream
from app.storage import config_file, manifest, ptag, results, tables
from tests.conftest import write_config


def test_ptag_round_trip(tmp_path: Path) -> None:
    """Escribir y leer un flujo conserva canales, instantes y resolución"""
    stream = TagStream(
        resolution=4e-12,
        channels=2,
        channel=[0, SYNC_CHANNEL, 1, 0],
        timestamp=[5, 5, 2**40, 2**40 + 3],
    )
    path = tmp_path / "run.ptag"
    ptag.write_ptag(path, stream)
    assert path.stat().st_size == ptag.HEADER.size + 4 * 12
    loaded = ptag.read_ptag(path)
    assert loaded.resolution == pytest.approx(4e-12)
    assert loaded.channels == 2
    np.testing.assert_array_equal(loaded.channel, stream.channel)
    np.testing.assert_array_equal(loaded.timestamp, stream.timestamp)


def test_ptag_header_layout() -> None:
    """Cabecera little-endian: magic, versión, resolución en ps y canales"""
    data = ptag.encode_ptag(TagStream.empty(1e-12, 2))
    assert data[:4] == b"PTAG"
    assert int.from_bytes(data[4:6], "little") == 1
    assert int.from_bytes(data[6:14], "little") == 1
    assert data[14] == 2


def test_ptag_invalid_inputs(tmp_path: Path) -> None:
    """Magic incorrecto, truncado, fichero ausente y resolución no entera"""
    good = ptag.encode_ptag(TagStream(resolution=1e-12, channels=1, channel=[0], timestamp=[7]))
    with pytest.raises(StorageError):
        ptag.decode_ptag(b"XTAG" + good[4:])
    with pytest.raises(StorageError):
        ptag.decode_ptag(good[:-1])
    with pytest.raises(StorageError):
        ptag.decode_ptag(good[:5])
    with pytest.raises(StorageError):
        ptag.read_ptag(tmp_path / "missing.ptag")
    with pytest.raises(StorageError):
        ptag.encode_ptag(TagStream.empty(1.5e-12, 1))


def test_ptag_unsorted_records_rejected() -> None:
    """Un fichero con instantes decrecientes es inválido"""
    records = np.zeros(2, dtype=ptag.RECORD)
    records["timestamp"] = [10, 5]
    data = ptag.HEADER.pack(ptag.MAGIC, ptag.VERSION, 1, 1) + records.tobytes()
    with pytest.raises(StorageError):
        ptag.decode_ptag(data)


def test_spectrum_table_round_trip(tmp_path: Path) -> None:
    """Cabecera energy_eV,counts y valores exactos"""
    spectrum = SampledSpectrum(energy=[1.70, 1.75, 1.80], counts=[0.1, 2.5, 0.3])
    path = tmp_path / "spectrum.csv"
    tables.write_spectrum(path, spectrum)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "energy_eV,counts"
    loaded = tables.read_spectrum(path)
    np.testing.assert_array_equal(loaded.energy, spectrum.energy)
    np.testing.assert_array_equal(loaded.counts, spectrum.counts)


def test_table_header_mismatch(tmp_path: Path) -> None:
    """Una cabecera distinta es un error de E/S"""
    path = tmp_path / "bad.csv"
    path.write_text("energy,counts\n1.7,1\n", encoding="utf-8")
    with pytest.raises(StorageError):
        tables.read_spectrum(path)
    path.write_text("energy_eV,counts\n1.7,abc\n", encoding="utf-8")
    with pytest.raises(StorageError):
        tables.read_spectrum(path)


def test_histogram_table(tmp_path: Path) -> None:
    """Histograma con centros de bin y cuentas enteras"""
    h = Histogram(bin_width=1 * NS, start=-1.5 * NS, counts=[3, 0, 7])
    path = tmp_path / "h.csv"
    tables.write_histogram(path, h)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "tau_s,counts"
    assert lines[3].endswith(",7")
    data = tables.read_table(path, tables.HISTOGRAM_HEADER)
    np.testing.assert_allclose(data["tau_s"], h.centers)


def test_saturation_table_optional_sigma(tmp_path: Path) -> None:
    """La columna sigma_Hz es opcional"""
    power = np.array([1e-4, 5e-4, 1e-3])
    intensity = np.array([2.9e3, 8.5e3, 11.7e3])
    bare = tmp_path / "bare.csv"
    tables.write_saturation(bare, power, intensity)
    _, _, sigma = tables.read_saturation(bare)
    assert sigma is None
    full = tmp_path / "full.csv"
    tables.write_saturation(full, power, intensity, 0.05 * intensity)
    p, i, s = tables.read_saturation(full)
    np.testing.assert_array_equal(p, power)
    assert s is not None
    np.testing.assert_allclose(s, 0.05 * intensity)


def test_json_non_finite_and_sorted(tmp_path: Path) -> None:
    """Los no finitos se escriben como null y las claves van ordenadas"""
    path = tmp_path / "out.json"
    results.write_json(path, {"b": math.nan, "a": [1.0, math.inf], "c": np.float64(2.5)})
    text = path.read_text(encoding="utf-8")
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert json.loads(text) == {"a": [1.0, None], "b": None, "c": 2.5}


def test_fit_to_dict_schema() -> None:
    """Esquema común de los ajustes"""
    result = FitResult(
        model="saturation",
        params={
            "I_inf": FitParameter(value=18e3, stderr=400.0, unit="Hz"),
            "P_sat": FitParameter(value=5.4e-4, stderr=math.inf, unit="W"),
        },
        chi2=10.0,
        dof=8,
        chi2_reduced=1.25,
        converged=True,
        iterations=12,
        flags=["degenerate:P_sat"],
    ).with_metrics(source_to_detector_efficiency=4.6e-5)
    plain = json.loads(results.dumps(results.fit_to_dict(result)))
    assert set(plain) == {
        "model", "params", "chi2_reduced", "converged", "iterations", "flags", "metrics",
    }
    assert plain["params"]["P_sat"] == {"value": 5.4e-4, "stderr": None, "unit": "W"}
    assert plain["metrics"]["source_to_detector_efficiency"] == 4.6e-5


def test_components_round_trip(tmp_path: Path) -> None:
    """Espectro paramétrico en JSON"""
    components = [
        LorentzianComponent(center=1.747, fwhm=5 * MEV, area=0.77, kind=ComponentKind.ZPL),
        LorentzianComponent(center=1.582, fwhm=40 * MEV, area=0.23, kind=ComponentKind.LO_PHONON),
    ]
    path = tmp_path / "components.json"
    results.write_json(path, results.components_to_list(components))
    assert results.read_components(path) == components
    path.write_text('[{"center_eV": 1.7}]', encoding="utf-8")
    with pytest.raises(StorageError):
        results.read_components(path)


def test_manifest_next_to_output(tmp_path: Path) -> None:
    """El manifiesto se escribe como <salida>.manifest.json"""
    output = tmp_path / "g2.csv"
    written = manifest.write_manifest(
        output,
        RunManifest(command="g2", config={"bin_ns": 1.0}, tool_version="1.0.0", wall_time_s=0.1),
    )
    assert written == tmp_path / "g2.csv.manifest.json"
    loaded = manifest.read_manifest(output)
    assert loaded.command == "g2"
    assert loaded.config == {"bin_ns": 1.0}


def test_no_temporary_files_left(tmp_path: Path) -> None:
    """La escritura atómica no deja ficheros temporales"""
    results.write_json(tmp_path / "a.json", {"x": 1})
    results.write_json(tmp_path / "a.json", {"x": 2})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.json"]
    assert results.read_json(tmp_path / "a.json") == {"x": 2}


def test_load_simulation_config(tmp_path: Path) -> None:
    """Fichero clave = valor con unidades en el nombre"""
    path = write_config(
        tmp_path / "sim.conf",
        mode="pulsed",
        duration_s=0.01,
        seed=4,
        splitter="single",
        t1_ns=2.54,
        rep_rate_mhz=80,
        pulse_width_ps=500,
        psat_mw=0.54,
        power_psat=1.2,
        jitter_fwhm_ps=40,
    )
    cfg = config_file.load_simulation_config(path)
    setup = cfg.to_setup()
    assert setup.config.drive_mode == DriveMode.PULSED
    assert setup.config.splitter == SplitterMode.SINGLE
    assert setup.emitter.T1 == pytest.approx(2.54 * NS)
    assert setup.emitter.pulse is not None
    assert setup.emitter.pulse.rep_rate == pytest.approx(80e6)
    assert setup.emitter.pulse.P_ref == pytest.approx(0.54e-3)
    assert setup.config.power == pytest.approx(1.2 * 0.54e-3)
    assert setup.detector.jitter_fwhm == pytest.approx(40e-12)


def test_config_comments_and_case(tmp_path: Path) -> None:
    """Comentarios y claves en mayúsculas"""
    path = tmp_path / "sim.conf"
    path.write_text("# adquisición corta\nDURATION_S = 0.5\nT1_NS = 3\n", encoding="utf-8")
    cfg = config_file.load_simulation_config(path)
    assert cfg.duration_s == 0.5
    assert cfg.t1_ns == 3.0


@pytest.mark.parametrize(
    "values",
    [
        {"duration_s": "0", "t1_ns": "2.54"},
        {"duration_s": "1", "t1_ns": "2.54", "unknown_key": "3"},
        {"duration_s": "1"},
        {"duration_s": "1", "t1_ns": "2.54", "mode": "pulsed"},
        {"duration_s": "1", "t1_ns": "2.54", "power_psat": "1.0"},
        {"duration_s": "1", "t1_ns": ""},
    ],
)
def test_invalid_configs(values: dict[str, str]) -> None:
    """Valores fuera de dominio, claves desconocidas o incompletas"""
    with pytest.raises(ConfigError):
        config_file.parse_simulation_config(values)


def test_missing_config_file(tmp_path: Path) -> None:
    """Un fichero inexistente es un error de E/S"""
    with pytest.raises(StorageError):
        config_file.load_simulation_config(tmp_path / "nope.conf")
