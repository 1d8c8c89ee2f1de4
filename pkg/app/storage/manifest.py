"""
Manifiestos de ejecución: `<salida>.manifest.json` junto a cada salida principal
"""

from pathlib import Path

from app.schemas.manifest import RunManifest
from app.storage.atomic import atomic_write_text
from app.storage.results import dumps, read_json


def manifest_path(output: Path) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def write_manifest(output: Path, manifest: RunManifest) -> Path:
    """Escribir el manifiesto de forma atómica y devolver su ruta"""
    path = manifest_path(output)
    atomic_write_text(path, dumps(manifest.model_dump(mode="json")))
    return path


def read_manifest(output: Path) -> RunManifest:
    return RunManifest.model_validate(read_json(manifest_path(output)))
