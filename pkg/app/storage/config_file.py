"""
Lectura de ficheros de configuración `clave = valor` con python-dotenv
"""

from pathlib import Path

from dotenv import dotenv_values
from pydantic import ValidationError

from app.core.errors import ConfigError, StorageError
from app.core.logging import get_logger
from app.schemas.config_file import SimulationFile

logger = get_logger(__name__)


def _describe(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        where = ".".join(str(p) for p in error["loc"]) or "fichero"
        parts.append(f"{where}: {error['msg']}")
    return "; ".join(parts)


def parse_simulation_config(
    values: dict[str, str | None], source: str = "<config>"
) -> SimulationFile:
    """Validar pares clave/valor ya leídos"""
    empty = sorted(k for k, v in values.items() if v is None or v.strip() == "")
    if empty:
        raise ConfigError(f"{source}: claves sin valor: {', '.join(empty)}")
    try:
        return SimulationFile.model_validate({k.strip().lower(): v for k, v in values.items()})
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_describe(exc)}") from exc


def load_simulation_config(path: Path) -> SimulationFile:
    """Leer y validar un fichero de configuración de simulación"""
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"No existe el fichero de configuración {path}")
    try:
        values = dotenv_values(path, interpolate=False)
    except (OSError, UnicodeDecodeError) as exc:
        raise StorageError(f"No se pudo leer {path}: {exc}") from exc
    config = parse_simulation_config(dict(values), str(path))
    logger.info("Configuración cargada: %s (%d claves)", path, len(values))
    return config
