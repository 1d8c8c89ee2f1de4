"""
Escritura atómica: fichero temporal en el mismo directorio + os.replace
"""

import os
import tempfile
from pathlib import Path

from app.core.errors import StorageError


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Escribir `data` en `path` sin dejar nunca un fichero a medias"""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
    except OSError as exc:
        raise StorageError(f"No se pudo escribir {target}: {exc}") from exc


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
