"""
Codec del formato binario PTAG de etiquetas temporales.

Cabecera (little-endian): magic `PTAG`, versión u16 = 1, resolución en ps u64,
número de canales u8. Después, registros empaquetados de 12 bytes
(canal u8, 3 bytes reservados, instante en ticks u64).
"""

import struct
from pathlib import Path

import numpy as np

from app.core.errors import StorageError
from app.core.logging import get_logger
from app.core.units import PS
from app.schemas.tags import TagStream
from app.storage.atomic import atomic_write_bytes

logger = get_logger(__name__)

MAGIC = b"PTAG"
VERSION = 1
HEADER = struct.Struct("<4sHQB")
RECORD = np.dtype([("channel", "u1"), ("reserved", "u1", (3,)), ("timestamp", "<u8")])


def encode_ptag(stream: TagStream) -> bytes:
    """Serializar un flujo a bytes PTAG"""
    resolution_ps = round(stream.resolution / PS)
    if resolution_ps < 1 or abs(resolution_ps * PS - stream.resolution) > 1e-6 * PS:
        raise StorageError(
            f"La resolución {stream.resolution} s no es un múltiplo entero de 1 ps"
        )
    records = np.zeros(len(stream), dtype=RECORD)
    records["channel"] = stream.channel
    records["timestamp"] = stream.timestamp.astype(np.uint64)
    header = HEADER.pack(MAGIC, VERSION, resolution_ps, stream.channels)
    return header + records.tobytes()


def decode_ptag(data: bytes) -> TagStream:
    """Leer un flujo desde bytes PTAG; formato inválido → StorageError"""
    if len(data) < HEADER.size:
        raise StorageError("Fichero PTAG truncado: falta la cabecera")
    magic, version, resolution_ps, channels = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise StorageError("No es un fichero PTAG (magic incorrecto)")
    if version != VERSION:
        raise StorageError(f"Versión PTAG no soportada: {version}")
    if resolution_ps == 0:
        raise StorageError("Resolución nula en la cabecera PTAG")
    body = data[HEADER.size :]
    if len(body) % RECORD.itemsize:
        raise StorageError("Fichero PTAG truncado: registro incompleto")
    records = np.frombuffer(body, dtype=RECORD)
    timestamps = records["timestamp"]
    if timestamps.size and timestamps.max() > np.iinfo(np.int64).max:
        raise StorageError("Instante fuera de rango en el fichero PTAG")
    try:
        return TagStream(
            resolution=resolution_ps * PS,
            channels=channels,
            channel=records["channel"],
            timestamp=timestamps.astype(np.int64),
        )
    except ValueError as exc:
        raise StorageError(f"Fichero PTAG inválido: {exc}") from exc


def write_ptag(path: Path, stream: TagStream) -> None:
    """Escribir un flujo en disco"""
    atomic_write_bytes(path, encode_ptag(stream))
    logger.info("PTAG escrito: %s (%d etiquetas)", path, len(stream))


def read_ptag(path: Path) -> TagStream:
    """Leer un flujo desde disco"""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise StorageError(f"No se pudo leer {path}: {exc}") from exc
    return decode_ptag(data)
