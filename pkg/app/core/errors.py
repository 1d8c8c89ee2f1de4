"""
Jerarquía de excepciones de PhotonStats.

Cada excepción lleva el código de salida que usa la línea de comandos.
"""


class PhotonStatsError(Exception):
    """Error base de la aplicación"""

    exit_code: int = 1

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


class ConfigError(PhotonStatsError):
    """Configuración o argumentos inválidos"""

    exit_code = 2


class ChannelError(PhotonStatsError):
    """Canal inexistente en un flujo de etiquetas"""

    exit_code = 2


class StorageError(PhotonStatsError):
    """Fallo de lectura o escritura de ficheros"""

    exit_code = 3


class InsufficientDataError(PhotonStatsError):
    """Datos insuficientes para el análisis pedido"""

    exit_code = 4


class PhysicsDomainError(PhotonStatsError, ValueError):
    """Magnitud física fuera de su dominio (tiempos o potencias no positivos, ...)"""

    exit_code = 2


class UndersampledFringeError(PhotonStatsError):
    """Menos de 8 muestras por periodo de franja"""

    exit_code = 4


class ModelNotFoundError(PhotonStatsError, KeyError):
    """Modelo no registrado"""

    exit_code = 2


class DuplicateModelError(PhotonStatsError):
    """Identificador de modelo ya registrado"""

    exit_code = 2
