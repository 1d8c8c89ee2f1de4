"""
Configuración de la aplicación con Pydantic Settings
"""

import os
from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Configuración principal de PhotonStats usando Pydantic Settings"""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True)

    # Información del proyecto
    PROJECT_NAME: str = "PhotonStats"
    VERSION: str = "1.0.0"
    DESCRIPTION: str = (
        "Simulación y análisis de estadística de fotones para emisores de estado sólido"
    )

    # Configuración del servidor de análisis
    HOST: str = "127.0.0.1"
    PORT: int = 8000
    DEBUG: bool = False

    # Paralelismo (numba y joblib). None = todos los núcleos disponibles
    PHOTONSTATS_THREADS: int | None = None

    # Correlador
    CORRELATOR_CHUNKS: int = 64
    MIN_COINCIDENCES: int = 100

    # Ajustes
    G2_MULTISTART: int = 8

    # Configuración de logs
    LOG_LEVEL: str = "INFO"


@lru_cache
def get_settings() -> Settings:
    """Obtener la configuración de la aplicación"""
    return Settings()


def thread_count() -> int:
    """Número de hilos permitido para cálculos paralelos"""
    settings = get_settings()
    available = os.cpu_count() or 1
    if settings.PHOTONSTATS_THREADS is None:
        return available
    return max(1, min(settings.PHOTONSTATS_THREADS, available))


# Instancia global de configuración
settings = get_settings()
