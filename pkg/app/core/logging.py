"""
Sistema de logging de PhotonStats
"""

import logging
import sys

from app.core.config import get_settings

LOG_FORMAT = "[%(asctime)s] [%(levelname)s] [%(name)s] - %(message)s"


def setup_logging() -> None:
    """
    Configurar el sistema de logging de la aplicación.

    Los mensajes van a stderr: stdout queda reservado para las salidas JSON
    de la línea de comandos.
    """
    settings = get_settings()

    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format=LOG_FORMAT,
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=[logging.StreamHandler(sys.stderr)],
    )

    logger = logging.getLogger(__name__)
    logger.debug("🔧 Sistema de logging configurado correctamente")


def get_logger(name: str) -> logging.Logger:
    """
    Obtener un logger configurado para un módulo específico

    Args:
        name: Nombre del módulo/logger

    Returns:
        Logger configurado
    """
    return logging.getLogger(name)
