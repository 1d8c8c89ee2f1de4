"""
Aplicación principal FastAPI - PhotonStats
Física en forma cerrada y ajustes expuestos por HTTP, sin estado
"""

from datetime import datetime

import uvicorn
from fastapi import FastAPI, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.api.api import api_router
from app.core.config import get_settings
from app.core.errors import ModelNotFoundError, PhotonStatsError
from app.core.logging import get_logger, setup_logging

setup_logging()
logger = get_logger(__name__)

settings = get_settings()

# Crear la instancia de la aplicación
app = FastAPI(
    title=settings.PROJECT_NAME,
    description=settings.DESCRIPTION,
    version=settings.VERSION,
)

# Configurar CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Incluir router principal de la API
app.include_router(api_router)


@app.exception_handler(PhotonStatsError)
async def photonstats_error_handler(request: Request, exc: PhotonStatsError) -> JSONResponse:
    """Errores de dominio no capturados en los endpoints"""
    code = (
        status.HTTP_404_NOT_FOUND
        if isinstance(exc, ModelNotFoundError)
        else status.HTTP_400_BAD_REQUEST
    )
    logger.warning("%s en %s: %s", type(exc).__name__, request.url.path, exc.message)
    return JSONResponse(status_code=code, content={"detail": exc.message})


@app.get("/api", tags=["Health"])
async def root() -> dict[str, str]:
    """Endpoint de bienvenida y verificación de estado de API"""
    return {
        "message": f"{settings.PROJECT_NAME} - {settings.DESCRIPTION}",
        "version": settings.VERSION,
        "status": "operational",
        "docs": "/docs",
        "health": "/health",
    }


@app.get("/health", tags=["Health"])
async def health_check() -> dict[str, str]:
    """Endpoint de verificación de salud del sistema"""
    current = get_settings()
    return {
        "status": "healthy",
        "version": current.VERSION,
        "environment": "development" if current.DEBUG else "production",
        "timestamp": datetime.now().isoformat(),
    }


if __name__ == "__main__":
    uvicorn.run(
        "app.main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=settings.DEBUG,
        log_level=settings.LOG_LEVEL.lower(),
    )
