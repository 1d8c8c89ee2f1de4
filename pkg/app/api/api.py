"""
Router principal de la API que incluye todos los endpoints
"""

from fastapi import APIRouter

from app.api.endpoints import fits, interferometry, photophys

api_router = APIRouter(prefix="/api/v1")

api_router.include_router(photophys.router, prefix="/photophys", tags=["Fotofísica"])
api_router.include_router(fits.router, prefix="/fits", tags=["Ajustes"])
api_router.include_router(
    interferometry.router, prefix="/interferometry", tags=["Interferometría"]
)
