"""
Endpoints de ajuste: modelos registrados, saturación y envolvente de visibilidad
"""

from typing import Any

from fastapi import APIRouter, HTTPException, status

from app.core.errors import ModelNotFoundError, PhotonStatsError
from app.schemas.api import (
    EnvelopeFitRequest,
    FitResponse,
    ModelInfo,
    SaturationFitRequest,
)
from app.schemas.interferometry import VisibilityTrace
from app.services import interferometry, photophys
from app.services.models import get_registry
from app.storage.results import fit_to_dict, to_plain

MODEL_NOT_FOUND = "Modelo no registrado"

router = APIRouter()


@router.get("/models", response_model=list[str])
def list_models() -> list[str]:
    """
    Identificadores de los modelos registrados
    """
    return get_registry().ids()


@router.get("/models/{model_id}", response_model=ModelInfo)
def read_model(model_id: str) -> ModelInfo:
    """
    Parámetros y unidades de un modelo
    """
    try:
        spec = get_registry().get(model_id)
    except ModelNotFoundError as exc:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND, detail=MODEL_NOT_FOUND
        ) from exc
    return ModelInfo(
        id=spec.id,
        param_names=list(spec.param_names),
        units=list(spec.units),
        repeating=spec.repeating,
        analytic_jacobian=spec.jacobian is not None,
    )


@router.post("/saturation", response_model=FitResponse)
def fit_saturation(request: SaturationFitRequest) -> Any:
    """
    Ajuste I(P) = I_inf/(1 + P_sat/P) de un barrido de potencia
    """
    try:
        result = photophys.fit_saturation(request.power, request.intensity, request.sigma)
    except PhotonStatsError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=exc.message) from exc
    return to_plain(fit_to_dict(result))


@router.post("/envelope", response_model=FitResponse)
def fit_envelope(request: EnvelopeFitRequest) -> Any:
    """
    Ajuste de la envolvente de visibilidad (exponencial, gaussiana o automática)
    """
    try:
        trace = VisibilityTrace(delays=request.delays, visibility=request.visibility)
    except ValueError as exc:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc)
        ) from exc
    try:
        result = interferometry.fit_envelope(trace, request.shape)
    except PhotonStatsError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=exc.message) from exc
    return to_plain(fit_to_dict(result))
