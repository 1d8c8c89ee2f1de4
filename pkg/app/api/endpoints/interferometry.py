"""
Endpoints del interferómetro virtual
"""

from fastapi import APIRouter, HTTPException, status

from app.core.errors import PhysicsDomainError
from app.core.units import angular_frequency
from app.schemas.api import (
    InterferogramResponse,
    LorentzianInterferogramRequest,
    ScanPlanRequest,
    ScanPlanResponse,
)
from app.services import interferometry, photophys

router = APIRouter()


@router.post("/lorentzian", response_model=InterferogramResponse)
def lorentzian_interferogram(
    request: LorentzianInterferogramRequest,
) -> InterferogramResponse:
    """
    Interferograma de una línea lorentziana
    """
    try:
        rates = photophys.coherence_from_times(request.T1, request.T2_star)
        ig = interferometry.michelson_lorentzian(
            rates, angular_frequency(request.energy_ev), request.V0, request.delays
        )
    except PhysicsDomainError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=exc.message) from exc
    return InterferogramResponse(
        delays=ig.delays.tolist(), intensity=ig.intensity.tolist(), V0=ig.V0
    )


@router.post("/scan-plan", response_model=ScanPlanResponse)
def scan_plan(request: ScanPlanRequest) -> ScanPlanResponse:
    """
    Plan de barrido de retardos en dos niveles (piezo fino, motor grueso)
    """
    try:
        delays = interferometry.delay_scan_plan(
            request.fine_window,
            (request.coarse_min, request.coarse_max),
            request.points_per_window,
            request.coarse_step,
        )
    except PhysicsDomainError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=exc.message) from exc
    return ScanPlanResponse(
        windows=-(-delays.size // request.points_per_window),
        spacing=request.fine_window / request.points_per_window,
        delays=delays.tolist(),
    )
