"""
Endpoints de física en forma cerrada: tasas de coherencia, anchura de línea,
saturación y eficiencia fuente-detector
"""

from fastapi import APIRouter, HTTPException, Query, status

from app.core.errors import PhysicsDomainError
from app.schemas.api import (
    CoherenceRequest,
    CoherenceResponse,
    LinewidthResponse,
    SaturationIntensityRequest,
    SaturationIntensityResponse,
    SourceEfficiencyRequest,
    SourceEfficiencyResponse,
)
from app.schemas.coherence import SaturationModel
from app.services import photophys

router = APIRouter()


@router.post("/coherence", response_model=CoherenceResponse)
def coherence(request: CoherenceRequest) -> CoherenceResponse:
    """
    Tasas de coherencia a partir de T1 y T2*
    """
    try:
        rates = photophys.coherence_from_times(request.T1, request.T2_star)
    except PhysicsDomainError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=exc.message) from exc
    return CoherenceResponse(
        T1=rates.T1,
        T2_star=rates.T2_star,
        gamma=rates.gamma,
        gamma_star=rates.gamma_star,
        Gamma_total=rates.Gamma_total,
        T2=rates.T2,
        linewidth_hz=rates.linewidth_hz,
        indistinguishability=photophys.indistinguishability(rates),
    )


@router.get("/fourier-linewidth", response_model=LinewidthResponse)
def fourier_linewidth(
    T1: float = Query(..., gt=0, description="Tiempo de vida (s)"),
) -> LinewidthResponse:
    """
    Anchura de línea limitada por Fourier
    """
    return LinewidthResponse(T1=T1, linewidth_hz=photophys.fourier_limited_linewidth(T1))


@router.post("/saturation-intensity", response_model=SaturationIntensityResponse)
def saturation_intensity(request: SaturationIntensityRequest) -> SaturationIntensityResponse:
    """
    Intensidad del modelo de saturación a una potencia dada
    """
    model = SaturationModel(I_inf=request.I_inf, P_sat=request.P_sat)
    try:
        value = photophys.saturation_intensity(model, request.P)
    except PhysicsDomainError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=exc.message) from exc
    return SaturationIntensityResponse(P=request.P, intensity_hz=float(value))


@router.post("/source-efficiency", response_model=SourceEfficiencyResponse)
def source_efficiency(request: SourceEfficiencyRequest) -> SourceEfficiencyResponse:
    """
    Eficiencia fuente-detector (continua con T1, pulsada con frecuencia de repetición)
    """
    if request.T1 is not None:
        return SourceEfficiencyResponse(
            convention="cw",
            efficiency=photophys.source_to_detector_efficiency(request.I_inf, request.T1),
        )
    assert request.rep_rate is not None
    return SourceEfficiencyResponse(
        convention="pulsed",
        efficiency=photophys.pulsed_source_to_detector_efficiency(
            request.I_inf, request.rep_rate
        ),
    )
