"""
Schemas de Pydantic para los tipos de dominio y la API
"""

from app.schemas.coherence import CoherenceRates, SaturationModel
from app.schemas.emitter import (
    DetectorModel,
    DriveMode,
    EmitterParams,
    PulseTrain,
    SimConfig,
    SimulationSetup,
    SplitterMode,
)
from app.schemas.fit import FitParameter, FitProblem, FitResult
from app.schemas.histogram import G2Curve, G2Model, Histogram, LifetimeModel, PulsedG2
from app.schemas.interferometry import (
    EnvelopeModel,
    EnvelopeShape,
    Interferogram,
    ShapeSelection,
    VisibilityTrace,
)
from app.schemas.manifest import RunManifest
from app.schemas.spectrum import (
    ComponentKind,
    FilterSpec,
    LorentzianComponent,
    ParametricSpectrum,
    SampledSpectrum,
    SpectrumFit,
)
from app.schemas.tags import SYNC_CHANNEL, TagStream

__all__ = [
    "SYNC_CHANNEL",
    "CoherenceRates",
    "ComponentKind",
    "DetectorModel",
    "DriveMode",
    "EmitterParams",
    "EnvelopeModel",
    "EnvelopeShape",
    "FilterSpec",
    "FitParameter",
    "FitProblem",
    "FitResult",
    "G2Curve",
    "G2Model",
    "Histogram",
    "Interferogram",
    "LifetimeModel",
    "LorentzianComponent",
    "ParametricSpectrum",
    "PulseTrain",
    "PulsedG2",
    "RunManifest",
    "SampledSpectrum",
    "SaturationModel",
    "ShapeSelection",
    "SimConfig",
    "SimulationSetup",
    "SpectrumFit",
    "SplitterMode",
    "TagStream",
    "VisibilityTrace",
]
