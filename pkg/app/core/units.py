"""
Constantes físicas y conversiones de unidades.

Unidades canónicas internas: segundos, hercios, vatios, electronvoltios.
"""

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

# CODATA 2018
PLANCK_EV_S = 4.135667696e-15

# Gaussiana: FWHM = 2·sqrt(2·ln 2)·sigma
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

PS = 1e-12
NS = 1e-9
US = 1e-6
FS = 1e-15
MW = 1e-3
MEV = 1e-3


def energy_to_frequency(energy_ev: ArrayLike) -> NDArray[np.float64]:
    """Energía (eV) a frecuencia (Hz), E = h·ν"""
    return np.asarray(energy_ev, dtype=float) / PLANCK_EV_S


def frequency_to_energy(frequency_hz: ArrayLike) -> NDArray[np.float64]:
    """Frecuencia (Hz) a energía (eV)"""
    return np.asarray(frequency_hz, dtype=float) * PLANCK_EV_S


def angular_frequency(energy_ev: float) -> float:
    """Frecuencia angular ω = 2πE/h (rad/s)"""
    return 2.0 * math.pi * energy_ev / PLANCK_EV_S


def fwhm_to_sigma(fwhm: float) -> float:
    """Anchura a media altura de una gaussiana a desviación típica"""
    return fwhm * FWHM_TO_SIGMA
