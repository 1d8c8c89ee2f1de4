"""
PhotonStats - Estadística de fotones para emisores de estado sólido
Simulación Monte Carlo, correlación de etiquetas temporales, interferometría y ajustes

Línea de comandos `photonstats` y API FastAPI sobre los mismos servicios.
"""

__version__ = "1.0.0"
__author__ = "Equipo de Desarrollo Profesional"
