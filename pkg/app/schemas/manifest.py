"""
Manifiesto de ejecución que acompaña a cada salida de la línea de comandos
"""

from typing import Any

from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """Registro reproducible de una ejecución"""

    command: str
    config: dict[str, Any] = Field(default_factory=dict)
    seed: int | None = None
    inputs: list[str] = Field(default_factory=list)
    outputs: list[str] = Field(default_factory=list)
    tool_version: str
    wall_time_s: float = Field(..., ge=0)
