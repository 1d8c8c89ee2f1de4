"""
Schema del flujo de etiquetas temporales (canal, instante en ticks)
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Canal reservado para los pulsos de sincronismo del láser
SYNC_CHANNEL = 255


class TagStream(BaseModel):
    """
    Eventos de detección ordenados por instante.

    `channels` es el número de canales de detector; el canal de sincronismo
    (255) puede aparecer además de ellos.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    resolution: float = Field(..., gt=0, description="Segundos por tick")
    channels: int = Field(..., ge=0, le=255)
    channel: np.ndarray
    timestamp: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _as_arrays(cls, data: dict[str, object]) -> dict[str, object]:
        if isinstance(data, dict):
            data = dict(data)
            data["channel"] = np.ascontiguousarray(data.get("channel"), dtype=np.uint8)
            data["timestamp"] = np.ascontiguousarray(
                data.get("timestamp"), dtype=np.int64
            )
        return data

    @model_validator(mode="after")
    def _sorted(self) -> "TagStream":
        if self.channel.shape != self.timestamp.shape or self.channel.ndim != 1:
            raise ValueError("Canales e instantes deben tener la misma longitud")
        if self.timestamp.size and np.any(np.diff(self.timestamp) < 0):
            raise ValueError("Los instantes deben ser no decrecientes")
        if self.timestamp.size and self.timestamp[0] < 0:
            raise ValueError("Los instantes deben ser no negativos")
        return self

    def __len__(self) -> int:
        return int(self.timestamp.size)

    @classmethod
    def empty(cls, resolution: float, channels: int) -> "TagStream":
        return cls(
            resolution=resolution,
            channels=channels,
            channel=np.empty(0, np.uint8),
            timestamp=np.empty(0, np.int64),
        )

    def present_channels(self) -> set[int]:
        return {int(c) for c in np.unique(self.channel)}

    def ticks_of(self, channel: int) -> np.ndarray:
        """Instantes (ticks) de un canal, en orden"""
        return self.timestamp[self.channel == channel]

    def times_of(self, channel: int) -> np.ndarray:
        """Instantes (s) de un canal"""
        return self.ticks_of(channel).astype(float) * self.resolution

    def span(self) -> float:
        """Duración cubierta por el flujo (s)"""
        if self.timestamp.size == 0:
            return 0.0
        return float(self.timestamp[-1] - self.timestamp[0]) * self.resolution
