"""
Declarative scenario files for the synthetic stream generator.
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class MotionPhase(BaseModel):
    """A scripted change of motion starting at ``start_frame``.

    linear: keep the current velocity (no-op marker)
    stop:   brake with ``decel`` px/frame² until standstill
    turn:   rotate heading by ``rate`` deg/frame for ``frames`` frames
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["linear", "stop", "turn"]
    start_frame: int = Field(ge=0)
    decel: float = Field(default=0.0, ge=0)
    rate: float = 0.0
    frames: int = Field(default=0, ge=0)


class PostImpact(BaseModel):
    """What a vehicle does once its scripted collision happens."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    speed: Optional[float] = Field(default=None, ge=0)
    heading_change: float = 0.0
    decel: float = Field(default=0.0, ge=0)


class VehicleScript(BaseModel):
    """Scripted motion and detection quality of one vehicle."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    position: Tuple[float, float]
    velocity: Tuple[float, float] = (0.0, 0.0)
    size: Tuple[float, float] = (80.0, 40.0)
    heading: Optional[float] = None
    class_id: int = 3
    score: float = Field(default=0.95, ge=0, le=1)
    spawn_frame: int = Field(default=0, ge=0)
    phases: List[MotionPhase] = Field(default_factory=list)
    post_impact: PostImpact = PostImpact()
    noise_sigma: float = Field(default=0.0, ge=0)
    dropout: float = Field(default=0.0, ge=0, lt=1)

    @field_validator("size")
    @classmethod
    def _positive_size(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if value[0] <= 0 or value[1] <= 0:
            raise ValueError("box size must be positive")
        return value


class ScenarioSpec(BaseModel):
    """A complete synthetic scenario."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    frame_count: int = Field(ge=1)
    fps: float = Field(default=30.0, gt=0)
    width: int = Field(default=1280, gt=0)
    height: int = Field(default=720, gt=0)
    vehicles: List[VehicleScript] = Field(default_factory=list)
    collisions: List[Tuple[int, int]] = Field(default_factory=list)
    seed: int = 0
    tier: Literal["clean", "light", "heavy"] = "clean"

    @model_validator(mode="after")
    def _collision_pairs_exist(self) -> "ScenarioSpec":
        for a, b in self.collisions:
            if a == b or not (0 <= a < len(self.vehicles) and 0 <= b < len(self.vehicles)):
                raise ValueError(f"collision pair ({a}, {b}) does not name two vehicles")
        return self

    @property
    def is_positive(self) -> bool:
        return bool(self.collisions)
