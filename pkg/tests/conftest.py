"""
Shared fixtures for the test suite.
"""

import json
from typing import Callable, List, Sequence, Tuple

import numpy as np
import pytest

from app.config import (
    AnomalyConfig,
    DetectionConfig,
    EngineConfig,
    EvaluationConfig,
    KinematicsConfig,
    TrackerConfig,
)
from app.models import BoundingBox, Detection, DetectionFrame


Box = Tuple[float, float, float, float]


@pytest.fixture
def engine_config() -> EngineConfig:
    """Embedded defaults, independent of the environment."""
    return EngineConfig(
        detection=DetectionConfig(),
        tracker=TrackerConfig(),
        kinematics=KinematicsConfig(),
        anomaly=AnomalyConfig(),
        evaluation=EvaluationConfig(),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def make_frame() -> Callable[..., DetectionFrame]:
    """Build a DetectionFrame from center-form boxes."""

    def _make(index: int, boxes: Sequence[Box], width: int = 1280, height: int = 720, class_id: int = 3, score: float = 0.9):
        detections = tuple(Detection(class_id, score, BoundingBox(*box)) for box in boxes)
        return DetectionFrame(index, width, height, detections)

    return _make


@pytest.fixture
def make_line() -> Callable[..., str]:
    """Build one wire-format line from center-form boxes."""

    def _make(index: int, boxes: Sequence[Box], width: int = 1280, height: int = 720, class_id: int = 3, score: float = 0.9):
        det = [{"cls": class_id, "score": score, "box": list(box)} for box in boxes]
        return json.dumps({"frame": index, "w": width, "h": height, "det": det})

    return _make


@pytest.fixture
def linear_stream(make_line) -> Callable[..., List[str]]:
    """Stream of vehicles moving at constant velocity: [(start, velocity, size)]."""

    def _make(vehicles, frames: int) -> List[str]:
        lines = []
        for t in range(frames):
            boxes = [
                (start[0] + velocity[0] * t, start[1] + velocity[1] * t, size[0], size[1])
                for start, velocity, size in vehicles
            ]
            lines.append(make_line(t, boxes))
        return lines

    return _make
