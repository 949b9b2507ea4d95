"""
Data models for the accident detection engine.
Defines detections, tracks, kinematics, anomaly scores and evaluation results.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Deque, Dict, List, Optional, Tuple


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in center form (pixels)."""
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"box coordinates must be finite: {self}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box width and height must be positive: {self}")

    @classmethod
    def from_corner(cls, left: float, top: float, w: float, h: float) -> "BoundingBox":
        """Build from top-left corner plus size."""
        return cls(left + w / 2.0, top + h / 2.0, w, h)

    @classmethod
    def from_extent(cls, x1: float, y1: float, x2: float, y2: float) -> "BoundingBox":
        """Build from two opposite corners."""
        return cls((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        """(x1, y1, x2, y2) corners."""
        return (
            self.x - self.w / 2.0,
            self.y - self.h / 2.0,
            self.x + self.w / 2.0,
            self.y + self.h / 2.0,
        )

    def clamped(self, width: float, height: float) -> Optional["BoundingBox"]:
        """Clip to [0,width]x[0,height]; None when nothing of the box is left."""
        x1, y1, x2, y2 = self.extent
        x1, x2 = max(0.0, x1), min(float(width), x2)
        y1, y2 = max(0.0, y1), min(float(height), y2)
        if x2 <= x1 or y2 <= y1:
            return None
        if (x1, y1, x2, y2) == self.extent:
            return self
        return BoundingBox.from_extent(x1, y1, x2, y2)


@dataclass(frozen=True)
class Detection:
    """One detector output: class, confidence and box."""
    class_id: int
    score: float
    bbox: BoundingBox


@dataclass(frozen=True)
class DetectionFrame:
    """All detections of one video frame."""
    frame_index: int
    width: int
    height: int
    detections: Tuple[Detection, ...] = ()


@dataclass(frozen=True)
class Point2:
    """A centroid in pixel coordinates."""
    x: float
    y: float


class TrackStatus(Enum):
    """Lifecycle state of a track."""
    ACTIVE = "active"
    DEREGISTERED = "deregistered"


@dataclass
class Track:
    """A persistent vehicle identity."""
    id: int
    history_len: int = 30
    centroid_history: Deque[Tuple[int, Point2]] = field(default_factory=deque)
    bbox_history: Deque[Tuple[int, BoundingBox]] = field(default_factory=deque)
    missing_frames: int = 0
    state: TrackStatus = TrackStatus.ACTIVE

    def __post_init__(self):
        self.centroid_history = deque(self.centroid_history, maxlen=self.history_len)
        self.bbox_history = deque(self.bbox_history, maxlen=self.history_len)

    def observe(self, frame_index: int, bbox: BoundingBox, centroid: Point2) -> None:
        self.centroid_history.append((frame_index, centroid))
        self.bbox_history.append((frame_index, bbox))
        self.missing_frames = 0

    @property
    def last_centroid(self) -> Point2:
        return self.centroid_history[-1][1]

    @property
    def last_bbox(self) -> BoundingBox:
        return self.bbox_history[-1][1]

    @property
    def last_seen(self) -> int:
        return self.centroid_history[-1][0]


@dataclass(frozen=True)
class DirectionVector:
    """Unit direction of motion, measured at ``source_frame``."""
    i: float
    j: float
    source_frame: int


@dataclass
class TrackKinematics:
    """Motion features of one track."""
    track_id: int
    history_len: int = 90
    direction: Optional[DirectionVector] = None
    gross_speed: float = 0.0
    scaled_speed: float = 0.0
    acceleration: float = 0.0
    direction_history: Deque[Tuple[int, DirectionVector]] = field(default_factory=deque)
    speed_history: Deque[Tuple[int, float]] = field(default_factory=deque)
    acceleration_history: Deque[Tuple[int, float]] = field(default_factory=deque)

    def __post_init__(self):
        self.direction_history = deque(self.direction_history, maxlen=self.history_len)
        self.speed_history = deque(self.speed_history, maxlen=self.history_len)
        self.acceleration_history = deque(self.acceleration_history, maxlen=self.history_len)


@dataclass(frozen=True)
class OverlapEvent:
    """A track pair whose boxes overlap at ``frame_index``."""
    frame_index: int
    track_a: int
    track_b: int
    onset: int

    def __post_init__(self):
        if not self.track_a < self.track_b:
            raise ValueError("overlap pairs are ordered with track_a < track_b")


@dataclass(frozen=True)
class AnomalyScores:
    """Acceleration, trajectory and angle-change anomalies plus their combination."""
    alpha: float
    beta: float
    gamma: float
    combined: float


@dataclass(frozen=True)
class AccidentEvent:
    """A detected collision between two tracks."""
    frame_index: int
    track_a: int
    track_b: int
    scores: AnomalyScores
    overlap_onset: int

    @property
    def pair(self) -> Tuple[int, int]:
        return (self.track_a, self.track_b)

    def to_record(self) -> Dict[str, Any]:
        """Wire representation, one JSON object per event."""
        return {
            "frame": self.frame_index,
            "pair": [self.track_a, self.track_b],
            "alpha": round(self.scores.alpha, 6),
            "beta": round(self.scores.beta, 6),
            "gamma": round(self.scores.gamma, 6),
            "score": round(self.scores.combined, 6),
            "onset": self.overlap_onset,
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "AccidentEvent":
        a, b = sorted(int(v) for v in record["pair"])
        return cls(
            frame_index=int(record["frame"]),
            track_a=a,
            track_b=b,
            scores=AnomalyScores(
                alpha=float(record.get("alpha", 0.0)),
                beta=float(record.get("beta", 0.0)),
                gamma=float(record.get("gamma", 0.0)),
                combined=float(record["score"]),
            ),
            overlap_onset=int(record.get("onset", record["frame"])),
        )


@dataclass(frozen=True)
class CollisionLabel:
    """Ground-truth collision: frame plus canonical vehicle pair."""
    frame_index: int
    track_a: int
    track_b: int

    @property
    def pair(self) -> Tuple[int, int]:
        return (self.track_a, self.track_b)


@dataclass
class MatchResult:
    """Outcome of matching events against ground truth."""
    true_positives: List[Tuple[AccidentEvent, CollisionLabel]] = field(default_factory=list)
    false_positives: List[AccidentEvent] = field(default_factory=list)
    misses: List[CollisionLabel] = field(default_factory=list)

    @property
    def counts(self) -> Tuple[int, int, int]:
        return len(self.true_positives), len(self.false_positives), len(self.misses)

    @property
    def latencies(self) -> List[int]:
        return [event.frame_index - label.frame_index for event, label in self.true_positives]


@dataclass
class ScenarioResult:
    """Per-scenario line of an evaluation report."""
    name: str
    total_accidents: int
    detected_accidents: int
    false_alarms: int
    patterns: int
    events: int
    latencies: List[int] = field(default_factory=list)


@dataclass
class EvaluationReport:
    """Detection rate / false alarm rate summary."""
    total_accidents: int = 0
    detected_accidents: int = 0
    detection_rate: Optional[float] = None
    total_patterns: int = 0
    false_alarms: int = 0
    false_alarm_rate: Optional[float] = None
    scenarios: List[ScenarioResult] = field(default_factory=list)
    latency_min: Optional[int] = None
    latency_mean: Optional[float] = None
    latency_max: Optional[int] = None

    def to_record(self) -> Dict[str, Any]:
        return {
            "total_accidents": self.total_accidents,
            "detected_accidents": self.detected_accidents,
            "detection_rate": self.detection_rate,
            "total_patterns": self.total_patterns,
            "false_alarms": self.false_alarms,
            "false_alarm_rate": self.false_alarm_rate,
            "latency": {
                "min": self.latency_min,
                "mean": self.latency_mean,
                "max": self.latency_max,
            },
            "scenarios": [
                {
                    "name": s.name,
                    "total_accidents": s.total_accidents,
                    "detected_accidents": s.detected_accidents,
                    "false_alarms": s.false_alarms,
                    "patterns": s.patterns,
                    "events": s.events,
                    "latencies": list(s.latencies),
                }
                for s in self.scenarios
            ],
        }
