"""
Trajectory direction, intersection angle, speed and acceleration of tracks.

Speeds are in pixels/second and accelerations in pixels/second². The
scaled speed factor is a depth heuristic based on box height, not a
metric correction.
"""

import math
from typing import Dict, Optional, Sequence, Tuple, TypeVar

import structlog

from app.config import KinematicsConfig
from app.core import DomainError
from app.models import DirectionVector, Point2, Track, TrackKinematics


logger = structlog.get_logger(__name__)

T = TypeVar("T")


def magnitude(vector: Sequence[float]) -> float:
    """Euclidean length of a 2D vector."""
    return math.hypot(vector[0], vector[1])


def frame_interval(fps: float) -> float:
    """Seconds per frame (tau)."""
    if fps <= 0:
        raise DomainError(f"fps must be positive, got {fps}")
    return 1.0 / fps


def reference_entry(history: Sequence[Tuple[int, T]], frame: int, interval: int) -> Optional[Tuple[int, T]]:
    """Entry to measure against at ``frame``.

    The latest entry at or before ``frame - interval``; if the history is
    younger than that, the earliest entry before ``frame``.
    """
    target = frame - interval
    chosen: Optional[Tuple[int, T]] = None
    for entry in history:
        if entry[0] <= target:
            chosen = entry
        else:
            break
    if chosen is not None:
        return chosen
    if history and history[0][0] < frame:
        return history[0]
    return None


def direction_vector(
    history: Sequence[Tuple[int, Point2]],
    interval: int,
    min_magnitude: float,
) -> Optional[DirectionVector]:
    """Normalized displacement over the last interval, or None when too small."""
    if len(history) < 2:
        return None
    frame, current = history[-1]
    reference = reference_entry(history, frame, interval)
    if reference is None:
        return None
    dx = current.x - reference[1].x
    dy = current.y - reference[1].y
    length = magnitude((dx, dy))
    if length <= min_magnitude or length == 0.0:
        return None
    return DirectionVector(dx / length, dy / length, frame)


def angle_between(u: DirectionVector, v: DirectionVector) -> float:
    """Angle of intersection in degrees, within [0, 180]."""
    dot = u.i * v.i + u.j * v.j
    return math.degrees(math.acos(max(-1.0, min(1.0, dot))))


def _elapsed(fps: float, interval: float) -> float:
    if interval <= 0:
        raise DomainError(f"interval must be positive, got {interval}")
    return frame_interval(fps) * interval


def gross_speed(c1: Point2, c2: Point2, fps: float, interval: float) -> float:
    """Displacement magnitude over ``interval`` frames, per second."""
    return magnitude((c2.x - c1.x, c2.y - c1.y)) / _elapsed(fps, interval)


def scaled_speed(s_g: float, frame_height: float, box_height: float) -> float:
    """Gross speed scaled up for vehicles with short boxes (far from the camera)."""
    if box_height <= 0:
        raise DomainError(f"box height must be positive, got {box_height}")
    if box_height > frame_height:
        logger.warning("box_taller_than_frame", box_height=box_height, frame_height=frame_height)
        box_height = frame_height
    return ((frame_height - box_height) / frame_height + 1.0) * s_g


def acceleration(s_s1: float, s_s2: float, fps: float, interval: float) -> float:
    """Signed change in scaled speed per second."""
    return (s_s2 - s_s1) / _elapsed(fps, interval)


def direction_at(kinematics: TrackKinematics, frame: int, max_age: int) -> Optional[DirectionVector]:
    """Latest direction measured in [frame - max_age, frame]."""
    for source_frame, direction in reversed(kinematics.direction_history):
        if source_frame > frame:
            continue
        if source_frame < frame - max_age:
            return None
        return direction
    return None


class KinematicsTracker:
    """Keeps TrackKinematics for every live track of one stream."""

    def __init__(self, config: Optional[KinematicsConfig] = None):
        self.config = config or KinematicsConfig()
        self._tracks: Dict[int, TrackKinematics] = {}

    def get(self, track_id: int) -> Optional[TrackKinematics]:
        return self._tracks.get(track_id)

    def remove(self, track_id: int) -> None:
        self._tracks.pop(track_id, None)

    def update(self, track: Track, frame_height: float) -> TrackKinematics:
        """Measure a track that was observed in its latest frame."""
        cfg = self.config
        tk = self._tracks.get(track.id)
        if tk is None:
            tk = TrackKinematics(track_id=track.id, history_len=cfg.history_len)
            self._tracks[track.id] = tk

        frame, current = track.centroid_history[-1]
        reference = reference_entry(track.centroid_history, frame, cfg.interval)
        if reference is None:
            return tk
        ref_frame, ref_centroid = reference
        elapsed = frame - ref_frame

        direction = direction_vector(track.centroid_history, cfg.interval, cfg.min_traj_magnitude)
        if direction is not None:
            tk.direction = direction
            tk.direction_history.append((frame, direction))

        tk.gross_speed = gross_speed(ref_centroid, current, cfg.fps, elapsed)
        tk.scaled_speed = scaled_speed(tk.gross_speed, frame_height, track.last_bbox.h)

        previous = reference_entry(tk.speed_history, frame, cfg.interval)
        tk.speed_history.append((frame, tk.scaled_speed))
        if previous is not None:
            tk.acceleration = acceleration(previous[1], tk.scaled_speed, cfg.fps, frame - previous[0])
            tk.acceleration_history.append((frame, tk.acceleration))
        return tk
