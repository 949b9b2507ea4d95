"""
Collision detection: box overlap, the three anomaly parameters and the
decision function.

An overlap episode is scored once ``post_window`` frames after its onset,
so every event is reported with that fixed latency, also when one of its
tracks deregisters earlier. Episodes still waiting when the stream ends are
scored at the last frame and may carry a shorter latency.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.config import AnomalyConfig
from app.models import (
    AccidentEvent,
    AnomalyScores,
    BoundingBox,
    DetectionFrame,
    DirectionVector,
    OverlapEvent,
    Point2,
    TrackKinematics,
)
from app.services.kinematics import KinematicsTracker, angle_between, direction_at
from app.services.tracker import StepResult, TrackerState


logger = structlog.get_logger(__name__)

PARALLEL_EPS = 1e-6


def _clamp01(value: float) -> float:
    return float(min(1.0, max(0.0, value)))


def boxes_overlap(a: BoundingBox, b: BoundingBox, summed_y: bool = False) -> bool:
    """True iff the box interiors intersect on both axes. Touching edges do not count.

    ``summed_y`` compares a.y + b.y in the vertical clause (strict mode).
    """
    dy = abs(a.y + b.y) if summed_y else abs(a.y - b.y)
    return (2 * abs(a.x - b.x) < a.w + b.w) and (2 * dy < a.h + b.h)


def acceleration_anomaly(history: Sequence[Tuple[int, float]], onset: int, cfg: AnomalyConfig) -> float:
    """Peak post-onset acceleration against the pre-onset average, normalized to [0, 1]."""
    pre = [a for f, a in history if onset - cfg.pre_window <= f < onset]
    post = [a for f, a in history if onset <= f <= onset + cfg.post_window]
    if len(pre) < 2 or len(post) < 2:
        return 0.0
    peak = max(post, key=abs)
    delta = peak - float(np.mean(pre))
    return _clamp01(abs(delta) / cfg.accel_norm)


def intersection_distance(c1: Point2, u: DirectionVector, c2: Point2, v: DirectionVector) -> float:
    """Distance from the trajectories' intersection point to the midpoint of the centroids."""
    cross = u.i * v.j - u.j * v.i
    if abs(cross) < PARALLEL_EPS:
        return math.inf
    wx, wy = c2.x - c1.x, c2.y - c1.y
    s = (wx * v.j - wy * v.i) / cross
    px, py = c1.x + s * u.i, c1.y + s * u.j
    mx, my = (c1.x + c2.x) / 2.0, (c1.y + c2.y) / 2.0
    return math.hypot(px - mx, py - my)


def trajectory_anomaly(theta: Optional[float], intersection_dist: Optional[float], cfg: AnomalyConfig) -> float:
    """Anomaly from the angle between two trajectories.

    Inside (theta_low, theta_high) the value is sin(theta). Outside the band it
    is attenuated by how far the trajectories meet from the vehicles.
    """
    if theta is None:
        return 0.0
    interior = math.sin(math.radians(theta))
    if cfg.theta_low < theta < cfg.theta_high:
        return _clamp01(interior)
    if intersection_dist is None or math.isinf(intersection_dist):
        return 0.0
    return _clamp01(interior * math.exp(-intersection_dist / cfg.d0))


def angle_change_anomaly(
    direction_history: Sequence[Tuple[int, DirectionVector]],
    onset: int,
    cfg: AnomalyConfig,
    interval: int,
) -> float:
    """Largest heading rotation after onset relative to the heading at onset."""
    before: Optional[DirectionVector] = None
    for f, direction in direction_history:
        if onset - interval <= f <= onset:
            before = direction
    if before is None:
        return 0.0
    after = [d for f, d in direction_history if onset < f <= onset + cfg.post_window]
    if not after:
        return 0.0
    rotation = max(angle_between(before, d) for d in after)
    return _clamp01(rotation / cfg.gamma_norm)


def combine(alpha: float, beta: float, gamma: float, weights: Tuple[float, float, float]) -> float:
    """Convex combination of the three anomalies."""
    w_alpha, w_beta, w_gamma = weights
    return _clamp01(w_alpha * alpha + w_beta * beta + w_gamma * gamma)


@dataclass
class _PendingScore:
    due: int
    overlap: OverlapEvent
    centroid_a: Point2
    centroid_b: Point2
    # kinematics of tracks deregistered before the episode was due
    retired: Dict[int, TrackKinematics] = field(default_factory=dict)

    def kinematics_for(self, track_id: int, kinematics: KinematicsTracker) -> Optional[TrackKinematics]:
        live = kinematics.get(track_id)
        return live if live is not None else self.retired.get(track_id)


class CollisionEngine:
    """Per-stream overlap episodes, scoring and event emission."""

    def __init__(self, config: Optional[AnomalyConfig] = None):
        self.config = config or AnomalyConfig()
        self.open_episodes: Dict[Tuple[int, int], int] = {}
        self.pending: List[_PendingScore] = []
        self.last_event: Dict[Tuple[int, int], int] = {}
        self.patterns_scored = 0
        self.events_emitted = 0
        self.suppressed = 0

    def detect_overlaps(self, tracker_state: TrackerState, visible: Sequence[int], frame_index: int) -> List[OverlapEvent]:
        """Overlaps among tracks seen in this frame; opens and closes episodes."""
        overlaps: List[OverlapEvent] = []
        for a, b in combinations(sorted(visible), 2):
            pair = (a, b)
            box_a = tracker_state.tracks[a].last_bbox
            box_b = tracker_state.tracks[b].last_bbox
            if boxes_overlap(box_a, box_b, self.config.strict_paper_mode):
                onset = self.open_episodes.setdefault(pair, frame_index)
                overlap = OverlapEvent(frame_index, a, b, onset)
                overlaps.append(overlap)
                if onset == frame_index:
                    self.pending.append(
                        _PendingScore(
                            due=frame_index + self.config.post_window,
                            overlap=overlap,
                            centroid_a=tracker_state.tracks[a].last_centroid,
                            centroid_b=tracker_state.tracks[b].last_centroid,
                        )
                    )
                    logger.debug("overlap_onset", pair=pair, frame=frame_index)
            else:
                self.open_episodes.pop(pair, None)
        return overlaps

    def score(self, pending: _PendingScore, kinematics: KinematicsTracker) -> AnomalyScores:
        """Compute the anomaly triple for one overlap episode."""
        cfg = self.config
        interval = kinematics.config.interval
        onset = pending.overlap.onset
        tk_a = pending.kinematics_for(pending.overlap.track_a, kinematics)
        tk_b = pending.kinematics_for(pending.overlap.track_b, kinematics)
        present = [tk for tk in (tk_a, tk_b) if tk is not None]

        alpha = max((acceleration_anomaly(tk.acceleration_history, onset, cfg) for tk in present), default=0.0)

        theta: Optional[float] = None
        distance: Optional[float] = None
        if tk_a is not None and tk_b is not None:
            u = direction_at(tk_a, onset, interval)
            v = direction_at(tk_b, onset, interval)
            if u is not None and v is not None:
                theta = angle_between(u, v)
                distance = intersection_distance(pending.centroid_a, u, pending.centroid_b, v)
        beta = trajectory_anomaly(theta, distance, cfg)

        gamma = max(
            (angle_change_anomaly(tk.direction_history, onset, cfg, interval) for tk in present),
            default=0.0,
        )
        return AnomalyScores(alpha, beta, gamma, combine(alpha, beta, gamma, cfg.weights))

    def _decide(self, pending: _PendingScore, kinematics: KinematicsTracker, frame_index: int) -> Optional[AccidentEvent]:
        scores = self.score(pending, kinematics)
        self.patterns_scored += 1
        pair = (pending.overlap.track_a, pending.overlap.track_b)
        logger.debug(
            "episode_scored",
            pair=pair,
            onset=pending.overlap.onset,
            alpha=round(scores.alpha, 4),
            beta=round(scores.beta, 4),
            gamma=round(scores.gamma, 4),
            score=round(scores.combined, 4),
        )
        if scores.combined <= self.config.decision_threshold:
            return None

        last = self.last_event.get(pair)
        if last is not None and frame_index - last < self.config.cooldown:
            self.suppressed += 1
            logger.debug("event_suppressed", pair=pair, frame=frame_index, last_event=last)
            return None

        self.last_event[pair] = frame_index
        self.events_emitted += 1
        event = AccidentEvent(frame_index, pair[0], pair[1], scores, pending.overlap.onset)
        logger.info("accident_detected", frame=frame_index, pair=pair, score=round(scores.combined, 4))
        return event

    def process_frame(
        self,
        tracker_state: TrackerState,
        kinematics: KinematicsTracker,
        frame: DetectionFrame,
        step: StepResult,
    ) -> List[AccidentEvent]:
        """Update episodes for this frame and emit events for episodes that are due.

        Must run before deregistered tracks are dropped from ``kinematics``.
        """
        gone = set(step.deregistered)
        for pair in [p for p in self.open_episodes if p[0] in gone or p[1] in gone]:
            del self.open_episodes[pair]

        self.detect_overlaps(tracker_state, list(step.observed), frame.frame_index)

        events: List[AccidentEvent] = []
        remaining: List[_PendingScore] = []
        for pending in self.pending:
            for track_id in {pending.overlap.track_a, pending.overlap.track_b} & gone:
                tk = kinematics.get(track_id)
                if tk is not None:
                    pending.retired[track_id] = tk
            if pending.due <= frame.frame_index:
                event = self._decide(pending, kinematics, frame.frame_index)
                if event is not None:
                    events.append(event)
            else:
                remaining.append(pending)
        self.pending = remaining
        return events

    def flush(self, kinematics: KinematicsTracker, frame_index: int) -> List[AccidentEvent]:
        """Score every episode still waiting when the stream ends.

        Events come out at ``frame_index``, which may be before onset + post_window.
        """
        events = [e for e in (self._decide(p, kinematics, frame_index) for p in self.pending) if e is not None]
        self.pending = []
        return events
