"""
Centroid tracking: register, associate and de-register vehicles across frames.

Association is greedy shortest-pair-first with a distance gate. Ties on
distance go to the lower track id, then the lower detection index.
"""

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.config import TrackerConfig
from app.core import OutOfOrderFrame
from app.models import BoundingBox, DetectionFrame, Point2, Track, TrackStatus


logger = structlog.get_logger(__name__)


class Association(NamedTuple):
    """Result of matching existing tracks to new detections."""
    matches: List[Tuple[int, int]]
    unmatched_tracks: List[int]
    unmatched_detections: List[int]


@dataclass
class TrackerState:
    """Per-stream tracker state. Single writer."""
    config: TrackerConfig = field(default_factory=TrackerConfig)
    tracks: Dict[int, Track] = field(default_factory=dict)
    next_id: int = 0
    last_frame: Optional[int] = None


@dataclass
class StepResult:
    """Lifecycle outcome of one tracker step."""
    frame_index: int
    observed: Dict[int, int] = field(default_factory=dict)
    registered: List[int] = field(default_factory=list)
    deregistered: List[int] = field(default_factory=list)


def centroid_of(box: BoundingBox) -> Point2:
    """Boxes are stored in center form, so the centroid is the stored center."""
    return Point2(box.x, box.y)


def pairwise_distances(existing: Sequence[Point2], detected: Sequence[Point2]) -> np.ndarray:
    """(N, M) Euclidean distance matrix."""
    a = np.array([(p.x, p.y) for p in existing], dtype=float).reshape(-1, 2)
    b = np.array([(p.x, p.y) for p in detected], dtype=float).reshape(-1, 2)
    return np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])


def associate(
    existing: Sequence[Tuple[int, Point2]],
    detected: Sequence[Point2],
    max_dist: float,
) -> Association:
    """Greedy globally-shortest-first matching gated by ``max_dist``."""
    track_ids = [track_id for track_id, _ in existing]
    if not existing or not detected:
        return Association([], sorted(track_ids), list(range(len(detected))))

    distances = pairwise_distances([p for _, p in existing], detected)
    rows, cols = np.nonzero(distances <= max_dist)
    ids = np.array(track_ids)[rows]
    # lexsort: last key is primary
    order = np.lexsort((cols, ids, distances[rows, cols]))

    used_rows, used_cols = set(), set()
    matches: List[Tuple[int, int]] = []
    for k in order:
        row, col = int(rows[k]), int(cols[k])
        if row in used_rows or col in used_cols:
            continue
        used_rows.add(row)
        used_cols.add(col)
        matches.append((track_ids[row], col))

    unmatched_tracks = sorted(track_ids[r] for r in range(len(track_ids)) if r not in used_rows)
    unmatched_detections = [c for c in range(len(detected)) if c not in used_cols]
    return Association(matches, unmatched_tracks, unmatched_detections)


def step(state: TrackerState, frame: DetectionFrame) -> Tuple[TrackerState, StepResult]:
    """Advance the tracker by one frame. ``state`` is updated in place and returned."""
    if state.last_frame is not None and frame.frame_index <= state.last_frame:
        raise OutOfOrderFrame(f"frame {frame.frame_index} is not after {state.last_frame}")

    cfg = state.config
    result = StepResult(frame_index=frame.frame_index)
    centroids = [centroid_of(d.bbox) for d in frame.detections]
    existing = [(track_id, state.tracks[track_id].last_centroid) for track_id in sorted(state.tracks)]

    association = associate(existing, centroids, cfg.max_match_distance)

    for track_id, det_index in association.matches:
        state.tracks[track_id].observe(frame.frame_index, frame.detections[det_index].bbox, centroids[det_index])
        result.observed[track_id] = det_index

    for track_id in association.unmatched_tracks:
        track = state.tracks[track_id]
        track.missing_frames = frame.frame_index - track.last_seen
        if track.missing_frames > cfg.dereg_after:
            track.state = TrackStatus.DEREGISTERED
            del state.tracks[track_id]
            result.deregistered.append(track_id)
            logger.debug("track_deregistered", track=track_id, frame=frame.frame_index)

    for det_index in association.unmatched_detections:
        track = Track(id=state.next_id, history_len=cfg.history_len)
        track.observe(frame.frame_index, frame.detections[det_index].bbox, centroids[det_index])
        state.tracks[track.id] = track
        state.next_id += 1
        result.registered.append(track.id)
        result.observed[track.id] = det_index
        logger.debug("track_registered", track=track.id, frame=frame.frame_index)

    state.last_frame = frame.frame_index
    return state, result


class Tracker:
    """Object wrapper around a TrackerState for one stream."""

    def __init__(self, config: Optional[TrackerConfig] = None):
        self.state = TrackerState(config=config or TrackerConfig())

    def step(self, frame: DetectionFrame) -> StepResult:
        _, result = step(self.state, frame)
        return result

    def active_tracks(self) -> List[Track]:
        return [self.state.tracks[track_id] for track_id in sorted(self.state.tracks)]

    def get(self, track_id: int) -> Optional[Track]:
        return self.state.tracks.get(track_id)
