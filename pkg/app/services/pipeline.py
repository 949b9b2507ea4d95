"""
Per-frame wiring: detection_io -> tracker -> kinematics -> collision_engine,
plus the builtin benchmark runner.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import structlog

from app.config import EngineConfig
from app.models import AccidentEvent, EvaluationReport, ScenarioResult
from app.models.scenario import ScenarioSpec
from app.services.collision_engine import CollisionEngine
from app.services.detection_io import filter_vehicles, read_stream
from app.services.evaluation import build_report, evaluate_scenario
from app.services.kinematics import KinematicsTracker
from app.services.scenario_sim import DEFAULT_SUITE_SEED, builtin_suite, generate
from app.services.tracker import Tracker


logger = structlog.get_logger(__name__)


@dataclass
class PipelineResult:
    """Everything one stream produced."""
    events: List[AccidentEvent] = field(default_factory=list)
    patterns: int = 0
    frames: int = 0
    suppressed: int = 0


def _trace_record(frame_index: int, tracker: Tracker, kinematics: KinematicsTracker, observed: Iterable[int]) -> Dict[str, Any]:
    tracks = []
    for track_id in sorted(observed):
        track = tracker.get(track_id)
        tk = kinematics.get(track_id)
        if track is None or tk is None:
            continue
        centroid = track.last_centroid
        tracks.append(
            {
                "id": track_id,
                "centroid": [round(centroid.x, 3), round(centroid.y, 3)],
                "direction": None if tk.direction is None else [round(tk.direction.i, 4), round(tk.direction.j, 4)],
                "speed": round(tk.scaled_speed, 3),
                "acceleration": round(tk.acceleration, 3),
            }
        )
    return {"frame": frame_index, "tracks": tracks}


def run_pipeline(
    lines: Iterable[Union[str, bytes]],
    config: Optional[EngineConfig] = None,
    trace: Optional[List[Dict[str, Any]]] = None,
) -> PipelineResult:
    """Run the detector on one stream.

    ParseError propagates with the offending line number. When ``trace`` is
    given, one record per frame is appended to it.
    """
    config = config or EngineConfig()
    tracker = Tracker(config.tracker)
    kinematics = KinematicsTracker(config.kinematics)
    engine = CollisionEngine(config.anomaly)
    result = PipelineResult()
    last_frame: Optional[int] = None

    for frame in read_stream(lines, config.detection.box_format):
        frame = filter_vehicles(frame, config.detection.allowlist, config.detection.min_score)
        step = tracker.step(frame)
        for track_id in step.observed:
            kinematics.update(tracker.state.tracks[track_id], frame.height)

        result.events.extend(engine.process_frame(tracker.state, kinematics, frame, step))
        for track_id in step.deregistered:
            kinematics.remove(track_id)

        if trace is not None:
            trace.append(_trace_record(frame.frame_index, tracker, kinematics, step.observed))
        result.frames += 1
        last_frame = frame.frame_index

    if last_frame is not None:
        result.events.extend(engine.flush(kinematics, last_frame))

    result.patterns = engine.patterns_scored
    result.suppressed = engine.suppressed
    logger.info("stream_processed", frames=result.frames, events=len(result.events), patterns=result.patterns)
    return result


def run_scenario(spec: ScenarioSpec, config: EngineConfig) -> Tuple[ScenarioResult, List[AccidentEvent]]:
    """Generate one scenario, detect on it and score the outcome."""
    with structlog.contextvars.bound_contextvars(scenario=spec.name):
        generated = generate(spec)
        outcome = run_pipeline(generated.lines, config)
        scored = evaluate_scenario(
            spec.name,
            outcome.events,
            generated.truth,
            outcome.patterns,
            config.evaluation.truth_window,
        )
    return scored, outcome.events


def run_bench(
    config: Optional[EngineConfig] = None,
    specs: Optional[Sequence[ScenarioSpec]] = None,
    workers: int = 1,
    seed: int = DEFAULT_SUITE_SEED,
) -> Tuple[EvaluationReport, Dict[str, List[AccidentEvent]]]:
    """Run scenarios (the builtin suite seeded from ``seed`` by default) and aggregate a report.

    Streams are independent, so with ``workers > 1`` they run in a process
    pool. Aggregation does not depend on completion order.
    """
    config = config or EngineConfig()
    specs = list(specs) if specs is not None else builtin_suite(seed)

    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_scenario, specs, [config] * len(specs)))
    else:
        outcomes = [run_scenario(spec, config) for spec in specs]

    report = build_report([scored for scored, _ in outcomes])
    events = {scored.name: scenario_events for scored, scenario_events in outcomes}
    return report, events
