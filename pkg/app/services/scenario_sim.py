"""
Synthetic detection streams with ground-truth collision labels.

Vehicles follow scripted kinematics. A scripted collision pair impacts at
the first frame their noise-free boxes overlap; from the next frame on each
vehicle follows its post-impact script. Detection quality is degraded with
Gaussian centroid noise and Bernoulli dropout drawn from a seeded generator.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import ValidationError

from app.core import ParseError, SpecError
from app.models import BoundingBox, CollisionLabel, Detection, DetectionFrame
from app.models.scenario import MotionPhase, PostImpact, ScenarioSpec, VehicleScript
from app.services.collision_engine import boxes_overlap
from app.services.detection_io import serialize_frame


logger = structlog.get_logger(__name__)

# tier -> (centroid noise sigma px, dropout probability)
NOISE_TIERS: Dict[str, Tuple[float, float]] = {
    "clean": (0.0, 0.0),
    "light": (1.5, 0.05),
    "heavy": (3.0, 0.15),
}

DEFAULT_SUITE_SEED = 100


@dataclass
class GeneratedScenario:
    """Wire-format lines plus the collisions that actually happened."""
    name: str
    lines: List[str] = field(default_factory=list)
    truth: List[CollisionLabel] = field(default_factory=list)


@dataclass
class _VehicleState:
    script: VehicleScript
    x: float
    y: float
    speed: float
    heading: float
    impact_frame: Optional[int] = None

    @classmethod
    def spawn(cls, script: VehicleScript) -> "_VehicleState":
        vx, vy = script.velocity
        speed = math.hypot(vx, vy)
        if script.heading is not None:
            heading = script.heading
        else:
            heading = math.degrees(math.atan2(vy, vx)) if speed > 0 else 0.0
        return cls(script, script.position[0], script.position[1], speed, heading)

    @property
    def box(self) -> BoundingBox:
        w, h = self.script.size
        return BoundingBox(self.x, self.y, w, h)

    def advance(self, frame: int) -> None:
        """Move from ``frame`` to ``frame + 1``."""
        if self.impact_frame is not None:
            post: PostImpact = self.script.post_impact
            if frame == self.impact_frame:
                if post.speed is not None:
                    self.speed = post.speed
                self.heading += post.heading_change
            else:
                self.speed = max(0.0, self.speed - post.decel)
        else:
            for phase in self.script.phases:
                self._apply_phase(phase, frame)

        rad = math.radians(self.heading)
        self.x += self.speed * math.cos(rad)
        self.y += self.speed * math.sin(rad)

    def _apply_phase(self, phase: MotionPhase, frame: int) -> None:
        if frame < phase.start_frame:
            return
        if phase.kind == "stop":
            self.speed = max(0.0, self.speed - phase.decel)
        elif phase.kind == "turn" and frame < phase.start_frame + phase.frames:
            self.heading += phase.rate


def load_spec(path: Union[str, Path]) -> ScenarioSpec:
    """Read and validate a JSON scenario file."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return ScenarioSpec.model_validate(raw)
    except OSError as e:
        raise SpecError(f"cannot read scenario {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise SpecError(f"scenario {path} is not valid JSON: {e}") from e
    except ValidationError as e:
        raise SpecError(f"invalid scenario {path}: {e}") from e


def _validate(spec: ScenarioSpec) -> None:
    spawns = [v.spawn_frame for v in spec.vehicles]
    if spawns != sorted(spawns):
        raise SpecError(f"{spec.name}: vehicles must be listed in spawn order")
    for index, script in enumerate(spec.vehicles):
        if script.spawn_frame >= spec.frame_count:
            raise SpecError(f"{spec.name}: vehicle {index} spawns after the last frame")


def _noise_levels(spec: ScenarioSpec, script: VehicleScript) -> Tuple[float, float]:
    tier_sigma, tier_dropout = NOISE_TIERS[spec.tier]
    return max(script.noise_sigma, tier_sigma), max(script.dropout, tier_dropout)


def _check_in_frame(spec: ScenarioSpec, index: int, state: _VehicleState, frame: int, spawning: bool) -> None:
    if spawning:
        x1, y1, x2, y2 = state.box.extent
        if x1 < 0 or y1 < 0 or x2 > spec.width or y2 > spec.height:
            raise SpecError(f"{spec.name}: vehicle {index} does not fit in the frame at spawn")
    elif not (0 <= state.x <= spec.width and 0 <= state.y <= spec.height):
        raise SpecError(f"{spec.name}: vehicle {index} leaves the frame at frame {frame}")


def generate(spec: ScenarioSpec) -> GeneratedScenario:
    """Render ``spec`` into exactly ``frame_count`` wire-format lines.

    Deterministic for a given spec: the generator is seeded from ``spec.seed``
    and draws the same number of variates every frame.
    """
    _validate(spec)
    rng = np.random.default_rng(spec.seed)
    states: List[Optional[_VehicleState]] = [None] * len(spec.vehicles)
    pending = {tuple(sorted(pair)) for pair in spec.collisions}
    result = GeneratedScenario(name=spec.name)

    for frame in range(spec.frame_count):
        for index, script in enumerate(spec.vehicles):
            if script.spawn_frame != frame:
                continue
            state = _VehicleState.spawn(script)
            _check_in_frame(spec, index, state, frame, spawning=True)
            for other_index, other in enumerate(states):
                if other is not None and boxes_overlap(state.box, other.box):
                    raise SpecError(f"{spec.name}: vehicle {index} spawns overlapping vehicle {other_index}")
            states[index] = state

        for index, state in enumerate(states):
            if state is not None:
                _check_in_frame(spec, index, state, frame, spawning=False)

        for a, b in sorted(pending):
            state_a, state_b = states[a], states[b]
            if state_a is None or state_b is None:
                continue
            if boxes_overlap(state_a.box, state_b.box):
                pending.discard((a, b))
                result.truth.append(CollisionLabel(frame, a, b))
                for state in (state_a, state_b):
                    if state.impact_frame is None:
                        state.impact_frame = frame
                logger.debug("scripted_impact", scenario=spec.name, frame=frame, pair=(a, b))

        detections: List[Detection] = []
        for index, state in enumerate(states):
            if state is None:
                continue
            sigma, dropout = _noise_levels(spec, state.script)
            dropped = rng.random() < dropout and frame != state.script.spawn_frame
            noise = rng.normal(0.0, 1.0, size=2) * sigma
            if dropped:
                continue
            w, h = state.script.size
            box = BoundingBox(state.x + float(noise[0]), state.y + float(noise[1]), w, h)
            detections.append(Detection(state.script.class_id, state.script.score, box))

        result.lines.append(serialize_frame(DetectionFrame(frame, spec.width, spec.height, tuple(detections))))

        for state in states:
            if state is not None:
                state.advance(frame)

    if pending:
        raise SpecError(f"{spec.name}: scripted collisions never happen: {sorted(pending)}")
    logger.debug("scenario_generated", scenario=spec.name, frames=len(result.lines), collisions=len(result.truth))
    return result


def write_truth(truth: Iterable[CollisionLabel]) -> str:
    """``.truth`` format: one ``frame id id`` line per collision."""
    return "".join(f"{label.frame_index} {label.track_a} {label.track_b}\n" for label in truth)


def read_truth(lines: Iterable[str]) -> List[CollisionLabel]:
    labels: List[CollisionLabel] = []
    for line_number, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields or fields[0].startswith("#"):
            continue
        if len(fields) != 3:
            raise ParseError("truth lines must read 'frame id id'", line_number)
        try:
            frame, a, b = (int(v) for v in fields)
        except ValueError as e:
            raise ParseError(f"non-integer field in truth line: {line.strip()!r}", line_number) from e
        if a == b:
            raise ParseError("a collision needs two distinct ids", line_number)
        a, b = sorted((a, b))
        labels.append(CollisionLabel(frame, a, b))
    return labels


# Builtin benchmark

_HORIZONTAL = (80.0, 40.0)
_VERTICAL = (40.0, 80.0)


def _car(
    position: Tuple[float, float],
    velocity: Tuple[float, float] = (0.0, 0.0),
    size: Tuple[float, float] = _HORIZONTAL,
    **kwargs,
) -> VehicleScript:
    return VehicleScript(position=position, velocity=velocity, size=size, **kwargs)


def _crash(speed: Optional[float] = None, heading_change: float = 0.0, decel: float = 0.0) -> PostImpact:
    return PostImpact(speed=speed, heading_change=heading_change, decel=decel)


def _positive_bases() -> List[Tuple[ScenarioSpec, str]]:
    head_on = ScenarioSpec(
        name="head_on",
        frame_count=150,
        vehicles=[
            _car((300, 360), (6, 0), post_impact=_crash(4, 75, 1)),
            _car((980, 360), (-6, 0), post_impact=_crash(4, 75, 1)),
        ],
        collisions=[(0, 1)],
    )
    t_bone = ScenarioSpec(
        name="t_bone",
        frame_count=150,
        vehicles=[
            _car((200, 400), (6, 0), post_impact=_crash(3, 30, 1)),
            _car((640, 100), (0, 5), _VERTICAL, post_impact=_crash(6, -60, 1)),
        ],
        collisions=[(0, 1)],
    )
    rear_end = ScenarioSpec(
        name="rear_end",
        frame_count=150,
        vehicles=[
            _car((200, 360), (7, 0), post_impact=_crash(2, 20, 1)),
            _car((500, 360), (2, 0), post_impact=_crash(7, 60, 0.7)),
        ],
        collisions=[(0, 1)],
    )
    spin_out = ScenarioSpec(
        name="spin_out",
        frame_count=150,
        vehicles=[
            _car((200, 340), (6, 0), post_impact=_crash(5, 120, 0.5)),
            _car((900, 560), (-4, -3), post_impact=_crash(4, -40, 1)),
        ],
        collisions=[(0, 1)],
    )
    shunt = ScenarioSpec(
        name="low_speed_shunt",
        frame_count=150,
        vehicles=[
            _car((370, 230), (2.1213, 2.1213), post_impact=_crash(1, 0, 1)),
            _car((400, 380), (2, 0), post_impact=_crash(4, 30, 0.5)),
        ],
        collisions=[(0, 1)],
    )
    return [(head_on, "light"), (t_bone, "heavy"), (rear_end, "light"), (spin_out, "heavy"), (shunt, "light")]


def _negative_bases() -> List[ScenarioSpec]:
    adjacent_stop = ScenarioSpec(
        name="adjacent_stop",
        frame_count=180,
        vehicles=[
            _car((700, 340)),
            _car((200, 370), (5, 0), phases=[MotionPhase(kind="stop", start_frame=78, decel=0.125)]),
        ],
    )
    parallel = ScenarioSpec(
        name="lane_parallel_passing",
        frame_count=150,
        vehicles=[_car((200, 340), (7, 0)), _car((500, 372), (3, 0))],
    )
    crossing = ScenarioSpec(
        name="crossing_without_contact",
        frame_count=120,
        vehicles=[_car((200, 200), (6, 0)), _car((700, 80), (0, 5), _VERTICAL)],
    )
    lanes = [(200.0, 5.0, (100.0, 300.0)), (360.0, 4.0, (150.0, 350.0)), (520.0, 3.0, (200.0, 400.0))]
    dense = ScenarioSpec(
        name="dense_disjoint",
        frame_count=150,
        vehicles=[_car((x, y), (speed, 0)) for y, speed, starts in lanes for x in starts],
    )
    parked = ScenarioSpec(
        name="stationary_cluster",
        frame_count=120,
        vehicles=[_car(p) for p in [(300, 300), (400, 300), (500, 300), (300, 420), (400, 420), (500, 420)]],
    )
    return [adjacent_stop, parallel, crossing, dense, parked]


def builtin_suite(base_seed: int = DEFAULT_SUITE_SEED) -> List[ScenarioSpec]:
    """The fixed 20-scenario benchmark: 10 collisions then 10 negatives, each clean plus one noisy variant.

    Scenario seeds start at ``base_seed`` and step by 10 per base scenario; the
    noisy variant uses the next seed up.
    """
    suite: List[ScenarioSpec] = []
    seed = base_seed
    for base, noisy_tier in _positive_bases():
        suite.append(base.model_copy(update={"seed": seed}))
        suite.append(base.model_copy(update={"name": f"{base.name}_{noisy_tier}", "tier": noisy_tier, "seed": seed + 1}))
        seed += 10
    for base in _negative_bases():
        suite.append(base.model_copy(update={"seed": seed}))
        suite.append(base.model_copy(update={"name": f"{base.name}_light", "tier": "light", "seed": seed + 1}))
        seed += 10
    return suite
