"""
Detection stream parsing, validation and vehicle filtering.

Wire format: one JSON object per line,
``{"frame": int, "w": int, "h": int, "det": [{"cls": int, "score": float, "box": [cx, cy, w, h]}]}``.
Unknown fields are ignored.
"""

import json
import math
from dataclasses import replace
from typing import AbstractSet, Any, Iterable, Iterator, List, Optional, Union

import structlog

from app.core import OutOfOrderFrame, ParseError
from app.models import BoundingBox, Detection, DetectionFrame


logger = structlog.get_logger(__name__)


def _require(record: dict, key: str) -> Any:
    if key not in record:
        raise ParseError(f"missing field '{key}'")
    return record[key]


def _as_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"field '{name}' must be an integer, got {value!r}")
    return value


def _as_number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"field '{name}' must be a number, got {value!r}")
    number = float(value)
    if not math.isfinite(number):
        raise ParseError(f"field '{name}' must be finite")
    return number


def _parse_detection(raw: Any, width: int, height: int, box_format: str) -> Optional[Detection]:
    if not isinstance(raw, dict):
        raise ParseError("detection entries must be objects")

    class_id = _as_int(_require(raw, "cls"), "cls")
    score = _as_number(_require(raw, "score"), "score")
    if not 0.0 <= score <= 1.0:
        raise ParseError(f"score out of range: {score}")

    box = _require(raw, "box")
    if not isinstance(box, list) or len(box) != 4:
        raise ParseError("field 'box' must be a list of four numbers")
    a, b, w, h = (_as_number(v, "box") for v in box)
    if w <= 0 or h <= 0:
        raise ParseError(f"box width and height must be positive, got {w}x{h}")

    bbox = BoundingBox.from_corner(a, b, w, h) if box_format == "corners" else BoundingBox(a, b, w, h)
    clamped = bbox.clamped(width, height)
    if clamped is None:
        logger.warning("box_outside_frame", box=box)
        return None
    if clamped is not bbox:
        logger.debug("box_clamped", box=box)
    return Detection(class_id=class_id, score=score, bbox=clamped)


def parse_frame(record: str, box_format: str = "center") -> DetectionFrame:
    """Parse one stream line into a validated DetectionFrame.

    Boxes are clamped to the frame; boxes entirely outside are dropped.
    """
    try:
        data = json.loads(record)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed record: {e.msg}") from e
    if not isinstance(data, dict):
        raise ParseError("record must be a JSON object")

    frame_index = _as_int(_require(data, "frame"), "frame")
    if frame_index < 0:
        raise ParseError(f"frame index must be non-negative, got {frame_index}")
    width = _as_int(_require(data, "w"), "w")
    height = _as_int(_require(data, "h"), "h")
    if width <= 0 or height <= 0:
        raise ParseError(f"frame dimensions must be positive, got {width}x{height}")

    raw_detections = _require(data, "det")
    if not isinstance(raw_detections, list):
        raise ParseError("field 'det' must be a list")

    detections: List[Detection] = []
    for raw in raw_detections:
        detection = _parse_detection(raw, width, height, box_format)
        if detection is not None:
            detections.append(detection)

    return DetectionFrame(frame_index=frame_index, width=width, height=height, detections=tuple(detections))


def serialize_frame(frame: DetectionFrame) -> str:
    """Inverse of parse_frame for center-form boxes."""
    return json.dumps(
        {
            "frame": frame.frame_index,
            "w": frame.width,
            "h": frame.height,
            "det": [
                {
                    "cls": d.class_id,
                    "score": d.score,
                    "box": [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h],
                }
                for d in frame.detections
            ],
        },
        separators=(",", ":"),
    )


def filter_vehicles(frame: DetectionFrame, allowlist: AbstractSet[int], min_score: float) -> DetectionFrame:
    """Keep detections whose class is allowed and whose score reaches ``min_score``."""
    kept = tuple(d for d in frame.detections if d.class_id in allowlist and d.score >= min_score)
    if len(kept) == len(frame.detections):
        return frame
    return replace(frame, detections=kept)


def read_stream(lines: Iterable[Union[str, bytes]], box_format: str = "center") -> Iterator[DetectionFrame]:
    """Parse a whole stream, enforcing strictly increasing frame indices.

    Lines may be raw bytes; they are decoded as UTF-8 one at a time. Errors
    carry the 1-based line number they occurred on.
    """
    last_index: Optional[int] = None
    for line_number, raw in enumerate(lines, start=1):
        try:
            line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        except UnicodeDecodeError as e:
            raise ParseError(f"invalid UTF-8 at byte {e.start}", line_number) from e
        if not line.strip():
            continue
        try:
            frame = parse_frame(line, box_format)
        except ParseError as e:
            raise e.at_line(line_number) from e
        if last_index is not None and frame.frame_index <= last_index:
            raise OutOfOrderFrame(
                f"frame index {frame.frame_index} does not follow {last_index}",
                line_number,
            )
        last_index = frame.frame_index
        yield frame
