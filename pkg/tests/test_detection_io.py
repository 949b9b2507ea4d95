import json

import pytest

from app.core import OutOfOrderFrame, ParseError
from app.models import BoundingBox, Detection, DetectionFrame
from app.services.detection_io import filter_vehicles, parse_frame, read_stream, serialize_frame


class TestParseFrame:
    def test_single_detection(self):
        frame = parse_frame('{"frame":0,"w":1280,"h":720,"det":[{"cls":3,"score":0.97,"box":[640,360,80,40]}]}')
        assert frame.frame_index == 0
        assert (frame.width, frame.height) == (1280, 720)
        assert len(frame.detections) == 1
        det = frame.detections[0]
        assert det.class_id == 3
        assert det.score == pytest.approx(0.97)
        assert det.bbox == BoundingBox(640, 360, 80, 40)

    def test_empty_detections(self):
        frame = parse_frame('{"frame":1,"w":1280,"h":720,"det":[]}')
        assert frame.frame_index == 1
        assert frame.detections == ()

    def test_score_out_of_range(self):
        with pytest.raises(ParseError, match="score"):
            parse_frame('{"frame":2,"w":1280,"h":720,"det":[{"cls":3,"score":1.4,"box":[0,0,10,10]}]}')

    @pytest.mark.parametrize(
        "record",
        [
            "not json",
            "[1, 2, 3]",
            '{"w":1280,"h":720,"det":[]}',
            '{"frame":-1,"w":1280,"h":720,"det":[]}',
            '{"frame":true,"w":1280,"h":720,"det":[]}',
            '{"frame":0,"w":0,"h":720,"det":[]}',
            '{"frame":0,"w":1280,"h":720,"det":{}}',
            '{"frame":0,"w":1280,"h":720,"det":[{"cls":3,"score":0.9,"box":[1,2,3]}]}',
            '{"frame":0,"w":1280,"h":720,"det":[{"cls":3,"score":0.9,"box":[10,10,0,5]}]}',
            '{"frame":0,"w":1280,"h":720,"det":[{"score":0.9,"box":[10,10,5,5]}]}',
        ],
    )
    def test_rejects_malformed_records(self, record):
        with pytest.raises(ParseError):
            parse_frame(record)

    def test_missing_field_is_named(self):
        with pytest.raises(ParseError, match="det"):
            parse_frame('{"frame":0,"w":1280,"h":720}')

    def test_unknown_fields_ignored(self):
        frame = parse_frame('{"frame":3,"w":100,"h":100,"camera":"north","det":[{"cls":3,"score":0.8,"box":[50,50,10,10],"mask":null}]}')
        assert len(frame.detections) == 1

    def test_corner_format_converted_to_center(self):
        frame = parse_frame('{"frame":0,"w":100,"h":100,"det":[{"cls":3,"score":0.8,"box":[8,17,4,6]}]}', box_format="corners")
        box = frame.detections[0].bbox
        assert (box.x, box.y) == (10, 20)

    def test_box_clamped_to_frame(self):
        frame = parse_frame('{"frame":0,"w":1280,"h":720,"det":[{"cls":3,"score":0.8,"box":[10,10,40,40]}]}')
        box = frame.detections[0].bbox
        assert box.extent == (0.0, 0.0, 30.0, 30.0)

    def test_box_outside_frame_dropped(self):
        frame = parse_frame('{"frame":0,"w":1280,"h":720,"det":[{"cls":3,"score":0.8,"box":[2000,100,40,40]}]}')
        assert frame.detections == ()


class TestFilterVehicles:
    def _frame(self, *dets):
        return DetectionFrame(0, 1280, 720, tuple(Detection(c, s, BoundingBox(100, 100, 10, 10)) for c, s in dets))

    def test_allowlist(self):
        kept = filter_vehicles(self._frame((3, 0.9), (1, 0.9)), {3}, 0.5)
        assert [d.class_id for d in kept.detections] == [3]

    def test_below_min_score_dropped(self):
        kept = filter_vehicles(self._frame((3, 0.49)), {3}, 0.5)
        assert kept.detections == ()

    def test_min_score_is_inclusive(self):
        kept = filter_vehicles(self._frame((3, 0.5)), {3}, 0.5)
        assert len(kept.detections) == 1

    def test_matches_linear_scan(self, rng):
        dets = [(int(c), float(s)) for c, s in zip(rng.integers(0, 10, 100), rng.random(100))]
        frame = self._frame(*dets)
        allowlist = {3, 4, 6, 8}
        kept = filter_vehicles(frame, allowlist, 0.7)
        expected = [d for d in frame.detections if d.class_id in allowlist and d.score >= 0.7]
        assert list(kept.detections) == expected

    def test_idempotent_subsequence(self, rng):
        for _ in range(50):
            n = int(rng.integers(0, 12))
            frame = self._frame(*[(int(c), float(s)) for c, s in zip(rng.integers(0, 10, n), rng.random(n))])
            kept = filter_vehicles(frame, {3, 4, 6, 8}, 0.7)
            assert filter_vehicles(kept, {3, 4, 6, 8}, 0.7) == kept
            remaining = iter(frame.detections)
            assert all(any(d is candidate for candidate in remaining) for d in kept.detections)


class TestReadStream:
    def test_skips_blank_lines(self):
        lines = ['{"frame":0,"w":10,"h":10,"det":[]}', "", "   ", '{"frame":1,"w":10,"h":10,"det":[]}']
        assert [f.frame_index for f in read_stream(lines)] == [0, 1]

    def test_out_of_order_frame(self):
        lines = ['{"frame":5,"w":10,"h":10,"det":[]}', '{"frame":5,"w":10,"h":10,"det":[]}']
        with pytest.raises(OutOfOrderFrame) as info:
            list(read_stream(lines))
        assert info.value.line_number == 2

    def test_parse_error_carries_line_number(self):
        lines = ['{"frame":0,"w":10,"h":10,"det":[]}', "", "{broken"]
        with pytest.raises(ParseError) as info:
            list(read_stream(lines))
        assert info.value.line_number == 3
        assert str(info.value).startswith("line 3:")

    def test_frame_gaps_allowed(self):
        lines = ['{"frame":0,"w":10,"h":10,"det":[]}', '{"frame":7,"w":10,"h":10,"det":[]}']
        assert [f.frame_index for f in read_stream(lines)] == [0, 7]

    def test_invalid_utf8_carries_line_number(self):
        lines = [b'{"frame":0,"w":10,"h":10,"det":[]}', b'{"frame":1,"w":10,"h":10,"note":"\xff\xfe","det":[]}']
        with pytest.raises(ParseError) as info:
            list(read_stream(lines))
        assert info.value.line_number == 2
        assert "UTF-8" in str(info.value)

    def test_bytes_lines_are_decoded(self):
        lines = [b'{"frame":0,"w":10,"h":10,"det":[]}\n', b"\n", b'{"frame":3,"w":10,"h":10,"det":[]}\n']
        assert [f.frame_index for f in read_stream(lines)] == [0, 3]


def test_serialize_frame_parses_back():
    frame = DetectionFrame(4, 1280, 720, (Detection(3, 0.95, BoundingBox(300.5, 360.25, 80, 40)),))
    line = serialize_frame(frame)
    assert json.loads(line)["det"][0]["box"] == [300.5, 360.25, 80, 40]
    assert parse_frame(line) == frame


def test_random_frames_parse_back(rng):
    for index in range(200):
        width, height = int(rng.integers(200, 2000)), int(rng.integers(200, 2000))
        detections = []
        for _ in range(int(rng.integers(0, 6))):
            w, h = float(rng.uniform(5, 100)), float(rng.uniform(5, 100))
            x = float(rng.uniform(w / 2 + 1, width - w / 2 - 1))
            y = float(rng.uniform(h / 2 + 1, height - h / 2 - 1))
            detections.append(Detection(int(rng.integers(0, 90)), float(rng.random()), BoundingBox(x, y, w, h)))
        frame = DetectionFrame(index, width, height, tuple(detections))
        assert parse_frame(serialize_frame(frame)) == frame
