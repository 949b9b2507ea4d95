import math

import pytest

from app.config import AnomalyConfig, EngineConfig
from app.models import AnomalyScores, BoundingBox, DirectionVector, Point2
from app.services.collision_engine import (
    CollisionEngine,
    acceleration_anomaly,
    angle_change_anomaly,
    boxes_overlap,
    combine,
    intersection_distance,
    trajectory_anomaly,
)
from app.services.pipeline import run_pipeline
from app.services.scenario_sim import builtin_suite, generate


def unit(degrees, frame=0):
    rad = math.radians(degrees)
    return DirectionVector(math.cos(rad), math.sin(rad), frame)


def scenario(name):
    return next(spec for spec in builtin_suite() if spec.name == name)


class TestBoxesOverlap:
    def test_identical_boxes(self):
        box = BoundingBox(100, 100, 40, 20)
        assert boxes_overlap(box, box)

    def test_disjoint(self):
        assert not boxes_overlap(BoundingBox(0, 0, 10, 10), BoundingBox(100, 0, 10, 10))

    def test_edge_touching_is_not_overlap(self):
        assert not boxes_overlap(BoundingBox(0, 0, 10, 10), BoundingBox(10, 0, 10, 10))
        assert not boxes_overlap(BoundingBox(0, 0, 10, 10), BoundingBox(0, 10, 10, 10))

    def test_needs_both_axes(self):
        assert not boxes_overlap(BoundingBox(0, 0, 10, 10), BoundingBox(5, 50, 10, 10))

    def test_symmetric(self):
        a, b = BoundingBox(0, 0, 30, 10), BoundingBox(12, 4, 10, 10)
        assert boxes_overlap(a, b) == boxes_overlap(b, a)

    def test_agrees_with_interval_intersection(self, rng):
        for _ in range(10000):
            x1, y1, x2, y2 = (int(v) for v in rng.integers(0, 200, 4))
            w1, h1, w2, h2 = (int(v) for v in rng.integers(1, 80, 4))
            a, b = BoundingBox(x1, y1, w1, h1), BoundingBox(x2, y2, w2, h2)
            ax1, ay1, ax2, ay2 = a.extent
            bx1, by1, bx2, by2 = b.extent
            expected = ax1 < bx2 and bx1 < ax2 and ay1 < by2 and by1 < ay2
            assert boxes_overlap(a, b) == expected

    def test_summed_vertical_clause(self):
        a = BoundingBox(100, 100, 40, 40)
        assert boxes_overlap(a, a)
        assert not boxes_overlap(a, a, summed_y=True)
        # summed centres only overlap near the top edge
        assert boxes_overlap(BoundingBox(100, 5, 40, 40), BoundingBox(110, 10, 40, 40), summed_y=True)


class TestAccelerationAnomaly:
    cfg = AnomalyConfig()

    def test_constant_speed(self):
        history = [(f, 0.0) for f in range(0, 60)]
        assert acceleration_anomaly(history, 30, self.cfg) == 0.0

    def test_half_norm_maps_to_half(self):
        history = [(f, 0.0) for f in range(15, 30)] + [(f, 600.0 if f == 33 else 0.0) for f in range(30, 46)]
        assert acceleration_anomaly(history, 30, self.cfg) == pytest.approx(0.5)

    def test_peak_is_relative_to_pre_window_mean(self):
        history = [(f, 100.0) for f in range(15, 30)] + [(f, -500.0 if f == 35 else 100.0) for f in range(30, 46)]
        assert acceleration_anomaly(history, 30, self.cfg) == pytest.approx(0.5)

    def test_saturates(self):
        history = [(f, 0.0) for f in range(15, 30)] + [(f, -5000.0) for f in range(30, 46)]
        assert acceleration_anomaly(history, 30, self.cfg) == 1.0

    def test_too_few_samples(self):
        history = [(29, 0.0), (30, 900.0), (31, 900.0)]
        assert acceleration_anomaly(history, 30, self.cfg) == 0.0


class TestTrajectoryAnomaly:
    cfg = AnomalyConfig()

    def test_right_angle(self):
        assert trajectory_anomaly(90.0, 0.0, self.cfg) == pytest.approx(1.0)

    def test_inside_band_is_sine(self):
        assert trajectory_anomaly(45.0, None, self.cfg) == pytest.approx(math.sin(math.radians(45)))

    def test_no_direction(self):
        assert trajectory_anomaly(None, None, self.cfg) == 0.0

    def test_shallow_angle_far_intersection(self):
        assert trajectory_anomaly(5.0, 1000.0, self.cfg) == pytest.approx(0.0, abs=1e-4)
        assert trajectory_anomaly(5.0, math.inf, self.cfg) == 0.0

    def test_band_edges_are_attenuated(self):
        assert trajectory_anomaly(10.0, 100.0, self.cfg) == pytest.approx(math.sin(math.radians(10)) * math.exp(-1))
        assert trajectory_anomaly(175.0, 0.0, self.cfg) == pytest.approx(math.sin(math.radians(175)))


class TestIntersectionDistance:
    def test_perpendicular(self):
        d = intersection_distance(Point2(0, 0), unit(0), Point2(100, 100), unit(-90))
        assert d == pytest.approx(math.hypot(50, 50))

    def test_parallel(self):
        assert intersection_distance(Point2(0, 0), unit(0), Point2(0, 30), unit(0)) == math.inf
        assert intersection_distance(Point2(0, 0), unit(0), Point2(0, 30), unit(180)) == math.inf


class TestAngleChangeAnomaly:
    cfg = AnomalyConfig()

    def test_straight_track(self):
        history = [(f, unit(30, f)) for f in range(20, 50)]
        assert angle_change_anomaly(history, 30, self.cfg, interval=5) == pytest.approx(0.0, abs=1e-6)

    def test_forty_five_degrees(self):
        history = [(f, unit(0, f)) for f in range(20, 31)] + [(f, unit(45, f)) for f in range(31, 46)]
        assert angle_change_anomaly(history, 30, self.cfg, interval=5) == pytest.approx(0.5)

    def test_largest_rotation_counts(self):
        history = [(30, unit(0, 30)), (33, unit(120, 33)), (40, unit(20, 40))]
        assert angle_change_anomaly(history, 30, self.cfg, interval=5) == 1.0

    def test_no_direction_before_onset(self):
        history = [(f, unit(90, f)) for f in range(31, 46)]
        assert angle_change_anomaly(history, 30, self.cfg, interval=5) == 0.0

    def test_stale_pre_direction(self):
        history = [(10, unit(0, 10))] + [(f, unit(90, f)) for f in range(31, 46)]
        assert angle_change_anomaly(history, 30, self.cfg, interval=5) == 0.0


class TestCombine:
    weights = (0.4, 0.35, 0.25)

    def test_examples(self):
        assert combine(0, 0, 0, self.weights) == 0.0
        assert combine(1, 1, 1, self.weights) == pytest.approx(1.0)
        assert combine(1, 0, 0, self.weights) == pytest.approx(0.4)

    def test_bounds(self, rng):
        for a, b, g in rng.random((200, 3)):
            assert 0.0 <= combine(a, b, g, self.weights) <= 1.0

    def test_monotone_in_each_anomaly(self, rng):
        for values, bump, axis in zip(rng.random((300, 3)), rng.random(300), rng.integers(0, 3, 300)):
            raised = values.copy()
            raised[axis] = min(1.0, raised[axis] + bump)
            assert combine(*raised, self.weights) >= combine(*values, self.weights)


def overlap_stream(make_line, frames, overlapping, missing=()):
    """Car A parked at x=100; car B sits at x=130 (overlapping) or x=170 (clear)."""
    lines = []
    for t in range(frames):
        boxes = [(100, 100, 40, 20)]
        if t not in missing:
            boxes.append((130 if t in overlapping else 170, 100, 40, 20))
        lines.append(make_line(t, boxes))
    return lines


class TestCollisionEngineEpisodes:
    high = AnomalyScores(0.9, 0.9, 0.9, 0.9)
    low = AnomalyScores(0.1, 0.1, 0.1, 0.1)

    def test_no_overlap_no_patterns(self, make_line, engine_config):
        result = run_pipeline(overlap_stream(make_line, 40, overlapping=set()), engine_config)
        assert result.events == []
        assert result.patterns == 0

    def test_event_reported_after_post_window(self, mocker, make_line, engine_config):
        mocker.patch.object(CollisionEngine, "score", return_value=self.high)
        result = run_pipeline(overlap_stream(make_line, 40, overlapping={5, 6, 7}), engine_config)
        assert [(e.frame_index, e.pair, e.overlap_onset) for e in result.events] == [(20, (0, 1), 5)]

    def test_cooldown_suppresses_repeat_events(self, mocker, make_line, engine_config):
        mocker.patch.object(CollisionEngine, "score", return_value=self.high)
        overlapping = {0, 1, 2, 20, 21, 22, 80, 81, 82}
        result = run_pipeline(overlap_stream(make_line, 100, overlapping), engine_config)
        assert [e.frame_index for e in result.events] == [15, 95]
        assert result.patterns == 3
        assert result.suppressed == 1

    def test_unseen_frame_does_not_split_episode(self, mocker, make_line, engine_config):
        mocker.patch.object(CollisionEngine, "score", return_value=self.low)
        result = run_pipeline(overlap_stream(make_line, 40, overlapping={0, 1, 2, 4, 5}, missing={3}), engine_config)
        assert result.patterns == 1
        assert result.events == []

    def test_deregistered_track_is_scored_when_due(self, mocker, make_line, engine_config):
        scorer = mocker.patch.object(CollisionEngine, "score", return_value=self.high)
        # car B leaves after frame 2 and is deregistered at frame 13
        lines = overlap_stream(make_line, 30, overlapping={0, 1, 2}, missing=set(range(3, 30)))
        result = run_pipeline(lines, engine_config)
        assert [(e.frame_index, e.pair, e.overlap_onset) for e in result.events] == [(15, (0, 1), 0)]
        assert scorer.call_count == 1
        assert result.patterns == 1
        pending = scorer.call_args.args[0]
        assert pending.retired[1].track_id == 1

    def test_stream_end_flushes_pending(self, mocker, make_line, engine_config):
        mocker.patch.object(CollisionEngine, "score", return_value=self.high)
        result = run_pipeline(overlap_stream(make_line, 8, overlapping={5, 6, 7}), engine_config)
        assert [(e.frame_index, e.overlap_onset) for e in result.events] == [(7, 5)]

    def test_parked_neighbours_score_zero(self, make_line, engine_config):
        result = run_pipeline(overlap_stream(make_line, 40, overlapping=set(range(40))), engine_config)
        assert result.patterns == 1
        assert result.events == []


class TestStagedScenarios:
    def test_t_bone_raises_one_event(self, engine_config):
        generated = generate(scenario("t_bone"))
        result = run_pipeline(generated.lines, engine_config)
        assert [e.pair for e in result.events] == [(0, 1)]

    def test_adjacent_stop_raises_nothing(self, engine_config):
        generated = generate(scenario("adjacent_stop"))
        result = run_pipeline(generated.lines, engine_config)
        assert result.patterns >= 1
        assert result.events == []

    def test_hard_stop_saturates_alpha(self, engine_config):
        result = run_pipeline(generate(scenario("head_on")).lines, engine_config)
        assert len(result.events) == 1
        assert result.events[0].scores.alpha >= 0.8

    def test_spin_out_saturates_gamma(self, engine_config):
        result = run_pipeline(generate(scenario("spin_out")).lines, engine_config)
        assert len(result.events) == 1
        assert result.events[0].scores.gamma == pytest.approx(1.0)

    def test_strict_mode_misses_mid_frame_collision(self, engine_config):
        strict = engine_config.model_copy(update={"anomaly": engine_config.anomaly.model_copy(update={"strict_paper_mode": True})})
        result = run_pipeline(generate(scenario("t_bone")).lines, strict)
        assert result.events == []
        assert result.patterns == 0
