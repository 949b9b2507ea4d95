"""
Detection rate / false alarm rate against ground truth.

A pattern is one scored overlap episode; the false alarm rate is taken
over patterns, the detection rate over labelled collisions.
"""

from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
import structlog

from app.core import EvaluationError
from app.models import AccidentEvent, CollisionLabel, EvaluationReport, MatchResult, ScenarioResult


logger = structlog.get_logger(__name__)


def match_events(events: Sequence[AccidentEvent], truth: Sequence[CollisionLabel], window: int) -> MatchResult:
    """Pair events with truth entries.

    Each truth entry, in frame order, consumes the closest unconsumed event
    for the same pair within ``window`` frames; ties go to the earlier event.
    """
    result = MatchResult()
    consumed = set()
    for label in sorted(truth, key=lambda t: (t.frame_index, t.pair)):
        best: Optional[int] = None
        for index, event in enumerate(events):
            if index in consumed or event.pair != label.pair:
                continue
            gap = abs(event.frame_index - label.frame_index)
            if gap > window:
                continue
            if best is None:
                best = index
                continue
            best_event = events[best]
            best_gap = abs(best_event.frame_index - label.frame_index)
            if (gap, event.frame_index) < (best_gap, best_event.frame_index):
                best = index
        if best is None:
            result.misses.append(label)
        else:
            consumed.add(best)
            result.true_positives.append((events[best], label))
    result.false_positives = [e for i, e in enumerate(events) if i not in consumed]
    return result


def detection_rate(detected: int, total: int) -> float:
    """Percentage of labelled collisions that were detected."""
    if total == 0:
        raise EvaluationError("detection rate is undefined without labelled collisions")
    return detected / total * 100.0


def false_alarm_rate(false_alarms: int, total_patterns: int) -> float:
    """Percentage of scored patterns that raised a false alarm."""
    if total_patterns == 0:
        raise EvaluationError("false alarm rate is undefined without scored patterns")
    return false_alarms / total_patterns * 100.0


def evaluate_scenario(
    name: str,
    events: Sequence[AccidentEvent],
    truth: Sequence[CollisionLabel],
    patterns: int,
    window: int,
) -> ScenarioResult:
    """Match one stream's events and summarize them."""
    matched = match_events(events, truth, window)
    tp, fp, _ = matched.counts
    return ScenarioResult(
        name=name,
        total_accidents=len(truth),
        detected_accidents=tp,
        false_alarms=fp,
        patterns=patterns,
        events=len(events),
        latencies=matched.latencies,
    )


def build_report(scenarios: Sequence[ScenarioResult]) -> EvaluationReport:
    """Aggregate per-scenario results. Rates are None when undefined."""
    ordered = sorted(scenarios, key=lambda s: s.name)
    report = EvaluationReport(scenarios=list(ordered))
    report.total_accidents = sum(s.total_accidents for s in ordered)
    report.detected_accidents = sum(s.detected_accidents for s in ordered)
    report.total_patterns = sum(s.patterns for s in ordered)
    report.false_alarms = sum(s.false_alarms for s in ordered)

    if report.total_accidents:
        report.detection_rate = detection_rate(report.detected_accidents, report.total_accidents)
    if report.total_patterns:
        report.false_alarm_rate = false_alarm_rate(report.false_alarms, report.total_patterns)
    elif report.false_alarms == 0:
        report.false_alarm_rate = 0.0

    latencies: List[int] = [lat for s in ordered for lat in s.latencies]
    if latencies:
        report.latency_min = int(np.min(latencies))
        report.latency_mean = float(np.mean(latencies))
        report.latency_max = int(np.max(latencies))

    logger.info(
        "evaluation_report",
        accidents=report.total_accidents,
        detected=report.detected_accidents,
        patterns=report.total_patterns,
        false_alarms=report.false_alarms,
    )
    return report


def report_table(report: EvaluationReport) -> str:
    """Human-readable per-scenario table with a totals row."""
    rows = [
        {
            "scenario": s.name,
            "accidents": s.total_accidents,
            "detected": s.detected_accidents,
            "false_alarms": s.false_alarms,
            "patterns": s.patterns,
            "events": s.events,
        }
        for s in report.scenarios
    ]
    rows.append(
        {
            "scenario": "TOTAL",
            "accidents": report.total_accidents,
            "detected": report.detected_accidents,
            "false_alarms": report.false_alarms,
            "patterns": report.total_patterns,
            "events": sum(s.events for s in report.scenarios),
        }
    )
    table = pd.DataFrame(rows).to_string(index=False)

    def _pct(value: Optional[float]) -> str:
        return "n/a" if value is None else f"{value:.2f}%"

    summary = f"DR {_pct(report.detection_rate)}  FAR {_pct(report.false_alarm_rate)}"
    if report.latency_mean is not None:
        summary += f"  latency min/mean/max {report.latency_min}/{report.latency_mean:.1f}/{report.latency_max} frames"
    return f"{table}\n{summary}\n"
