"""
Accident Detection Engine - Collision detection over vehicle detection streams

Tracks vehicles from per-frame object detections, measures their trajectories,
speeds and accelerations, and flags overlapping vehicle pairs whose motion
turns anomalous as accidents.
"""

__version__ = "1.0.0"
__author__ = "Accident Detection Team"
