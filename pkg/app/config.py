"""
Configuration management for the accident detection engine.
Handles environment variables, config files and embedded defaults.
"""

import json
from pathlib import Path
from typing import Any, Dict, FrozenSet, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core import ConfigError


# Mask R-CNN (COCO, BG = 0) ids: car, motorcycle, bus, truck
DEFAULT_VEHICLE_CLASSES: FrozenSet[int] = frozenset({3, 4, 6, 8})


class DetectionConfig(BaseModel):
    """Which detections count as trackable vehicles."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    allowlist: FrozenSet[int] = DEFAULT_VEHICLE_CLASSES
    min_score: float = Field(default=0.7, ge=0.0, le=1.0)
    box_format: str = Field(default="center", pattern="^(center|corners)$")


class TrackerConfig(BaseModel):
    """Centroid tracker settings."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_match_distance: float = Field(default=50.0, gt=0)
    dereg_after: int = Field(default=10, ge=0)
    history_len: int = Field(default=30, ge=2)


class KinematicsConfig(BaseModel):
    """Frame timing and trajectory thresholds."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    fps: float = Field(default=30.0, gt=0)
    interval: int = Field(default=5, ge=1)
    min_traj_magnitude: float = Field(default=8.0, ge=0)
    history_len: int = Field(default=90, ge=2)


class AnomalyConfig(BaseModel):
    """Anomaly scoring constants and the decision rule."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    theta_low: float = Field(default=10.0, ge=0, le=180)
    theta_high: float = Field(default=170.0, ge=0, le=180)
    accel_norm: float = Field(default=1200.0, gt=0)
    gamma_norm: float = Field(default=90.0, gt=0)
    d0: float = Field(default=100.0, gt=0)
    weights: Tuple[float, float, float] = (0.4, 0.35, 0.25)
    decision_threshold: float = Field(default=0.5, ge=0, le=1)
    pre_window: int = Field(default=15, ge=1)
    post_window: int = Field(default=15, ge=1)
    cooldown: int = Field(default=60, ge=0)
    strict_paper_mode: bool = False

    @field_validator("weights")
    @classmethod
    def _weights_are_convex(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(w < 0 for w in value):
            raise ValueError("weights must be non-negative")
        if abs(sum(value) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(value)}")
        return value

    @model_validator(mode="after")
    def _band_is_ordered(self) -> "AnomalyConfig":
        if not self.theta_low < self.theta_high:
            raise ValueError("theta_low must be below theta_high")
        return self


class EvaluationConfig(BaseModel):
    """Event-to-truth matching."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    truth_window: int = Field(default=30, ge=0)


class EngineConfig(BaseSettings):
    """All engine settings. Environment variables use the ACCIDENT_ prefix."""
    model_config = SettingsConfigDict(
        env_prefix="ACCIDENT_",
        env_nested_delimiter="__",
        env_file=".env",
        extra="ignore",
        frozen=True,
    )

    detection: DetectionConfig = DetectionConfig()
    tracker: TrackerConfig = TrackerConfig()
    kinematics: KinematicsConfig = KinematicsConfig()
    anomaly: AnomalyConfig = AnomalyConfig()
    evaluation: EvaluationConfig = EvaluationConfig()


class AppSettings(BaseSettings):
    """Process-level settings: logging, web server, bench workers."""
    model_config = SettingsConfigDict(env_prefix="ACCIDENT_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    log_format: str = "console"
    log_file: Optional[str] = None
    host: str = "0.0.0.0"
    port: int = 8000
    bench_workers: int = 1


def deep_merge(base: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``overrides`` into a copy of ``base``."""
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(dict(merged[key]), value)
        else:
            merged[key] = value
    return merged


def parse_override(assignment: str) -> Dict[str, Any]:
    """Turn ``section.key=value`` into a nested dict. Values are parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"override must look like section.key=value: {assignment!r}")
    dotted, raw = assignment.split("=", 1)
    try:
        value: Any = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    result: Dict[str, Any] = {}
    node = result
    parts = dotted.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return result


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> EngineConfig:
    """Build the engine config.

    Precedence: overrides > config file > environment > defaults.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must contain a JSON object")

    if overrides:
        data = deep_merge(data, overrides)

    unknown = set(data) - set(EngineConfig.model_fields)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    try:
        env_defaults = EngineConfig()
        merged = deep_merge(env_defaults.model_dump(), data)
        return EngineConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def dump_config(config: EngineConfig) -> str:
    """Config as pretty JSON with a sorted allowlist."""
    payload = config.model_dump(mode="json")
    payload["detection"]["allowlist"] = sorted(payload["detection"]["allowlist"])
    return json.dumps(payload, indent=2, sort_keys=True)


def dump_defaults() -> str:
    """Embedded defaults as pretty JSON, ignoring the environment."""
    defaults = EngineConfig.model_construct(
        detection=DetectionConfig(),
        tracker=TrackerConfig(),
        kinematics=KinematicsConfig(),
        anomaly=AnomalyConfig(),
        evaluation=EvaluationConfig(),
    )
    return dump_config(defaults)


# Global settings instance
settings = AppSettings()
