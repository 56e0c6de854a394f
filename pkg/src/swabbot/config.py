"""Plain-text key-value configuration for the whole rig.

Files are lines of ``section.key = value`` with ``#`` comments. Every
key has a default; unknown keys and unparseable values are hard errors
that name the offending key, so a typo cannot silently fall back to a
default.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .calibration import DEFAULT_GRID_MAX_N, DEFAULT_GRID_STEP_N
from .gripper import BeamModel, OptoSensorModel
from .motion import MotionConfig
from .procedure import WORKING_RANGE_MAX_N, ProcedureConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationConfig:
    grid_max_n: float = DEFAULT_GRID_MAX_N
    grid_step_n: float = DEFAULT_GRID_STEP_N
    hysteresis_half_width_v: float = 0.05
    noise_sigma_v: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class SafetyConfig:
    working_range_max_n: float = WORKING_RANGE_MAX_N


@dataclass(frozen=True)
class ServiceConfig:
    tick_ms: int = 20
    telemetry_period_ms: int = 50

    def __post_init__(self) -> None:
        if self.tick_ms <= 0 or self.telemetry_period_ms <= 0:
            raise ConfigError("service periods must be positive")
        if self.telemetry_period_ms < self.tick_ms:
            raise ConfigError("telemetry period must be >= control tick")


@dataclass(frozen=True)
class RigConfig:
    beam: BeamModel = field(default_factory=BeamModel)
    sensor: OptoSensorModel = field(default_factory=OptoSensorModel)
    motion: MotionConfig = field(default_factory=MotionConfig)
    procedure: ProcedureConfig = field(default_factory=ProcedureConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def default_config() -> RigConfig:
    return RigConfig()


def parse_kv_text(text: str) -> dict[str, str]:
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{line}'")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        kv[key] = value.strip()
    return kv


def _to_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number, got '{value}'") from None


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got '{value}'") from None


def _to_opt_float(key: str, value: str) -> float | None:
    if value.lower() in ("none", ""):
        return None
    return _to_float(key, value)


def config_from_kv(kv: dict[str, str]) -> RigConfig:
    """Build a RigConfig from key-value pairs layered over defaults."""
    cfg = default_config()
    beam, sensor = cfg.beam, cfg.sensor
    motion, proc = cfg.motion, cfg.procedure
    cal, safety, service = cfg.calibration, cfg.safety, cfg.service
    pose = proc.pose

    handlers = {
        "beam.stiffness_n_per_mm": lambda v: ("beam", "stiffness_n_per_mm", _to_float("beam.stiffness_n_per_mm", v)),
        "beam.max_deflection_mm": lambda v: ("beam", "max_deflection_mm", _to_float("beam.max_deflection_mm", v)),
        "beam.nonlinearity_coeff": lambda v: ("beam", "nonlinearity_coeff", _to_float("beam.nonlinearity_coeff", v)),
        "sensor.baseline_v": lambda v: ("sensor", "baseline_v", _to_float("sensor.baseline_v", v)),
        "sensor.sensitivity_v_per_mm": lambda v: ("sensor", "sensitivity_v_per_mm", _to_float("sensor.sensitivity_v_per_mm", v)),
        "sensor.noise_sigma_v": lambda v: ("sensor", "noise_sigma_v", _to_float("sensor.noise_sigma_v", v)),
        "sensor.v_supply": lambda v: ("sensor", "v_supply", _to_float("sensor.v_supply", v)),
        "motion.linear_min_mm": lambda v: ("motion", "linear_min_mm", _to_float("motion.linear_min_mm", v)),
        "motion.linear_max_mm": lambda v: ("motion", "linear_max_mm", _to_float("motion.linear_max_mm", v)),
        "motion.linear_max_speed_mm_s": lambda v: ("motion", "linear_max_speed_mm_s", _to_float("motion.linear_max_speed_mm_s", v)),
        "motion.linear_max_accel_mm_s2": lambda v: ("motion", "linear_max_accel_mm_s2", _to_float("motion.linear_max_accel_mm_s2", v)),
        "motion.rotary_max_speed_deg_s": lambda v: ("motion", "rotary_max_speed_deg_s", _to_float("motion.rotary_max_speed_deg_s", v)),
        "motion.rotary_max_accel_deg_s2": lambda v: ("motion", "rotary_max_accel_deg_s2", _to_float("motion.rotary_max_accel_deg_s2", v)),
        "motion.payload_limit_n": lambda v: ("motion", "payload_limit_n", _to_float("motion.payload_limit_n", v)),
        "motion.staleness_ms": lambda v: ("motion", "staleness_ms", _to_int("motion.staleness_ms", v)),
        "procedure.dwell_ms": lambda v: ("procedure", "dwell_ms", _to_int("procedure.dwell_ms", v)),
        "procedure.retract_speed_mm_s": lambda v: ("procedure", "retract_speed_mm_s", _to_float("procedure.retract_speed_mm_s", v)),
        "procedure.retract_rotary_rate_deg_s": lambda v: ("procedure", "retract_rotary_rate_deg_s", _to_float("procedure.retract_rotary_rate_deg_s", v)),
        "procedure.home_threshold_mm": lambda v: ("procedure", "home_threshold_mm", _to_float("procedure.home_threshold_mm", v)),
        "procedure.target_depth_mm": lambda v: ("procedure", "target_depth_mm", _to_opt_float("procedure.target_depth_mm", v)),
        "procedure.pose_tolerance_deg": lambda v: ("pose", "tolerance_deg", _to_float("procedure.pose_tolerance_deg", v)),
        "procedure.head_tilt_deg": lambda v: ("pose", "head_tilt_deg", _to_float("procedure.head_tilt_deg", v)),
        "procedure.palate_angle_deg": lambda v: ("pose", "palate_angle_deg", _to_float("procedure.palate_angle_deg", v)),
        "calibration.grid_max_n": lambda v: ("calibration", "grid_max_n", _to_float("calibration.grid_max_n", v)),
        "calibration.grid_step_n": lambda v: ("calibration", "grid_step_n", _to_float("calibration.grid_step_n", v)),
        "calibration.hysteresis_half_width_v": lambda v: ("calibration", "hysteresis_half_width_v", _to_float("calibration.hysteresis_half_width_v", v)),
        "calibration.noise_sigma_v": lambda v: ("calibration", "noise_sigma_v", _to_float("calibration.noise_sigma_v", v)),
        "calibration.seed": lambda v: ("calibration", "seed", _to_int("calibration.seed", v)),
        "safety.working_range_max_n": lambda v: ("safety", "working_range_max_n", _to_float("safety.working_range_max_n", v)),
        "service.tick_ms": lambda v: ("service", "tick_ms", _to_int("service.tick_ms", v)),
        "service.telemetry_period_ms": lambda v: ("service", "telemetry_period_ms", _to_int("service.telemetry_period_ms", v)),
    }

    updates: dict[str, dict[str, object]] = {
        "beam": {}, "sensor": {}, "motion": {}, "procedure": {},
        "pose": {}, "calibration": {}, "safety": {}, "service": {},
    }
    for key, value in kv.items():
        if key not in handlers:
            raise ConfigError(f"unknown configuration key '{key}'")
        target, attr, parsed = handlers[key](value)
        updates[target][attr] = parsed

    try:
        if updates["beam"]:
            beam = replace(beam, **updates["beam"])
        if updates["sensor"]:
            sensor = replace(sensor, **updates["sensor"])
        if updates["motion"]:
            motion = replace(motion, **updates["motion"])
        if updates["pose"]:
            pose = replace(pose, **updates["pose"])
        if updates["procedure"] or updates["pose"]:
            proc = replace(proc, pose=pose, **updates["procedure"])
        if updates["calibration"]:
            cal = replace(cal, **updates["calibration"])
        if updates["safety"]:
            safety = replace(safety, **updates["safety"])
        if updates["service"]:
            service = replace(service, **updates["service"])
    except (ValueError, ConfigError) as exc:
        raise ConfigError(str(exc)) from None

    return RigConfig(beam=beam, sensor=sensor, motion=motion, procedure=proc,
                     calibration=cal, safety=safety, service=service)


def load_config(path: str) -> RigConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file '{path}': {exc}") from None
    return config_from_kv(parse_kv_text(text))
