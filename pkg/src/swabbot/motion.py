"""Two-axis motion control: joystick mixing, slew-limited stepping, slip.

Both axes (linear insertion stage, swab rotation) track a rate demand
under acceleration and speed limits at a fixed control period. The
linear axis additionally brakes ahead of its travel limits so that it
pins at a limit with zero velocity without ever violating the per-tick
acceleration bound, and models payload slip: the insertion stepper loses
steps once tip contact force reaches the payload limit, so commanded
advance stops moving the carriage while retraction always remains
available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

DEFAULT_TICK_S = 0.02
DEFAULT_STALENESS_MS = 300


@dataclass(frozen=True)
class MotionConfig:
    linear_min_mm: float = 0.0
    linear_max_mm: float = 120.0
    linear_max_speed_mm_s: float = 10.0
    linear_max_accel_mm_s2: float = 50.0
    rotary_max_speed_deg_s: float = 180.0
    rotary_max_accel_deg_s2: float = 720.0
    payload_limit_n: float = 3.5
    staleness_ms: int = DEFAULT_STALENESS_MS

    def __post_init__(self) -> None:
        if self.linear_min_mm >= self.linear_max_mm:
            raise ValueError("linear travel window is empty")
        for name in ("linear_max_speed_mm_s", "linear_max_accel_mm_s2",
                     "rotary_max_speed_deg_s", "rotary_max_accel_deg_s2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.payload_limit_n <= 0:
            raise ValueError("payload limit must be positive")
        if self.staleness_ms <= 0:
            raise ValueError("staleness window must be positive")


@dataclass(frozen=True)
class AxisState:
    """Kinematic state plus the limits that govern it.

    min_limit/max_limit of None mean an unbounded axis (rotation).
    """

    position: float
    velocity: float
    min_limit: float | None
    max_limit: float | None
    max_speed: float
    max_accel: float


def make_linear_axis(cfg: MotionConfig, position: float | None = None) -> AxisState:
    pos = cfg.linear_min_mm if position is None else position
    return AxisState(pos, 0.0, cfg.linear_min_mm, cfg.linear_max_mm,
                     cfg.linear_max_speed_mm_s, cfg.linear_max_accel_mm_s2)


def make_rotary_axis(cfg: MotionConfig) -> AxisState:
    return AxisState(0.0, 0.0, None, None,
                     cfg.rotary_max_speed_deg_s, cfg.rotary_max_accel_deg_s2)


@dataclass(frozen=True)
class RobotState:
    linear: AxisState
    rotary: AxisState

    def halted(self) -> "RobotState":
        """Immediate stop: stepper pulse trains cut, velocities zeroed."""
        return RobotState(replace(self.linear, velocity=0.0),
                          replace(self.rotary, velocity=0.0))


def make_robot_state(cfg: MotionConfig) -> RobotState:
    return RobotState(make_linear_axis(cfg), make_rotary_axis(cfg))


@dataclass(frozen=True)
class JogCommand:
    """Operator joystick sample. x drives rotation, y drives insertion,

    both normalized to [-1, 1] (clamped on construction). t_ms is the
    control-loop time at which the sample was received; a sample older
    than age_limit_ms no longer authorizes motion (dead-man behavior).
    """

    x: float
    y: float
    seq: int
    t_ms: int
    age_limit_ms: int = DEFAULT_STALENESS_MS

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", min(max(self.x, -1.0), 1.0))
        object.__setattr__(self, "y", min(max(self.y, -1.0), 1.0))

    def is_stale(self, now_ms: int) -> bool:
        return now_ms - self.t_ms > self.age_limit_ms


def mix_joystick(cmd: JogCommand | None, cfg: MotionConfig, now_ms: int) -> tuple[float, float]:
    """Map a joystick sample to (linear, rotary) rate demands.

    A missing or stale sample demands zero on both axes.
    """
    if cmd is None or cmd.is_stale(now_ms):
        return 0.0, 0.0
    return cmd.y * cfg.linear_max_speed_mm_s, cmd.x * cfg.rotary_max_speed_deg_s


def apply_slip(commanded_advance_mm: float, contact_force_n: float, payload_limit_n: float) -> float:
    """Stepper slip at the payload limit.

    Insertion advance (positive) is lost entirely once contact force has
    reached the limit; retraction passes through untouched.
    """
    if commanded_advance_mm > 0 and contact_force_n >= payload_limit_n:
        return 0.0
    return commanded_advance_mm


def _braking_cap(distance: float, max_accel: float, dt_s: float) -> float:
    """Highest speed from which the axis can still stop inside `distance`.

    Solves cap*dt + cap^2/(2a) = distance, i.e. one tick of travel at the
    capped speed plus the continuous braking distance fits in what is
    left. Discrete slew-down covers less ground than the continuous
    ramp, so the cap is conservative and the limit is never crossed.
    """
    if distance <= 0:
        return 0.0
    a_dt = max_accel * dt_s
    return -a_dt + math.sqrt(a_dt * a_dt + 2.0 * max_accel * distance)


def _slew_velocity(axis: AxisState, demand: float, dt_s: float) -> float:
    demand = min(max(demand, -axis.max_speed), axis.max_speed)
    dv_max = axis.max_accel * dt_s
    dv = min(max(demand - axis.velocity, -dv_max), dv_max)
    v = axis.velocity + dv
    if axis.max_limit is not None and v > 0:
        v = min(v, _braking_cap(axis.max_limit - axis.position, axis.max_accel, dt_s))
    if axis.min_limit is not None and v < 0:
        v = max(v, -_braking_cap(axis.position - axis.min_limit, axis.max_accel, dt_s))
    return v


def step_axis(axis: AxisState, demand: float, dt_s: float) -> AxisState:
    """One control tick: slew toward the demand, integrate, respect limits."""
    v = _slew_velocity(axis, demand, dt_s)
    pos = axis.position + v * dt_s
    if axis.max_limit is not None and pos > axis.max_limit:
        # numeric backstop; the braking cap keeps this to float dust
        pos, v = axis.max_limit, 0.0
    if axis.min_limit is not None and pos < axis.min_limit:
        pos, v = axis.min_limit, 0.0
    return replace(axis, position=pos, velocity=v)


def step_axes(
    state: RobotState,
    linear_demand: float,
    rotary_demand: float,
    contact_force_n: float,
    payload_limit_n: float,
    dt_s: float,
) -> RobotState:
    """Advance both axes one tick, applying payload slip to the linear axis.

    During slip the commanded pulse rate (velocity) is unchanged but the
    carriage does not move, which is exactly what a slipping stepper
    does: pulses keep coming, steps are lost.
    """
    lin = state.linear
    v_lin = _slew_velocity(lin, linear_demand, dt_s)
    advance = apply_slip(v_lin * dt_s, contact_force_n, payload_limit_n)
    pos = lin.position + advance
    if lin.max_limit is not None and pos > lin.max_limit:
        pos, v_lin = lin.max_limit, 0.0
    if lin.min_limit is not None and pos < lin.min_limit:
        pos, v_lin = lin.min_limit, 0.0
    new_lin = replace(lin, position=pos, velocity=v_lin)
    new_rot = step_axis(state.rotary, rotary_demand, dt_s)
    return RobotState(new_lin, new_rot)
