"""Sampling-procedure state machine and force safety supervision.

Phase graph (the only legal phase changes):

    IDLE -> ALIGN_CHECK -> INSERTING -> DWELL -> ROTATING_RETRACT -> COMPLETE
    any phase -> FAULT
    FAULT -> IDLE  (explicit operator reset only)

Safety levels are ordered and latch: once the supervisor has reported
OVER_RANGE or worse it never reports a lower level until the operator
resets. Crossing into AT_PAYLOAD (or an operator ESTOP) faults the
procedure and zeroes all axis demands on the very same tick. OVER_RANGE
only blocks further insertion; retraction stays available, including
after a fault was reset while the tip is still loaded.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

WORKING_RANGE_MAX_N = 2.5
PAYLOAD_LIMIT_N = 3.5


class Phase(enum.Enum):
    IDLE = "IDLE"
    ALIGN_CHECK = "ALIGN_CHECK"
    INSERTING = "INSERTING"
    DWELL = "DWELL"
    ROTATING_RETRACT = "ROTATING_RETRACT"
    COMPLETE = "COMPLETE"
    FAULT = "FAULT"


_CHAIN = (Phase.IDLE, Phase.ALIGN_CHECK, Phase.INSERTING, Phase.DWELL,
          Phase.ROTATING_RETRACT, Phase.COMPLETE)

DECLARED_TRANSITIONS: frozenset[tuple[Phase, Phase]] = frozenset(
    {(a, b) for a, b in zip(_CHAIN, _CHAIN[1:])}
    | {(p, Phase.FAULT) for p in Phase if p is not Phase.FAULT}
    | {(Phase.FAULT, Phase.IDLE)}
)


class SafetyLevel(enum.IntEnum):
    OK = 0
    OVER_RANGE = 1
    AT_PAYLOAD = 2
    ESTOP = 3


@dataclass(frozen=True)
class SafetyStatus:
    """Current supervision level. While ``latched`` the level can only
    rise; an operator reset clears the latch so the level may fall again
    as the measured force falls."""

    level: SafetyLevel = SafetyLevel.OK
    latched: bool = False


def classify_force(force_n: float,
                   working_range_max_n: float = WORKING_RANGE_MAX_N,
                   payload_limit_n: float = PAYLOAD_LIMIT_N) -> SafetyLevel:
    if force_n >= payload_limit_n:
        return SafetyLevel.AT_PAYLOAD
    if force_n > working_range_max_n:
        return SafetyLevel.OVER_RANGE
    return SafetyLevel.OK


def check_safety(force_n: float,
                 prior: SafetyStatus | None = None,
                 working_range_max_n: float = WORKING_RANGE_MAX_N,
                 payload_limit_n: float = PAYLOAD_LIMIT_N) -> SafetyStatus:
    """Classify a force sample against thresholds, latching upward.

    With a latched prior the result is the maximum of the fresh level
    and the prior level. An unlatched prior (post-reset) lets the level
    fall to whatever the fresh sample supports.
    """
    fresh = classify_force(force_n, working_range_max_n, payload_limit_n)
    level = fresh
    if prior is not None and prior.latched and prior.level > level:
        level = prior.level
    return SafetyStatus(level=level, latched=level > SafetyLevel.OK)


@dataclass(frozen=True)
class PoseConfig:
    """Alignment gate settings: the insertion axis must stay parallel to
    the palate within tolerance before the procedure may arm."""

    head_tilt_deg: float = 70.0
    palate_angle_deg: float = 0.0
    tolerance_deg: float = 5.0

    def __post_init__(self) -> None:
        if self.tolerance_deg < 0:
            raise ValueError("pose tolerance must be >= 0")


def validate_pose(pose: PoseConfig) -> bool:
    return abs(pose.palate_angle_deg) <= pose.tolerance_deg


class ButtonEvent(enum.Enum):
    ARM = "ARM"
    START = "START"
    DWELL_NOW = "DWELL_NOW"
    RETRACT = "RETRACT"
    HOME = "HOME"
    RESET = "RESET"
    ESTOP = "ESTOP"


@dataclass(frozen=True)
class ProcedureConfig:
    dwell_ms: int = 5000
    retract_speed_mm_s: float = 5.0
    retract_rotary_rate_deg_s: float = 90.0
    home_threshold_mm: float = 1.0
    target_depth_mm: float | None = None
    pose: PoseConfig = field(default_factory=PoseConfig)

    def __post_init__(self) -> None:
        if self.dwell_ms < 0:
            raise ValueError("dwell duration must be >= 0")
        if self.retract_speed_mm_s <= 0:
            raise ValueError("retract speed must be positive")
        if self.home_threshold_mm < 0:
            raise ValueError("home threshold must be >= 0")


@dataclass(frozen=True)
class ControllerState:
    phase: Phase = Phase.IDLE
    safety: SafetyStatus = SafetyStatus()
    dwell_since_ms: int | None = None
    homing: bool = False


@dataclass(frozen=True)
class TickInput:
    now_ms: int
    linear_pos_mm: float
    measured_force_n: float
    sensor_over_range: bool = False
    jog_linear: float = 0.0
    jog_rotary: float = 0.0
    buttons: tuple[ButtonEvent, ...] = ()


@dataclass(frozen=True)
class TickResult:
    phase: Phase
    linear_demand: float
    rotary_demand: float
    safety: SafetyStatus
    events: tuple[str, ...]
    hard_stop: bool = False


class ProcedureController:
    """Per-tick phase logic. All state lives in a small frozen snapshot
    so tests can save and restore it for exhaustive model checking."""

    def __init__(self, config: ProcedureConfig | None = None,
                 working_range_max_n: float = WORKING_RANGE_MAX_N,
                 payload_limit_n: float = PAYLOAD_LIMIT_N):
        self.config = config if config is not None else ProcedureConfig()
        self.working_range_max_n = working_range_max_n
        self.payload_limit_n = payload_limit_n
        self.state = ControllerState()

    # -- helpers -------------------------------------------------------

    def _supervise(self, inp: TickInput) -> SafetyStatus:
        status = check_safety(inp.measured_force_n, self.state.safety,
                              self.working_range_max_n, self.payload_limit_n)
        if inp.sensor_over_range and status.level < SafetyLevel.OVER_RANGE:
            # pinned sensing chain: force value is a floor, distrust it
            status = SafetyStatus(SafetyLevel.OVER_RANGE, True)
        return status

    def _gated_jog(self, safety: SafetyStatus, inp: TickInput) -> tuple[float, float]:
        lin = inp.jog_linear
        if safety.level >= SafetyLevel.OVER_RANGE:
            lin = min(lin, 0.0)  # block insertion, keep retraction
        return lin, inp.jog_rotary

    # -- main tick -----------------------------------------------------

    def tick(self, inp: TickInput) -> TickResult:
        st = self.state
        events: list[str] = []
        prior = st.safety
        safety = self._supervise(inp)

        estop = ButtonEvent.ESTOP in inp.buttons
        if estop:
            safety = SafetyStatus(SafetyLevel.ESTOP, True)

        phase = st.phase
        dwell_since = st.dwell_since_ms
        homing = st.homing

        payload_edge = (prior.level < SafetyLevel.AT_PAYLOAD
                        and safety.level >= SafetyLevel.AT_PAYLOAD)
        if (payload_edge or estop) and phase is not Phase.FAULT:
            reason = "estop" if estop else "safety"
            events.append(f"fault:{reason}")
            events.append(f"phase:{phase.value}->FAULT")
            self.state = ControllerState(Phase.FAULT, safety, None, False)
            return TickResult(Phase.FAULT, 0.0, 0.0, safety, tuple(events), hard_stop=True)

        if phase is Phase.FAULT:
            if ButtonEvent.RESET in inp.buttons and not estop:
                # operator acknowledgment: release the latch but keep the
                # level as the new reference so a still-loaded tip does
                # not immediately re-fault; it may now also decay
                safety = SafetyStatus(safety.level, False)
                events.append("reset")
                events.append("phase:FAULT->IDLE")
                self.state = ControllerState(Phase.IDLE, safety, None, False)
                return TickResult(Phase.IDLE, 0.0, 0.0, safety, tuple(events))
            self.state = ControllerState(Phase.FAULT, safety, None, False)
            return TickResult(Phase.FAULT, 0.0, 0.0, safety, tuple(events))

        # -- button handling in live phases; at most one phase edge per
        # tick so every observable step is a declared transition
        moved = False
        for btn in inp.buttons:
            if btn is ButtonEvent.ARM and phase is Phase.IDLE and not moved:
                if validate_pose(self.config.pose):
                    phase = Phase.ALIGN_CHECK
                    homing = False
                    moved = True
                    events.append("phase:IDLE->ALIGN_CHECK")
                else:
                    events.append("arm_rejected:pose")
            elif btn is ButtonEvent.START and phase is Phase.ALIGN_CHECK and not moved:
                phase = Phase.INSERTING
                moved = True
                events.append("phase:ALIGN_CHECK->INSERTING")
            elif btn is ButtonEvent.DWELL_NOW and phase is Phase.INSERTING and not moved:
                phase = Phase.DWELL
                dwell_since = inp.now_ms
                moved = True
                events.append("phase:INSERTING->DWELL")
            elif btn is ButtonEvent.RETRACT and phase is Phase.DWELL and not moved:
                phase = Phase.ROTATING_RETRACT
                dwell_since = None
                moved = True
                events.append("phase:DWELL->ROTATING_RETRACT")
            elif btn is ButtonEvent.HOME and phase is Phase.IDLE:
                homing = True
                events.append("homing")
            elif btn in (ButtonEvent.ARM, ButtonEvent.START, ButtonEvent.DWELL_NOW,
                         ButtonEvent.RETRACT, ButtonEvent.HOME, ButtonEvent.RESET):
                events.append(f"ignored:{btn.value}")

        # -- automatic transitions (same one-edge-per-tick budget)
        if (not moved and phase is Phase.INSERTING
                and self.config.target_depth_mm is not None
                and inp.linear_pos_mm >= self.config.target_depth_mm):
            phase = Phase.DWELL
            dwell_since = inp.now_ms
            moved = True
            events.append("phase:INSERTING->DWELL")
        if not moved and phase is Phase.DWELL and dwell_since is not None \
                and inp.now_ms - dwell_since >= self.config.dwell_ms:
            phase = Phase.ROTATING_RETRACT
            dwell_since = None
            moved = True
            events.append("phase:DWELL->ROTATING_RETRACT")
        if not moved and phase is Phase.ROTATING_RETRACT \
                and inp.linear_pos_mm <= self.config.home_threshold_mm:
            phase = Phase.COMPLETE
            events.append("phase:ROTATING_RETRACT->COMPLETE")

        # -- demands per phase
        lin = rot = 0.0
        if phase in (Phase.IDLE, Phase.ALIGN_CHECK):
            lin, rot = self._gated_jog(safety, inp)
            if homing:
                if inp.linear_pos_mm <= self.config.home_threshold_mm:
                    homing = False
                    events.append("homed")
                elif lin == 0.0 and rot == 0.0:
                    lin = -self.config.retract_speed_mm_s
                else:
                    homing = False  # operator took over
        elif phase is Phase.INSERTING:
            lin, rot = self._gated_jog(safety, inp)
        elif phase is Phase.ROTATING_RETRACT:
            lin = -self.config.retract_speed_mm_s
            rot = self.config.retract_rotary_rate_deg_s
        # DWELL and COMPLETE hold zero demands

        self.state = ControllerState(phase, safety, dwell_since, homing)
        return TickResult(phase, lin, rot, safety, tuple(events))

    # -- model-check support --------------------------------------------

    def snapshot(self) -> ControllerState:
        return self.state

    def restore(self, state: ControllerState) -> None:
        self.state = replace(state)
