"""Closed-loop simulation session: plant, sensing, supervision, motion.

One Session owns the whole hardware-in-the-loop stack and advances it
tick by tick on a fixed control period. Every tick:

1. drain queued operator commands,
2. evaluate true contact force at the current depth,
3. push it through the gripper sensing chain (with seeded noise),
4. convert the raw voltage through the calibration curve,
5. run the safety supervisor and procedure state machine,
6. step the axes (payload slip acts on true force),
7. append a trace row and, on its own slower period, a telemetry frame.

Everything is seeded, so a rerun of the same script against the same
configuration produces a byte-identical trace file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .calibration import CalibrationCurve, CalibrationRig, acquire_record, fit_curve, force_from_voltage, make_grid
from .config import RigConfig, default_config
from .gripper import simulate_raw_reading
from .motion import JogCommand, RobotState, make_robot_state, mix_joystick, step_axes
from .procedure import ButtonEvent, ProcedureController, TickInput
from .protocol import (Command, CommandKind, Telemetry, command_button_name,
                       decode_command, encode_command)
from .tissue import Direction, TissueProfile, contact_force, make_phantom_profile

# Phases during which the swab is actually in tissue; statistics pool
# force samples over these rows only.
ACTIVE_PHASES = frozenset({"INSERTING", "DWELL", "ROTATING_RETRACT"})

_VELOCITY_EPS = 1e-9


# ------------------------------------------------------------------ trace


class TraceError(ValueError):
    pass


TRACE_HEADER = "t_ms,depth_mm,angle_deg,force_n,raw_v,phase,safety"


@dataclass(frozen=True)
class TraceRow:
    t_ms: int
    depth_mm: float
    angle_deg: float
    force_n: float
    raw_v: float
    phase: str
    safety: str


def _fmt(x: float) -> str:
    return format(x, ".4f")


def trace_to_csv(rows: Iterable[TraceRow]) -> str:
    lines = [TRACE_HEADER]
    for r in rows:
        lines.append(
            f"{r.t_ms},{_fmt(r.depth_mm)},{_fmt(r.angle_deg)},"
            f"{_fmt(r.force_n)},{_fmt(r.raw_v)},{r.phase},{r.safety}"
        )
    return "\n".join(lines) + "\n"


def trace_from_csv(text: str) -> list[TraceRow]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != TRACE_HEADER:
        raise TraceError("row 1: missing or wrong header")
    rows: list[TraceRow] = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 7:
            raise TraceError(f"row {i}: expected 7 columns, got {len(parts)}")
        try:
            t_ms = int(parts[0], 10)
        except ValueError:
            raise TraceError(f"row {i}: bad t_ms '{parts[0]}'") from None
        floats = []
        for name, tok in zip(("depth_mm", "angle_deg", "force_n", "raw_v"), parts[1:5]):
            try:
                v = float(tok)
            except ValueError:
                raise TraceError(f"row {i}: bad {name} '{tok}'") from None
            if not math.isfinite(v):
                raise TraceError(f"row {i}: non-finite {name} '{tok}'")
            floats.append(v)
        phase, safety = parts[5], parts[6]
        if not phase or not safety:
            raise TraceError(f"row {i}: empty phase or safety field")
        rows.append(TraceRow(t_ms, floats[0], floats[1], floats[2], floats[3], phase, safety))
    return rows


def save_trace(rows: Iterable[TraceRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trace_to_csv(rows))


def load_trace(path: str) -> list[TraceRow]:
    with open(path, "r", encoding="utf-8") as fh:
        return trace_from_csv(fh.read())


# ------------------------------------------------------------- statistics


@dataclass(frozen=True)
class TraceStats:
    """Force statistics pooled over procedure-active rows."""

    active_rows: int
    mean_force_n: float
    std_force_n: float
    max_force_n: float
    max_depth_mm: float
    t_start_ms: int
    t_end_ms: int


def trace_statistics(rows: Sequence[TraceRow]) -> TraceStats:
    active = [r for r in rows if r.phase in ACTIVE_PHASES]
    if not active:
        return TraceStats(0, 0.0, 0.0, 0.0, 0.0, 0, 0)
    forces = np.array([r.force_n for r in active])
    depths = np.array([r.depth_mm for r in active])
    return TraceStats(
        active_rows=len(active),
        mean_force_n=float(forces.mean()),
        std_force_n=float(forces.std()),
        max_force_n=float(forces.max()),
        max_depth_mm=float(depths.max()),
        t_start_ms=active[0].t_ms,
        t_end_ms=active[-1].t_ms,
    )


def split_reps(rows: Sequence[TraceRow]) -> list[tuple[int, int]]:
    """Half-open row index spans, one per completed repetition.

    A repetition runs from the first INSERTING row to the first COMPLETE
    row that follows it; an aborted repetition (fault before COMPLETE)
    yields no span.
    """
    spans: list[tuple[int, int]] = []
    start: int | None = None
    for i, r in enumerate(rows):
        if start is None:
            if r.phase == "INSERTING":
                start = i
        elif r.phase == "COMPLETE":
            spans.append((start, i + 1))
            start = None
        elif r.phase in ("FAULT", "IDLE"):
            start = None  # aborted before completing
    return spans


def rep_statistics(rows: Sequence[TraceRow]) -> tuple[TraceStats, ...]:
    return tuple(trace_statistics(rows[a:b]) for a, b in split_reps(rows))


# --------------------------------------------------------------- session


@dataclass(frozen=True)
class SessionSummary:
    final_phase: str
    ticks: int
    completed_reps: int
    safety_faults: int
    operator_stops: int


class Session:
    """Deterministic closed-loop sim advanced in fixed control ticks.

    ``sensor_seed`` seeds the sensor-noise stream (the tissue noise
    stream is seeded by the profile itself). ``fault_injection``, when
    given, is called with the tick time and may return a replacement
    true contact force for that tick (None leaves the plant value), the
    test hook for forcing the sensing and safety chain into corners the
    nominal plant cannot reach.
    """

    def __init__(
        self,
        config: RigConfig | None = None,
        profile: TissueProfile | None = None,
        curve: CalibrationCurve | None = None,
        sensor_seed: int = 0,
        fault_injection: Callable[[int], float | None] | None = None,
    ):
        self.config = config if config is not None else default_config()
        self.profile = profile if profile is not None else make_phantom_profile()
        self.curve = curve if curve is not None else self._auto_calibrate()
        self.fault_injection = fault_injection

        cfg = self.config
        self.tick_ms: int = cfg.service.tick_ms
        self.robot: RobotState = make_robot_state(cfg.motion)
        self.controller = ProcedureController(
            cfg.procedure,
            working_range_max_n=cfg.safety.working_range_max_n,
            payload_limit_n=cfg.motion.payload_limit_n,
        )
        self._rng = np.random.default_rng(sensor_seed)
        self._jog: JogCommand | None = None
        self._pending_buttons: list[ButtonEvent] = []
        self.last_seq: int = 0
        self.ticks: int = 0
        self.trace: list[TraceRow] = []
        self.events: list[tuple[int, str]] = []
        self._telemetry_pending: list[Telemetry] = []
        self.last_true_force_n: float = 0.0

    def _auto_calibrate(self) -> CalibrationCurve:
        cal = self.config.calibration
        rig = CalibrationRig(
            beam=self.config.beam,
            sensor=self.config.sensor,
            hysteresis_half_width_v=cal.hysteresis_half_width_v,
            noise_sigma_v=cal.noise_sigma_v,
            seed=cal.seed,
        )
        grid = make_grid(cal.grid_max_n, cal.grid_step_n)
        return fit_curve(acquire_record(rig, grid, timestamp_s=0.0))

    # -- time ------------------------------------------------------------

    @property
    def now_ms(self) -> int:
        """Time of the next tick to run (ticks * period)."""
        return self.ticks * self.tick_ms

    # -- command intake ----------------------------------------------------

    def submit(self, cmd: Command) -> bool:
        """Queue one operator command for the next tick.

        Sequence numbers must increase strictly; anything else is a
        duplicate or out-of-order delivery and is discarded.
        """
        if cmd.seq <= self.last_seq:
            return False
        self.last_seq = cmd.seq
        if cmd.kind is CommandKind.JOG:
            self._jog = JogCommand(
                cmd.x, cmd.y, cmd.seq, self.now_ms,
                age_limit_ms=self.config.motion.staleness_ms,
            )
        else:
            name = command_button_name(cmd)
            assert name is not None
            self._pending_buttons.append(ButtonEvent(name))
        return True

    def submit_line(self, line: str) -> bool:
        return self.submit(decode_command(line))

    # -- main loop ---------------------------------------------------------

    def tick(self) -> TraceRow:
        now = self.now_ms
        cfg = self.config

        # plant: direction from the commanded motion of the last tick
        v = self.robot.linear.velocity
        if v > _VELOCITY_EPS:
            direction = Direction.INSERT
        elif v < -_VELOCITY_EPS:
            direction = Direction.RETRACT
        else:
            direction = Direction.HOLD
        true_force = contact_force(self.profile, self.robot.linear.position,
                                   direction, self.ticks)
        if self.fault_injection is not None:
            injected = self.fault_injection(now)
            if injected is not None:
                true_force = injected
        self.last_true_force_n = true_force

        # sensing chain
        reading = simulate_raw_reading(true_force, cfg.beam, cfg.sensor, self._rng)
        measured = force_from_voltage(self.curve, reading.volts)
        # a voltage pinned above either the sensor band or the calibrated
        # span means the real force is somewhere above what we can read
        pinned = reading.out_of_range or measured.above_range

        # supervision and procedure logic
        jog_lin, jog_rot = mix_joystick(self._jog, cfg.motion, now)
        buttons = tuple(self._pending_buttons)
        self._pending_buttons.clear()
        result = self.controller.tick(TickInput(
            now_ms=now,
            linear_pos_mm=self.robot.linear.position,
            measured_force_n=measured.newtons,
            sensor_over_range=pinned,
            jog_linear=jog_lin,
            jog_rotary=jog_rot,
            buttons=buttons,
        ))
        for ev in result.events:
            self.events.append((now, ev))

        # motion
        if result.hard_stop:
            # fault entry: cut the pulse trains immediately, no integration
            self.robot = self.robot.halted()
        else:
            self.robot = step_axes(
                self.robot, result.linear_demand, result.rotary_demand,
                true_force, cfg.motion.payload_limit_n, cfg.service.tick_ms / 1000.0,
            )

        row = TraceRow(
            t_ms=now,
            depth_mm=self.robot.linear.position,
            angle_deg=self.robot.rotary.position,
            force_n=measured.newtons,
            raw_v=reading.volts,
            phase=result.phase.value,
            safety=result.safety.level.name,
        )
        self.trace.append(row)

        period = cfg.service.telemetry_period_ms
        if now // period > (now - self.tick_ms) // period:
            self._telemetry_pending.append(Telemetry(
                t_ms=now,
                depth_mm=row.depth_mm,
                angle_deg=row.angle_deg,
                force_n=row.force_n,
                raw_v=row.raw_v,
                phase=row.phase,
                safety=row.safety,
                last_seq=self.last_seq,
            ))

        self.ticks += 1
        return row

    def advance_to(self, t_ms: int) -> None:
        """Run ticks until session time reaches t_ms (lockstep grant)."""
        while self.now_ms < t_ms:
            self.tick()

    def drain_telemetry(self) -> list[Telemetry]:
        out = self._telemetry_pending
        self._telemetry_pending = []
        return out

    # -- summaries ---------------------------------------------------------

    def summary(self) -> SessionSummary:
        completed = sum(1 for _, ev in self.events if ev == "phase:ROTATING_RETRACT->COMPLETE")
        faults = sum(1 for _, ev in self.events if ev == "fault:safety")
        stops = sum(1 for _, ev in self.events if ev == "fault:estop")
        return SessionSummary(
            final_phase=self.controller.state.phase.value,
            ticks=self.ticks,
            completed_reps=completed,
            safety_faults=faults,
            operator_stops=stops,
        )


# --------------------------------------------------------------- scripts


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class ScriptCommand:
    """One scheduled wire command: submitted at the first tick whose
    time is >= t_ms (same rule a live client's traffic follows)."""

    t_ms: int
    line: str


SCRIPT_HEADER = "t_ms,command"


def script_to_csv(script: Iterable[ScriptCommand]) -> str:
    lines = [SCRIPT_HEADER]
    for sc in script:
        lines.append(f"{sc.t_ms},{sc.line}")
    return "\n".join(lines) + "\n"


def script_from_csv(text: str) -> list[ScriptCommand]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != SCRIPT_HEADER:
        raise ScriptError("row 1: missing or wrong header")
    script: list[ScriptCommand] = []
    prev_t = -1
    for i, line in enumerate(lines[1:], start=2):
        if "," not in line:
            raise ScriptError(f"row {i}: expected 't_ms,command'")
        tok, cmd_line = line.split(",", 1)
        try:
            t = int(tok, 10)
        except ValueError:
            raise ScriptError(f"row {i}: bad t_ms '{tok}'") from None
        if t < 0 or t < prev_t:
            raise ScriptError(f"row {i}: t_ms must be non-negative and non-decreasing")
        try:
            decode_command(cmd_line)
        except ValueError as exc:
            raise ScriptError(f"row {i}: {exc}") from None
        script.append(ScriptCommand(t, cmd_line))
        prev_t = t
    return script


def save_script(script: Iterable[ScriptCommand], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(script_to_csv(script))


def load_script(path: str) -> list[ScriptCommand]:
    with open(path, "r", encoding="utf-8") as fh:
        return script_from_csv(fh.read())


# Standard three-repetition protocol timeline (per repetition, ms from
# the repetition origin). Insertion is joystick-driven at full speed,
# dwell is cut short by the operator, retraction is automatic, and the
# repetition is closed out with an operator stop plus reset because a
# finished run must pass through a deliberate acknowledgment before the
# rig can be re-armed.
STANDARD_REP_PERIOD_MS = 32800
_ARM_AT = 0
_START_AT = 40
_JOG_FROM = 60
_JOG_UNTIL = 8860
_JOG_EVERY = 200
_DWELL_NOW_AT = 9000
_ESTOP_AT = 32600
_RESET_AT = 32660


def make_standard_script(reps: int = 3) -> list[ScriptCommand]:
    if reps < 1:
        raise ValueError("need at least one repetition")
    script: list[ScriptCommand] = []
    seq = 0

    def emit(t: int, kind: CommandKind, **kw) -> None:
        nonlocal seq
        seq += 1
        script.append(ScriptCommand(t, encode_command(Command(seq=seq, kind=kind, **kw))))

    for rep in range(reps):
        t0 = rep * STANDARD_REP_PERIOD_MS
        emit(t0 + _ARM_AT, CommandKind.ARM)
        emit(t0 + _START_AT, CommandKind.BUTTON, button="START")
        for t in range(t0 + _JOG_FROM, t0 + _JOG_UNTIL + 1, _JOG_EVERY):
            emit(t, CommandKind.JOG, x=0.0, y=1.0)
        emit(t0 + _DWELL_NOW_AT, CommandKind.BUTTON, button="DWELL_NOW")
        emit(t0 + _ESTOP_AT, CommandKind.ESTOP)
        emit(t0 + _RESET_AT, CommandKind.RESET)
    return script


@dataclass(frozen=True)
class ScriptRunResult:
    trace: tuple[TraceRow, ...]
    telemetry: tuple[Telemetry, ...]
    events: tuple[tuple[int, str], ...]
    stats: TraceStats
    rep_stats: tuple[TraceStats, ...]
    summary: SessionSummary


def run_script(session: Session, script: Sequence[ScriptCommand],
               until_ms: int | None = None, settle_ms: int = 400) -> ScriptRunResult:
    """Drive a session through a timed command script.

    Commands are injected at the first tick at or past their scheduled
    time. The run continues settle_ms past the last command unless an
    explicit end time is given.
    """
    pending = [(sc.t_ms, decode_command(sc.line)) for sc in script]
    for (a, _), (b, _) in zip(pending, pending[1:]):
        if b < a:
            raise ScriptError("script times must be non-decreasing")
    until = until_ms if until_ms is not None else (
        (pending[-1][0] if pending else 0) + settle_ms)
    telemetry: list[Telemetry] = []
    i = 0
    while session.now_ms <= until:
        while i < len(pending) and pending[i][0] <= session.now_ms:
            session.submit(pending[i][1])
            i += 1
        session.tick()
        telemetry.extend(session.drain_telemetry())
    stats = trace_statistics(session.trace)
    return ScriptRunResult(
        trace=tuple(session.trace),
        telemetry=tuple(telemetry),
        events=tuple(session.events),
        stats=stats,
        rep_stats=rep_statistics(session.trace),
        summary=session.summary(),
    )
