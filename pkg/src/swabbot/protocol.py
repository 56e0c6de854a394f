"""Newline-delimited text protocol between console and robot service.

One message per line, fields separated by single spaces, floats with
four decimals. Client to server::

    CMD <seq> JOG <x> <y>      joystick axes, clamped to [-1, 1]
    CMD <seq> BUTTON <name>    momentary button press
    CMD <seq> ARM              alias for BUTTON ARM
    CMD <seq> RESET            alias for BUTTON RESET
    CMD <seq> ESTOP            alias for BUTTON ESTOP
    SYN <t_ms>                 lockstep: advance sim time to t_ms

Server to client::

    TLM <t_ms> <depth> <angle> <force> <volts> <phase> <safety> <last_seq>
    CFG <working_range_n> <payload_n>
    ACK <t_ms>                 lockstep grant, sim has reached t_ms
    ERR <code> [detail]

Sequence numbers are unsigned 32-bit and must increase strictly; the
session discards stale or duplicate numbers. Decoding is total: any
input line either yields a message or raises ProtocolError naming the
bad field, never any other exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

SEQ_MAX = 2**32 - 1

BUTTON_NAMES = frozenset(
    {"ARM", "START", "DWELL_NOW", "RETRACT", "HOME", "RESET", "ESTOP"}
)

_ALIAS_KINDS = frozenset({"ARM", "RESET", "ESTOP"})


class ProtocolError(ValueError):
    """Raised on any malformed message; names the offending field."""

    def __init__(self, field: str, detail: str = ""):
        self.field = field
        msg = field if not detail else f"{field}: {detail}"
        super().__init__(msg)


class CommandKind(Enum):
    JOG = "JOG"
    BUTTON = "BUTTON"
    ARM = "ARM"
    RESET = "RESET"
    ESTOP = "ESTOP"


@dataclass(frozen=True)
class Command:
    seq: int
    kind: CommandKind
    x: float = 0.0
    y: float = 0.0
    button: str | None = None


@dataclass(frozen=True)
class Telemetry:
    t_ms: int
    depth_mm: float
    angle_deg: float
    force_n: float
    raw_v: float
    phase: str
    safety: str
    last_seq: int


@dataclass(frozen=True)
class ConfigInfo:
    working_range_max_n: float
    payload_limit_n: float


@dataclass(frozen=True)
class Syn:
    t_ms: int


@dataclass(frozen=True)
class Ack:
    t_ms: int


@dataclass(frozen=True)
class ErrorMsg:
    code: str
    detail: str = ""


def _fmt(x: float) -> str:
    return format(x, ".4f")


def _parse_int(field: str, token: str, lo: int = 0, hi: int | None = None) -> int:
    try:
        value = int(token, 10)
    except ValueError:
        raise ProtocolError(field, f"not an integer: '{token}'") from None
    if value < lo or (hi is not None and value > hi):
        raise ProtocolError(field, f"out of range: {value}")
    return value


def _parse_float(field: str, token: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ProtocolError(field, f"not a number: '{token}'") from None
    if not math.isfinite(value):
        raise ProtocolError(field, f"not finite: '{token}'")
    return value


def _clamp_axis(v: float) -> float:
    return max(-1.0, min(1.0, v))


# ---------------------------------------------------------------- commands


def encode_command(cmd: Command) -> str:
    if not 0 <= cmd.seq <= SEQ_MAX:
        raise ProtocolError("seq", f"out of range: {cmd.seq}")
    head = f"CMD {cmd.seq} {cmd.kind.value}"
    if cmd.kind is CommandKind.JOG:
        return f"{head} {_fmt(_clamp_axis(cmd.x))} {_fmt(_clamp_axis(cmd.y))}"
    if cmd.kind is CommandKind.BUTTON:
        if cmd.button not in BUTTON_NAMES:
            raise ProtocolError("button", f"unknown button: {cmd.button!r}")
        return f"{head} {cmd.button}"
    return head


def decode_command(line: str) -> Command:
    parts = line.split()
    if not parts or parts[0] != "CMD":
        raise ProtocolError("prefix", "expected CMD")
    if len(parts) < 3:
        raise ProtocolError("length", "need at least seq and kind")
    seq = _parse_int("seq", parts[1], 0, SEQ_MAX)
    kind = parts[2]
    if kind == "JOG":
        if len(parts) != 5:
            raise ProtocolError("length", "JOG needs x and y")
        x = _clamp_axis(_parse_float("x", parts[3]))
        y = _clamp_axis(_parse_float("y", parts[4]))
        return Command(seq=seq, kind=CommandKind.JOG, x=x, y=y)
    if kind == "BUTTON":
        if len(parts) != 4:
            raise ProtocolError("length", "BUTTON needs a name")
        name = parts[3]
        if name not in BUTTON_NAMES:
            raise ProtocolError("button", f"unknown button: '{name}'")
        return Command(seq=seq, kind=CommandKind.BUTTON, button=name)
    if kind in _ALIAS_KINDS:
        if len(parts) != 3:
            raise ProtocolError("length", f"{kind} takes no arguments")
        return Command(seq=seq, kind=CommandKind(kind), button=kind)
    raise ProtocolError("kind", f"unknown kind: '{kind}'")


def command_button_name(cmd: Command) -> str | None:
    """Button carried by the command, whatever its wire spelling."""
    if cmd.kind is CommandKind.JOG:
        return None
    if cmd.kind is CommandKind.BUTTON:
        return cmd.button
    return cmd.kind.value


# --------------------------------------------------------------- telemetry


def encode_telemetry(tlm: Telemetry) -> str:
    return (
        f"TLM {tlm.t_ms} {_fmt(tlm.depth_mm)} {_fmt(tlm.angle_deg)} "
        f"{_fmt(tlm.force_n)} {_fmt(tlm.raw_v)} {tlm.phase} {tlm.safety} "
        f"{tlm.last_seq}"
    )


def decode_telemetry(line: str) -> Telemetry:
    parts = line.split()
    if not parts or parts[0] != "TLM":
        raise ProtocolError("prefix", "expected TLM")
    if len(parts) != 9:
        raise ProtocolError("length", f"expected 9 fields, got {len(parts)}")
    return Telemetry(
        t_ms=_parse_int("t_ms", parts[1]),
        depth_mm=_parse_float("depth_mm", parts[2]),
        angle_deg=_parse_float("angle_deg", parts[3]),
        force_n=_parse_float("force_n", parts[4]),
        raw_v=_parse_float("raw_v", parts[5]),
        phase=parts[6],
        safety=parts[7],
        last_seq=_parse_int("last_seq", parts[8], 0, SEQ_MAX),
    )


# ------------------------------------------------------- config / lockstep


def encode_config_info(info: ConfigInfo) -> str:
    return f"CFG {_fmt(info.working_range_max_n)} {_fmt(info.payload_limit_n)}"


def decode_config_info(line: str) -> ConfigInfo:
    parts = line.split()
    if not parts or parts[0] != "CFG":
        raise ProtocolError("prefix", "expected CFG")
    if len(parts) != 3:
        raise ProtocolError("length", f"expected 3 fields, got {len(parts)}")
    return ConfigInfo(
        working_range_max_n=_parse_float("working_range_max_n", parts[1]),
        payload_limit_n=_parse_float("payload_limit_n", parts[2]),
    )


def encode_syn(syn: Syn) -> str:
    return f"SYN {syn.t_ms}"


def encode_ack(ack: Ack) -> str:
    return f"ACK {ack.t_ms}"


def _decode_t_only(line: str, prefix: str) -> int:
    parts = line.split()
    if not parts or parts[0] != prefix:
        raise ProtocolError("prefix", f"expected {prefix}")
    if len(parts) != 2:
        raise ProtocolError("length", f"{prefix} takes one field")
    return _parse_int("t_ms", parts[1])


def decode_syn(line: str) -> Syn:
    return Syn(t_ms=_decode_t_only(line, "SYN"))


def decode_ack(line: str) -> Ack:
    return Ack(t_ms=_decode_t_only(line, "ACK"))


# ------------------------------------------------------------------ errors


def encode_error(err: ErrorMsg) -> str:
    if not err.code or any(c.isspace() for c in err.code):
        raise ProtocolError("code", f"bad error code: {err.code!r}")
    return f"ERR {err.code} {err.detail}".rstrip()


def decode_error(line: str) -> ErrorMsg:
    parts = line.split(maxsplit=2)
    if not parts or parts[0] != "ERR":
        raise ProtocolError("prefix", "expected ERR")
    if len(parts) < 2:
        raise ProtocolError("length", "ERR needs a code")
    detail = parts[2] if len(parts) == 3 else ""
    return ErrorMsg(code=parts[1], detail=detail)


# ------------------------------------------------------------- dispatchers


def decode_client_line(line: str) -> Command | Syn:
    """Parse one line arriving at the server."""
    head = line.split(maxsplit=1)
    if not head:
        raise ProtocolError("prefix", "empty line")
    if head[0] == "CMD":
        return decode_command(line)
    if head[0] == "SYN":
        return decode_syn(line)
    raise ProtocolError("prefix", f"unknown message: '{head[0]}'")


def decode_server_line(line: str) -> Telemetry | ConfigInfo | Ack | ErrorMsg:
    """Parse one line arriving at a client."""
    head = line.split(maxsplit=1)
    if not head:
        raise ProtocolError("prefix", "empty line")
    if head[0] == "TLM":
        return decode_telemetry(line)
    if head[0] == "CFG":
        return decode_config_info(line)
    if head[0] == "ACK":
        return decode_ack(line)
    if head[0] == "ERR":
        return decode_error(line)
    raise ProtocolError("prefix", f"unknown message: '{head[0]}'")
