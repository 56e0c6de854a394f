/**
 * Newline-delimited text codec shared with the robot service.
 *
 * Client to server:
 *   CMD <seq> JOG <x> <y>      normalized jog demand, 4 decimal places
 *   CMD <seq> BUTTON <name>    operator button press
 *   CMD <seq> ARM|RESET|ESTOP  short aliases for the matching buttons
 *
 * Server to client:
 *   TLM <t_ms> <depth_mm> <angle_deg> <force_n> <raw_v> <phase> <safety> <last_seq>
 *   CFG <working_range_n> <payload_n>
 *   ACK <t_ms>
 *   ERR <code> [detail]
 */

export type ButtonName =
  | "ARM"
  | "START"
  | "DWELL_NOW"
  | "RETRACT"
  | "HOME"
  | "RESET"
  | "ESTOP";

export const BUTTON_NAMES: readonly ButtonName[] = [
  "ARM",
  "START",
  "DWELL_NOW",
  "RETRACT",
  "HOME",
  "RESET",
  "ESTOP",
];

// buttons the service also accepts in bare alias form
const ALIAS_BUTTONS: ReadonlySet<ButtonName> = new Set(["ARM", "RESET", "ESTOP"]);

const MAX_SEQ = 0xffffffff;

export interface TelemetryFrame {
  tMs: number;
  depthMm: number;
  angleDeg: number;
  forceN: number;
  rawV: number;
  phase: string;
  safety: string;
  lastSeq: number;
}

export interface ConfigEcho {
  workingRangeN: number;
  payloadN: number;
}

export interface AckFrame {
  tMs: number;
}

export interface ErrorFrame {
  code: string;
  detail: string;
}

export type ServerFrame =
  | { kind: "telemetry"; frame: TelemetryFrame }
  | { kind: "config"; config: ConfigEcho }
  | { kind: "ack"; ack: AckFrame }
  | { kind: "error"; error: ErrorFrame };

export class ProtocolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

const FLOAT_RE = /^-?\d+(\.\d+)?([eE][+-]?\d+)?$/;
const UINT_RE = /^\d+$/;

function parseFloatStrict(token: string, field: string): number {
  if (!FLOAT_RE.test(token)) {
    throw new ProtocolError(`bad ${field}: ${token}`);
  }
  const value = Number(token);
  if (!Number.isFinite(value)) {
    throw new ProtocolError(`bad ${field}: ${token}`);
  }
  return value;
}

function parseUintStrict(token: string, field: string): number {
  if (!UINT_RE.test(token)) {
    throw new ProtocolError(`bad ${field}: ${token}`);
  }
  const value = Number(token);
  if (!Number.isSafeInteger(value)) {
    throw new ProtocolError(`bad ${field}: ${token}`);
  }
  return value;
}

function checkSeq(seq: number): number {
  if (!Number.isInteger(seq) || seq < 0 || seq > MAX_SEQ) {
    throw new ProtocolError(`bad seq: ${seq}`);
  }
  return seq;
}

/** Format a normalized axis value: clamp to [-1, 1], 4 decimal places. */
export function formatAxis(value: number): string {
  if (!Number.isFinite(value)) {
    throw new ProtocolError(`bad axis value: ${value}`);
  }
  let clamped = Math.max(-1, Math.min(1, value));
  if (Object.is(clamped, -0)) {
    clamped = 0;
  }
  return clamped.toFixed(4);
}

/** Encode a jog demand line. x drives rotation, y drives insertion. */
export function encodeJog(seq: number, x: number, y: number): string {
  return `CMD ${checkSeq(seq)} JOG ${formatAxis(x)} ${formatAxis(y)}`;
}

/** Encode a button press, using the short alias form where the service allows it. */
export function encodeButton(seq: number, name: ButtonName): string {
  if (!BUTTON_NAMES.includes(name)) {
    throw new ProtocolError(`unknown button: ${name}`);
  }
  const s = checkSeq(seq);
  return ALIAS_BUTTONS.has(name) ? `CMD ${s} ${name}` : `CMD ${s} BUTTON ${name}`;
}

/** Parse one server line into a typed frame. Throws ProtocolError on anything else. */
export function decodeServerLine(line: string): ServerFrame {
  const parts = line.trim().split(/\s+/).filter((p) => p.length > 0);
  if (parts.length === 0) {
    throw new ProtocolError("empty line");
  }
  const tag = parts[0];
  switch (tag) {
    case "TLM": {
      if (parts.length !== 9) {
        throw new ProtocolError(`bad telemetry arity: ${parts.length - 1}`);
      }
      return {
        kind: "telemetry",
        frame: {
          tMs: parseUintStrict(parts[1]!, "t_ms"),
          depthMm: parseFloatStrict(parts[2]!, "depth_mm"),
          angleDeg: parseFloatStrict(parts[3]!, "angle_deg"),
          forceN: parseFloatStrict(parts[4]!, "force_n"),
          rawV: parseFloatStrict(parts[5]!, "raw_v"),
          phase: parts[6]!,
          safety: parts[7]!,
          lastSeq: parseUintStrict(parts[8]!, "last_seq"),
        },
      };
    }
    case "CFG": {
      if (parts.length !== 3) {
        throw new ProtocolError(`bad config arity: ${parts.length - 1}`);
      }
      return {
        kind: "config",
        config: {
          workingRangeN: parseFloatStrict(parts[1]!, "working_range_n"),
          payloadN: parseFloatStrict(parts[2]!, "payload_n"),
        },
      };
    }
    case "ACK": {
      if (parts.length !== 2) {
        throw new ProtocolError(`bad ack arity: ${parts.length - 1}`);
      }
      return { kind: "ack", ack: { tMs: parseUintStrict(parts[1]!, "t_ms") } };
    }
    case "ERR": {
      if (parts.length < 2) {
        throw new ProtocolError("bad error arity: 0");
      }
      return {
        kind: "error",
        error: { code: parts[1]!, detail: parts.slice(2).join(" ") },
      };
    }
    default:
      throw new ProtocolError(`unknown tag: ${tag}`);
  }
}
