/** Console-side state. Everything shown on screen is derived from this record. */

import type { ConfigEcho, TelemetryFrame } from "./protocol.js";

export type ConnectionStatus = "idle" | "connecting" | "connected" | "disconnected";

export interface JoystickPosition {
  x: number;
  y: number;
}

export interface ConsoleState {
  /** Socket lifecycle; "disconnected" means a previous session dropped. */
  connection: ConnectionStatus;
  /** Force thresholds echoed by the service; null until the CFG line arrives. */
  thresholds: ConfigEcho | null;
  /** Most recent telemetry frame; the UI never invents values beyond it. */
  telemetry: TelemetryFrame | null;
  /** Local wall-clock time the last frame arrived, for staleness display. */
  lastFrameAtMs: number | null;
  /** Last jog demand sent (or zeroed locally on disconnect). */
  joystick: JoystickPosition;
  /** Last command sequence number used; the next command uses seq + 1. */
  seq: number;
  /** True after ESTOP is pressed, until RESET; motion controls stay locked. */
  estopLocked: boolean;
  /** Whether incoming telemetry is appended to the local trace. */
  recording: boolean;
  /** Recorded frames, in arrival order. */
  frames: TelemetryFrame[];
  /** Last ERR line or decode failure, for the status banner. */
  lastError: string | null;
}

export function initialState(): ConsoleState {
  return {
    connection: "idle",
    thresholds: null,
    telemetry: null,
    lastFrameAtMs: null,
    joystick: { x: 0, y: 0 },
    seq: 0,
    estopLocked: false,
    recording: true,
    frames: [],
    lastError: null,
  };
}
