/**
 * Connection and command logic for the operator console.
 *
 * Invariants enforced here:
 *  - commands are sent only while the socket is open; a drag during a
 *    disconnect updates local state but emits nothing
 *  - sequence numbers are strictly increasing across jogs and buttons
 *  - after ESTOP, motion commands are refused until RESET (zero jogs still
 *    pass so a pointer release always lands on the wire)
 *  - the displayed state is only ever what the service reported
 */

import type { ButtonName, ServerFrame, TelemetryFrame } from "./protocol.js";
import { ProtocolError, decodeServerLine, encodeButton, encodeJog } from "./protocol.js";
import type { ConsoleState } from "./state.js";
import { initialState } from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ControllerOptions {
  url: string;
  socketFactory?: SocketFactory;
  now?: () => number;
  onChange?: (state: ConsoleState) => void;
}

export const TRACE_HEADER = "t_ms,depth_mm,angle_deg,force_n,raw_v,phase,safety";

const MOTION_BUTTONS: ReadonlySet<ButtonName> = new Set([
  "ARM",
  "START",
  "DWELL_NOW",
  "RETRACT",
  "HOME",
]);

function defaultSocketFactory(url: string): SocketLike {
  return new WebSocket(url) as unknown as SocketLike;
}

export class ConsoleController {
  readonly state: ConsoleState;

  private readonly url: string;
  private readonly socketFactory: SocketFactory;
  private readonly now: () => number;
  private readonly onChange: (state: ConsoleState) => void;
  private sock: SocketLike | null = null;

  constructor(options: ControllerOptions) {
    this.state = initialState();
    this.url = options.url;
    this.socketFactory = options.socketFactory ?? defaultSocketFactory;
    this.now = options.now ?? Date.now;
    this.onChange = options.onChange ?? (() => {});
  }

  get connected(): boolean {
    return this.state.connection === "connected";
  }

  connect(): void {
    if (this.state.connection === "connected" || this.state.connection === "connecting") {
      return;
    }
    this.state.connection = "connecting";
    this.state.lastError = null;
    const sock = this.socketFactory(this.url);
    this.sock = sock;
    sock.onopen = () => {
      this.state.connection = "connected";
      this.notify();
    };
    sock.onmessage = (event) => {
      for (const line of String(event.data).split("\n")) {
        if (line.trim().length > 0) {
          this.handleLine(line);
        }
      }
    };
    sock.onclose = () => {
      this.handleDrop();
    };
    sock.onerror = () => {
      this.handleDrop();
    };
    this.notify();
  }

  /**
   * Jog demand from the joystick. Returns true when a command was sent.
   * While the ESTOP lock is active only zero demands go out, so the
   * release-always-sends-zero ordering survives an ESTOP mid-drag.
   */
  sendJog(x: number, y: number): boolean {
    this.state.joystick = { x, y };
    if (!this.connected || this.sock === null) {
      this.notify();
      return false;
    }
    if (this.state.estopLocked && (x !== 0 || y !== 0)) {
      this.notify();
      return false;
    }
    this.sock.send(encodeJog(this.nextSeq(), x, y));
    this.notify();
    return true;
  }

  /** Press a named button. Refused while disabled; returns true when sent. */
  pressButton(name: ButtonName): boolean {
    if (!this.buttonEnabled(name) || this.sock === null) {
      return false;
    }
    this.sock.send(encodeButton(this.nextSeq(), name));
    if (name === "ESTOP") {
      this.state.estopLocked = true;
    } else if (name === "RESET") {
      this.state.estopLocked = false;
    }
    this.notify();
    return true;
  }

  /**
   * Button enablement shown in the UI. ESTOP is always available while
   * connected; everything else follows the latest reported phase, and the
   * ESTOP lock narrows the set to RESET until it clears. Safety level is
   * deliberately not consulted: retraction stays available under over-range.
   */
  buttonEnabled(name: ButtonName): boolean {
    if (!this.connected) {
      return false;
    }
    if (name === "ESTOP") {
      return true;
    }
    if (this.state.estopLocked) {
      return name === "RESET";
    }
    if (MOTION_BUTTONS.has(name) && this.state.telemetry === null) {
      // no phase reported yet: only ESTOP and RESET are safe guesses
      return false;
    }
    const phase = this.state.telemetry?.phase ?? "IDLE";
    switch (name) {
      case "ARM":
      case "HOME":
        return phase === "IDLE";
      case "START":
        return phase === "ALIGN_CHECK";
      case "DWELL_NOW":
        return phase === "INSERTING";
      case "RETRACT":
        return phase === "DWELL";
      case "RESET":
        return phase === "FAULT";
      default:
        return false;
    }
  }

  setRecording(flag: boolean): void {
    this.state.recording = flag;
    this.notify();
  }

  clearTrace(): void {
    this.state.frames = [];
    this.notify();
  }

  /** Recorded telemetry as CSV, matching the service's trace file layout. */
  traceCsv(): string {
    const rows = this.state.frames.map((f) =>
      [
        String(f.tMs),
        f.depthMm.toFixed(4),
        f.angleDeg.toFixed(4),
        f.forceN.toFixed(4),
        f.rawV.toFixed(4),
        f.phase,
        f.safety,
      ].join(","),
    );
    return [TRACE_HEADER, ...rows].join("\n") + "\n";
  }

  disconnect(): void {
    const sock = this.sock;
    this.sock = null;
    if (sock !== null) {
      sock.onclose = null;
      sock.onerror = null;
      sock.close();
    }
    if (this.state.connection !== "idle") {
      this.state.connection = "disconnected";
    }
    this.zeroJoystickLocally();
    this.notify();
  }

  dispose(): void {
    this.disconnect();
  }

  private nextSeq(): number {
    this.state.seq += 1;
    return this.state.seq;
  }

  private handleDrop(): void {
    if (this.sock === null) {
      return;
    }
    this.sock = null;
    this.state.connection = "disconnected";
    this.zeroJoystickLocally();
    this.notify();
  }

  private zeroJoystickLocally(): void {
    this.state.joystick = { x: 0, y: 0 };
  }

  private handleLine(line: string): void {
    const frame = this.decodeOrReport(line);
    if (frame === null) {
      return;
    }
    switch (frame.kind) {
      case "telemetry":
        this.acceptTelemetry(frame.frame);
        break;
      case "config":
        this.state.thresholds = frame.config;
        break;
      case "ack":
        break;
      case "error":
        this.state.lastError = frame.error.detail
          ? `${frame.error.code}: ${frame.error.detail}`
          : frame.error.code;
        break;
    }
    this.notify();
  }

  private decodeOrReport(line: string): ServerFrame | null {
    try {
      return decodeServerLine(line);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.state.lastError = err.message;
        this.notify();
        return null;
      }
      throw err;
    }
  }

  private acceptTelemetry(frame: TelemetryFrame): void {
    this.state.telemetry = frame;
    this.state.lastFrameAtMs = this.now();
    if (this.state.recording) {
      this.state.frames.push(frame);
    }
  }

  private notify(): void {
    this.onChange(this.state);
  }
}
