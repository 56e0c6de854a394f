/**
 * Force gauge helpers. Band boundaries come from the thresholds the service
 * echoes in its CFG line, never from constants baked into the UI.
 */

import type { ConfigEcho } from "./protocol.js";

export type GaugeBand = "green" | "amber" | "red";

/** Telemetry older than this is shown as stale rather than live. */
export const STALE_AFTER_MS = 1000;

/** Fraction of headroom drawn above the payload limit so red has width. */
const SCALE_HEADROOM = 1.2;

export function classifyForce(forceN: number, thresholds: ConfigEcho): GaugeBand {
  if (forceN >= thresholds.payloadN) {
    return "red";
  }
  if (forceN > thresholds.workingRangeN) {
    return "amber";
  }
  return "green";
}

/** Position of a force value on the gauge, in [0, 1] of full scale. */
export function gaugeFraction(forceN: number, thresholds: ConfigEcho): number {
  const fullScale = thresholds.payloadN * SCALE_HEADROOM;
  if (fullScale <= 0) {
    return 0;
  }
  return Math.max(0, Math.min(1, forceN / fullScale));
}

/** True when no frame has arrived within STALE_AFTER_MS of local time nowMs. */
export function isStale(lastFrameAtMs: number | null, nowMs: number): boolean {
  return lastFrameAtMs === null || nowMs - lastFrameAtMs > STALE_AFTER_MS;
}
