/**
 * Virtual joystick driver. While engaged it streams the current position to
 * its sink on a fixed interval (20 Hz by default) so the service's dead-man
 * timer keeps seeing fresh demands; releasing emits exactly one zero sample
 * and stops the stream.
 */

export interface JoystickSample {
  x: number;
  y: number;
}

export type SampleSink = (sample: JoystickSample) => void;

/** 20 Hz while engaged; the service treats demands older than 300 ms as stale. */
export const SAMPLE_INTERVAL_MS = 50;

function clampAxis(value: number): number {
  if (!Number.isFinite(value)) {
    return 0;
  }
  return Math.max(-1, Math.min(1, value));
}

export class JoystickDriver {
  private timer: ReturnType<typeof setInterval> | null = null;
  private x = 0;
  private y = 0;

  constructor(
    private readonly sink: SampleSink,
    private readonly intervalMs: number = SAMPLE_INTERVAL_MS,
  ) {}

  get engaged(): boolean {
    return this.timer !== null;
  }

  get position(): JoystickSample {
    return { x: this.x, y: this.y };
  }

  /** Start (or update) engagement at the given position; emits immediately. */
  engage(x: number, y: number): void {
    this.x = clampAxis(x);
    this.y = clampAxis(y);
    if (this.timer === null) {
      this.timer = setInterval(() => {
        this.sink({ x: this.x, y: this.y });
      }, this.intervalMs);
    }
    this.sink({ x: this.x, y: this.y });
  }

  /** Update position while engaged; ignored when released. */
  move(x: number, y: number): void {
    if (this.timer === null) {
      return;
    }
    this.engage(x, y);
  }

  /** Stop the stream and emit exactly one zero sample. */
  release(): void {
    if (this.timer === null) {
      return;
    }
    clearInterval(this.timer);
    this.timer = null;
    this.x = 0;
    this.y = 0;
    this.sink({ x: 0, y: 0 });
  }

  /** Stop without emitting; for teardown when the socket is already gone. */
  cancel(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.x = 0;
    this.y = 0;
  }
}

// arrow-key fallback: right/left drive rotation, up/down drive insertion
const KEY_AXES: Readonly<Record<string, JoystickSample>> = {
  ArrowRight: { x: 1, y: 0 },
  ArrowLeft: { x: -1, y: 0 },
  ArrowUp: { x: 0, y: 1 },
  ArrowDown: { x: 0, y: -1 },
};

export class KeyboardJoystick {
  private readonly pressed = new Set<string>();

  constructor(private readonly driver: JoystickDriver) {}

  /** Returns true when the key was consumed (an arrow key, newly pressed). */
  keyDown(key: string): boolean {
    if (!(key in KEY_AXES) || this.pressed.has(key)) {
      return key in KEY_AXES;
    }
    this.pressed.add(key);
    this.apply();
    return true;
  }

  /** Returns true when the key was consumed. */
  keyUp(key: string): boolean {
    if (!this.pressed.delete(key)) {
      return false;
    }
    this.apply();
    return true;
  }

  /** Release everything, e.g. when the window loses focus. */
  releaseAll(): void {
    if (this.pressed.size === 0) {
      return;
    }
    this.pressed.clear();
    this.driver.release();
  }

  private apply(): void {
    if (this.pressed.size === 0) {
      this.driver.release();
      return;
    }
    let x = 0;
    let y = 0;
    for (const key of this.pressed) {
      const axes = KEY_AXES[key]!;
      x += axes.x;
      y += axes.y;
    }
    this.driver.engage(clampAxis(x), clampAxis(y));
  }
}
