import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { JoystickSample } from "../src/joystick.js";
import { JoystickDriver, KeyboardJoystick, SAMPLE_INTERVAL_MS } from "../src/joystick.js";

describe("JoystickDriver", () => {
  let samples: JoystickSample[];
  let driver: JoystickDriver;

  beforeEach(() => {
    vi.useFakeTimers();
    samples = [];
    driver = new JoystickDriver((s) => samples.push(s));
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("emits immediately on engagement with both components in one sample", () => {
    driver.engage(0.7, -0.4);
    expect(samples).toEqual([{ x: 0.7, y: -0.4 }]);
  });

  it("streams at 20 Hz or better while engaged", () => {
    driver.engage(1, 0);
    samples.length = 0;
    vi.advanceTimersByTime(1000);
    expect(samples.length).toBeGreaterThanOrEqual(1000 / SAMPLE_INTERVAL_MS);
    for (const s of samples) {
      expect(s).toEqual({ x: 1, y: 0 });
    }
  });

  it("release emits exactly one zero sample and stops the stream", () => {
    driver.engage(0.5, 0.5);
    samples.length = 0;
    driver.release();
    expect(samples).toEqual([{ x: 0, y: 0 }]);
    vi.advanceTimersByTime(1000);
    expect(samples).toEqual([{ x: 0, y: 0 }]);
    expect(driver.engaged).toBe(false);
  });

  it("release without engagement does nothing", () => {
    driver.release();
    expect(samples).toEqual([]);
  });

  it("move updates the streamed position", () => {
    driver.engage(0, 0);
    driver.move(0.25, 0.75);
    samples.length = 0;
    vi.advanceTimersByTime(SAMPLE_INTERVAL_MS);
    expect(samples[samples.length - 1]).toEqual({ x: 0.25, y: 0.75 });
  });

  it("move before engagement is ignored", () => {
    driver.move(1, 1);
    expect(samples).toEqual([]);
    expect(driver.engaged).toBe(false);
  });

  it("clamps positions to the unit square", () => {
    driver.engage(5, -5);
    expect(samples[0]).toEqual({ x: 1, y: -1 });
  });

  it("cancel stops the stream without emitting", () => {
    driver.engage(1, 1);
    samples.length = 0;
    driver.cancel();
    vi.advanceTimersByTime(1000);
    expect(samples).toEqual([]);
    expect(driver.engaged).toBe(false);
  });
});

describe("KeyboardJoystick", () => {
  let samples: JoystickSample[];
  let driver: JoystickDriver;
  let kb: KeyboardJoystick;

  beforeEach(() => {
    vi.useFakeTimers();
    samples = [];
    driver = new JoystickDriver((s) => samples.push(s));
    kb = new KeyboardJoystick(driver);
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("maps arrows to axes and combines them into a single diagonal sample", () => {
    expect(kb.keyDown("ArrowUp")).toBe(true);
    expect(samples[samples.length - 1]).toEqual({ x: 0, y: 1 });
    expect(kb.keyDown("ArrowRight")).toBe(true);
    expect(samples[samples.length - 1]).toEqual({ x: 1, y: 1 });
  });

  it("ignores auto-repeat but still claims the key", () => {
    kb.keyDown("ArrowUp");
    const count = samples.length;
    expect(kb.keyDown("ArrowUp")).toBe(true);
    expect(samples.length).toBe(count);
  });

  it("does not claim unrelated keys", () => {
    expect(kb.keyDown("a")).toBe(false);
    expect(kb.keyUp("a")).toBe(false);
    expect(samples).toEqual([]);
  });

  it("opposite arrows cancel", () => {
    kb.keyDown("ArrowLeft");
    kb.keyDown("ArrowRight");
    expect(samples[samples.length - 1]).toEqual({ x: 0, y: 0 });
    expect(driver.engaged).toBe(true);
  });

  it("releasing the last key releases the stick with one zero sample", () => {
    kb.keyDown("ArrowDown");
    samples.length = 0;
    expect(kb.keyUp("ArrowDown")).toBe(true);
    expect(samples).toEqual([{ x: 0, y: 0 }]);
    expect(driver.engaged).toBe(false);
  });

  it("partial release keeps the remaining axis", () => {
    kb.keyDown("ArrowUp");
    kb.keyDown("ArrowRight");
    kb.keyUp("ArrowUp");
    expect(samples[samples.length - 1]).toEqual({ x: 1, y: 0 });
    expect(driver.engaged).toBe(true);
  });

  it("releaseAll clears everything", () => {
    kb.keyDown("ArrowUp");
    kb.keyDown("ArrowLeft");
    samples.length = 0;
    kb.releaseAll();
    expect(samples).toEqual([{ x: 0, y: 0 }]);
    expect(driver.engaged).toBe(false);
    kb.releaseAll();
    expect(samples.length).toBe(1);
  });
});
