/**
 * DOM shell for the operator console. Builds the markup inside a root
 * element, wires pointer/keyboard input into the joystick driver, and
 * re-renders from controller state on every change.
 */

import type { SocketFactory } from "./controller.js";
import { ConsoleController } from "./controller.js";
import { classifyForce, gaugeFraction, isStale } from "./gauge.js";
import { JoystickDriver, KeyboardJoystick } from "./joystick.js";
import type { ButtonName } from "./protocol.js";

export interface AppOptions {
  url?: string;
  socketFactory?: SocketFactory;
  now?: () => number;
}

export interface ConsoleApp {
  controller: ConsoleController;
  driver: JoystickDriver;
  keyboard: KeyboardJoystick;
  render(): void;
  dispose(): void;
}

const MOTION_BUTTON_LABELS: ReadonlyArray<[ButtonName, string]> = [
  ["ARM", "Arm"],
  ["START", "Start"],
  ["DWELL_NOW", "Dwell now"],
  ["RETRACT", "Retract"],
  ["HOME", "Home"],
  ["RESET", "Reset"],
];

const MARKUP = `
<div class="console">
  <header class="console-header">
    <span class="console-title">Swab Robot Console</span>
    <span class="status" data-role="status">idle</span>
  </header>
  <div class="banner" data-role="banner" hidden>
    <span>Connection lost. Local joystick zeroed; no commands are sent while disconnected.</span>
    <button type="button" data-role="reconnect">Reconnect</button>
  </div>
  <div class="error" data-role="error" hidden></div>
  <main class="console-body">
    <section class="readouts">
      <div class="gauge" data-role="gauge">
        <div class="gauge-track">
          <div class="gauge-zone zone-green" data-role="zone-green"></div>
          <div class="gauge-zone zone-amber" data-role="zone-amber"></div>
          <div class="gauge-zone zone-red" data-role="zone-red"></div>
          <div class="gauge-fill" data-role="gauge-fill"></div>
        </div>
        <div class="gauge-value" data-role="force">--</div>
        <div class="gauge-legend" data-role="legend">waiting for thresholds</div>
      </div>
      <dl class="numbers">
        <dt>depth</dt><dd data-role="depth">--</dd>
        <dt>angle</dt><dd data-role="angle">--</dd>
        <dt>phase</dt><dd data-role="phase">--</dd>
        <dt>safety</dt><dd data-role="safety">--</dd>
      </dl>
    </section>
    <section class="controls">
      <div class="pad" data-role="pad" tabindex="0" aria-label="jog pad">
        <div class="knob" data-role="knob"></div>
      </div>
      <div class="buttons" data-role="buttons"></div>
      <button type="button" class="estop" data-role="btn-ESTOP">EMERGENCY STOP</button>
      <div class="trace-controls">
        <button type="button" data-role="record">Pause recording</button>
        <button type="button" data-role="download">Download trace CSV</button>
      </div>
      <footer class="console-footer">
        <span data-role="seq">seq 0</span>
        <span data-role="frames">0 frames</span>
      </footer>
    </section>
  </main>
</div>
`;

export function createConsole(root: HTMLElement, options: AppOptions = {}): ConsoleApp {
  root.innerHTML = MARKUP;
  const pick = <T extends HTMLElement>(role: string): T => {
    const el = root.querySelector<T>(`[data-role="${role}"]`);
    if (el === null) {
      throw new Error(`missing element: ${role}`);
    }
    return el;
  };

  const statusEl = pick<HTMLElement>("status");
  const bannerEl = pick<HTMLElement>("banner");
  const reconnectBtn = pick<HTMLButtonElement>("reconnect");
  const errorEl = pick<HTMLElement>("error");
  const gaugeEl = pick<HTMLElement>("gauge");
  const fillEl = pick<HTMLElement>("gauge-fill");
  const zoneGreen = pick<HTMLElement>("zone-green");
  const zoneAmber = pick<HTMLElement>("zone-amber");
  const zoneRed = pick<HTMLElement>("zone-red");
  const forceEl = pick<HTMLElement>("force");
  const legendEl = pick<HTMLElement>("legend");
  const depthEl = pick<HTMLElement>("depth");
  const angleEl = pick<HTMLElement>("angle");
  const phaseEl = pick<HTMLElement>("phase");
  const safetyEl = pick<HTMLElement>("safety");
  const padEl = pick<HTMLElement>("pad");
  const knobEl = pick<HTMLElement>("knob");
  const buttonsEl = pick<HTMLElement>("buttons");
  const estopBtn = pick<HTMLButtonElement>("btn-ESTOP");
  const recordBtn = pick<HTMLButtonElement>("record");
  const downloadBtn = pick<HTMLButtonElement>("download");
  const seqEl = pick<HTMLElement>("seq");
  const framesEl = pick<HTMLElement>("frames");

  const now = options.now ?? Date.now;
  const controller = new ConsoleController({
    url: options.url ?? "ws://127.0.0.1:8765",
    socketFactory: options.socketFactory,
    now,
    onChange: () => {
      onStateChange();
    },
  });
  const driver = new JoystickDriver((sample) => {
    controller.sendJog(sample.x, sample.y);
  });
  const keyboard = new KeyboardJoystick(driver);

  // ---------------------------------------------------------------- buttons

  const motionButtons = new Map<ButtonName, HTMLButtonElement>();
  for (const [name, label] of MOTION_BUTTON_LABELS) {
    const btn = document.createElement("button");
    btn.type = "button";
    btn.textContent = label;
    btn.setAttribute("data-role", `btn-${name}`);
    btn.addEventListener("click", () => {
      controller.pressButton(name);
    });
    buttonsEl.appendChild(btn);
    motionButtons.set(name, btn);
  }
  estopBtn.addEventListener("click", () => {
    controller.pressButton("ESTOP");
  });
  reconnectBtn.addEventListener("click", () => {
    controller.connect();
  });
  recordBtn.addEventListener("click", () => {
    controller.setRecording(!controller.state.recording);
  });
  downloadBtn.addEventListener("click", () => {
    if (typeof URL.createObjectURL !== "function") {
      return;
    }
    const blob = new Blob([controller.traceCsv()], { type: "text/csv" });
    const href = URL.createObjectURL(blob);
    const anchor = document.createElement("a");
    anchor.href = href;
    anchor.download = "console_trace.csv";
    anchor.click();
    URL.revokeObjectURL(href);
  });

  // ------------------------------------------------------------ jog pad

  const pointerAxes = (ev: { clientX: number; clientY: number }) => {
    const rect = padEl.getBoundingClientRect();
    const w = rect.width > 0 ? rect.width : 1;
    const h = rect.height > 0 ? rect.height : 1;
    const nx = ((ev.clientX - rect.left) / w) * 2 - 1;
    const ny = -(((ev.clientY - rect.top) / h) * 2 - 1);
    return {
      x: Math.max(-1, Math.min(1, nx)),
      y: Math.max(-1, Math.min(1, ny)),
    };
  };
  padEl.addEventListener("pointerdown", (ev: Event) => {
    const pe = ev as PointerEvent;
    if (typeof padEl.setPointerCapture === "function" && typeof pe.pointerId === "number") {
      try {
        padEl.setPointerCapture(pe.pointerId);
      } catch {
        // capture is a nicety; dragging still works without it
      }
    }
    const axes = pointerAxes(pe);
    driver.engage(axes.x, axes.y);
    ev.preventDefault();
    renderKnob();
  });
  padEl.addEventListener("pointermove", (ev: Event) => {
    if (!driver.engaged) {
      return;
    }
    const axes = pointerAxes(ev as PointerEvent);
    driver.move(axes.x, axes.y);
    renderKnob();
  });
  const endDrag = () => {
    driver.release();
    renderKnob();
  };
  padEl.addEventListener("pointerup", endDrag);
  padEl.addEventListener("pointercancel", endDrag);

  // -------------------------------------------------------- keyboard input

  const onKeyDown = (ev: KeyboardEvent) => {
    if (keyboard.keyDown(ev.key)) {
      ev.preventDefault();
    }
    renderKnob();
  };
  const onKeyUp = (ev: KeyboardEvent) => {
    if (keyboard.keyUp(ev.key)) {
      ev.preventDefault();
    }
    renderKnob();
  };
  const onWindowBlur = () => {
    keyboard.releaseAll();
    renderKnob();
  };
  window.addEventListener("keydown", onKeyDown);
  window.addEventListener("keyup", onKeyUp);
  window.addEventListener("blur", onWindowBlur);

  // ------------------------------------------------------------- rendering

  function renderKnob(): void {
    const pos = controller.state.joystick;
    knobEl.style.left = `${50 + pos.x * 40}%`;
    knobEl.style.top = `${50 - pos.y * 40}%`;
  }

  function render(): void {
    const st = controller.state;
    statusEl.textContent = st.connection;
    statusEl.setAttribute("data-connection", st.connection);
    bannerEl.hidden = st.connection !== "disconnected";
    errorEl.hidden = st.lastError === null;
    errorEl.textContent = st.lastError ?? "";

    const thresholds = st.thresholds;
    if (thresholds !== null) {
      const greenFrac = gaugeFraction(thresholds.workingRangeN, thresholds);
      const amberFrac = gaugeFraction(thresholds.payloadN, thresholds) - greenFrac;
      zoneGreen.style.width = `${(greenFrac * 100).toFixed(1)}%`;
      zoneAmber.style.left = `${(greenFrac * 100).toFixed(1)}%`;
      zoneAmber.style.width = `${(amberFrac * 100).toFixed(1)}%`;
      zoneRed.style.left = `${((greenFrac + amberFrac) * 100).toFixed(1)}%`;
      zoneRed.style.width = `${((1 - greenFrac - amberFrac) * 100).toFixed(1)}%`;
      legendEl.textContent =
        `green 0–${thresholds.workingRangeN.toFixed(1)} N · ` +
        `amber ${thresholds.workingRangeN.toFixed(1)}–${thresholds.payloadN.toFixed(1)} N · ` +
        `red ≥ ${thresholds.payloadN.toFixed(1)} N`;
    }

    const stale = isStale(st.lastFrameAtMs, now());
    gaugeEl.classList.toggle("stale", stale);
    gaugeEl.setAttribute("data-stale", stale ? "true" : "false");
    if (st.telemetry !== null && thresholds !== null) {
      const band = classifyForce(st.telemetry.forceN, thresholds);
      gaugeEl.classList.toggle("band-green", band === "green");
      gaugeEl.classList.toggle("band-amber", band === "amber");
      gaugeEl.classList.toggle("band-red", band === "red");
      gaugeEl.setAttribute("data-band", band);
      fillEl.style.width = `${(gaugeFraction(st.telemetry.forceN, thresholds) * 100).toFixed(1)}%`;
      forceEl.textContent = `${st.telemetry.forceN.toFixed(2)} N`;
    }
    if (st.telemetry !== null) {
      depthEl.textContent = `${st.telemetry.depthMm.toFixed(1)} mm`;
      angleEl.textContent = `${st.telemetry.angleDeg.toFixed(1)} deg`;
      phaseEl.textContent = st.telemetry.phase;
      safetyEl.textContent = st.telemetry.safety;
    }

    for (const [name, btn] of motionButtons) {
      btn.disabled = !controller.buttonEnabled(name);
    }
    estopBtn.disabled = !controller.buttonEnabled("ESTOP");
    recordBtn.textContent = st.recording ? "Pause recording" : "Resume recording";
    seqEl.textContent = `seq ${st.seq}`;
    framesEl.textContent = `${st.frames.length} frames`;
    renderKnob();
  }

  function onStateChange(): void {
    // a drop mid-drag must stop the local stream: nothing may be sent while
    // disconnected, and the knob snaps back to center
    if (controller.state.connection === "disconnected" && driver.engaged) {
      driver.cancel();
    }
    render();
  }

  // periodic re-render so staleness shows even when no frames arrive
  const staleTimer = setInterval(render, 250);

  render();

  return {
    controller,
    driver,
    keyboard,
    render,
    dispose(): void {
      clearInterval(staleTimer);
      window.removeEventListener("keydown", onKeyDown);
      window.removeEventListener("keyup", onKeyUp);
      window.removeEventListener("blur", onWindowBlur);
      driver.cancel();
      controller.dispose();
    },
  };
}
