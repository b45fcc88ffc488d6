// Control panel: every widget translates straight into a protocol message
// for the active instance; server errors surface as toasts via the store.

import type { Connection } from "./connection.js";
import { messages, ParamsPatch } from "./protocol.js";
import type { AppState } from "./state.js";
import type { ShadingMode } from "./drawlist.js";

export interface ControlHooks {
  activeInstance(): number | null;
  addView(instanceId: number): void;
  addComparison(instanceId: number, integrator: string): void;
  openPlayback(path: string): void;
  setShading(mode: ShadingMode): void;
  setLightAngle(radians: number): void;
  setShowSprings(show: boolean): void;
}

function row(label: string, control: HTMLElement): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "control-row";
  const span = document.createElement("span");
  span.textContent = label;
  wrap.append(span, control);
  return wrap;
}

function slider(min: number, max: number, step: number, value: number,
                onCommit: (value: number) => void): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "range";
  input.min = String(min);
  input.max = String(max);
  input.step = String(step);
  input.value = String(value);
  input.addEventListener("change", () => onCommit(Number(input.value)));
  return input;
}

export class ControlPanel {
  readonly element: HTMLElement;
  private integratorSelect = document.createElement("select");
  private detectorSelect = document.createElement("select");
  private noticeBox = document.createElement("div");

  constructor(private app: AppState, private connection: Connection,
              private hooks: ControlHooks) {
    this.element = document.createElement("div");
    this.element.className = "controls";
    this.build();
  }

  private sendParams(patch: ParamsPatch): void {
    const id = this.hooks.activeInstance();
    if (id !== null) this.connection.request(messages.setParams(id, patch));
  }

  private build(): void {
    const el = this.element;

    const transport = document.createElement("div");
    transport.className = "button-row";
    const pause = document.createElement("button");
    pause.textContent = "pause";
    pause.onclick = () => {
      const id = this.hooks.activeInstance();
      if (id !== null) this.connection.request(messages.pause(id));
    };
    const resume = document.createElement("button");
    resume.textContent = "resume";
    resume.onclick = () => {
      const id = this.hooks.activeInstance();
      if (id !== null) this.connection.request(messages.resume(id));
    };
    transport.append(pause, resume);
    el.append(transport);

    el.append(row("gravity y", slider(-20, 5, 0.1, -9.81,
      (v) => this.sendParams({ gravity: [0, v, 0] }))));
    el.append(row("stiffness", slider(10, 1000, 10, 200,
      (v) => this.sendParams({ hook_constant: v }))));
    el.append(row("drag", slider(0, 2, 0.01, 0.1,
      (v) => this.sendParams({ drag_coefficient: v }))));
    el.append(row("pressure", slider(0, 30, 0.5, 5,
      (v) => this.sendParams({ pressure_coefficient: v }))));
    el.append(row("particles", slider(8, 128, 2, 32,
      (v) => this.sendParams({ particle_count: Math.round(v) }))));
    el.append(row("dt override (ms)", slider(0, 30, 1, 0, (v) => {
      this.sendParams({ time_step_override: v <= 0 ? null : v / 1000 });
    })));

    this.integratorSelect.onchange = () => {
      const id = this.hooks.activeInstance();
      if (id !== null) {
        this.connection.request(messages.swapAlgorithm(id, "integrator", this.integratorSelect.value));
      }
    };
    el.append(row("integrator", this.integratorSelect));
    this.detectorSelect.onchange = () => {
      const id = this.hooks.activeInstance();
      if (id !== null) {
        this.connection.request(messages.swapAlgorithm(id, "detector", this.detectorSelect.value));
      }
    };
    el.append(row("detector", this.detectorSelect));

    const shading = document.createElement("select");
    for (const mode of ["wireframe", "flat", "smooth"]) {
      const option = document.createElement("option");
      option.value = mode;
      option.textContent = mode;
      shading.append(option);
    }
    shading.onchange = () => this.hooks.setShading(shading.value as ShadingMode);
    el.append(row("shading", shading));
    el.append(row("light angle", slider(0, 6.28, 0.05, Math.PI / 4,
      (v) => this.hooks.setLightAngle(v))));
    const springsToggle = document.createElement("input");
    springsToggle.type = "checkbox";
    springsToggle.checked = true;
    springsToggle.onchange = () => this.hooks.setShowSprings(springsToggle.checked);
    el.append(row("show springs", springsToggle));

    const views = document.createElement("div");
    views.className = "button-row";
    const addView = document.createElement("button");
    addView.textContent = "add view";
    addView.onclick = () => {
      const id = this.hooks.activeInstance();
      if (id !== null) this.hooks.addView(id);
    };
    const addAlgo = document.createElement("button");
    addAlgo.textContent = "add algorithm instance";
    addAlgo.onclick = () => {
      const id = this.hooks.activeInstance();
      if (id !== null) this.hooks.addComparison(id, this.integratorSelect.value);
    };
    views.append(addView, addAlgo);
    el.append(views);

    const pathInput = document.createElement("input");
    pathInput.type = "text";
    pathInput.placeholder = "server-side path (.sbstate / .sbseries)";
    el.append(row("path", pathInput));

    const persistence = document.createElement("div");
    persistence.className = "button-row";
    const saveState = document.createElement("button");
    saveState.textContent = "save state";
    saveState.onclick = () => {
      const id = this.hooks.activeInstance();
      if (id !== null && pathInput.value) {
        this.connection.request(messages.saveState(id, pathInput.value));
      }
    };
    const startSeries = document.createElement("button");
    startSeries.textContent = "record";
    startSeries.onclick = () => {
      const id = this.hooks.activeInstance();
      if (id !== null) this.connection.request(messages.startSeries(id));
    };
    const stopSeries = document.createElement("button");
    stopSeries.textContent = "stop recording";
    stopSeries.onclick = () => {
      const id = this.hooks.activeInstance();
      if (id !== null && pathInput.value) {
        this.connection.request(messages.stopSeries(id, pathInput.value));
      }
    };
    persistence.append(saveState, startSeries, stopSeries);
    el.append(persistence);

    const playback = document.createElement("div");
    playback.className = "button-row";
    const load = document.createElement("button");
    load.textContent = "play series";
    load.onclick = () => {
      if (pathInput.value) this.hooks.openPlayback(pathInput.value);
    };
    const step = document.createElement("button");
    step.textContent = "step playback";
    step.onclick = () => {
      const id = this.hooks.activeInstance();
      if (id !== null) this.connection.request(messages.stepPlayback(id));
    };
    playback.append(load, step);
    el.append(playback);

    this.noticeBox.className = "notices";
    el.append(this.noticeBox);
  }

  refresh(): void {
    const fill = (select: HTMLSelectElement, names: string[]) => {
      const current = select.value;
      if (select.options.length !== names.length) {
        select.innerHTML = "";
        for (const name of names) {
          const option = document.createElement("option");
          option.value = name;
          option.textContent = name;
          select.append(option);
        }
      }
      if (names.includes(current)) select.value = current;
    };
    fill(this.integratorSelect, this.app.integrators.map((i) => i.name));
    fill(this.detectorSelect, this.app.detectors);
    this.noticeBox.textContent = this.app.notices.slice(-4).join("\n");
  }
}
