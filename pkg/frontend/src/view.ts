// One canvas panel bound to an instance subscription: renders the latest
// frame on animation ticks and turns pointer gestures into orbit/zoom or
// drag-particle messages.

import { defaultCamera, dolly, orbit, project, unproject } from "./camera.js";
import type { Connection } from "./connection.js";
import { buildDrawList, pickParticle, ShadingMode, ViewState } from "./drawlist.js";
import { messages } from "./protocol.js";
import { paint } from "./renderer.js";
import { AppState, liveSprings } from "./state.js";

const DRAG_STIFFNESS = 40.0;
const DRAG_STEPS = 40;        // force outlives the ~30 Hz message cadence
const DRAG_SEND_INTERVAL = 33; // ms, <= 30 Hz

export class ViewPanel {
  readonly element: HTMLElement;
  private canvas: HTMLCanvasElement;
  private ctx: CanvasRenderingContext2D;
  private view: ViewState;
  private dragging: { particleId: number; depth: number } | null = null;
  private lastDragSent = 0;
  private orbiting = false;
  private lastPointer: [number, number] = [0, 0];

  constructor(private app: AppState, private connection: Connection,
              readonly instanceId: number, dimension: number, title: string) {
    this.element = document.createElement("div");
    this.element.className = "view-panel";
    const label = document.createElement("div");
    label.className = "view-label";
    label.textContent = title;
    this.canvas = document.createElement("canvas");
    this.canvas.width = 520;
    this.canvas.height = 390;
    this.element.append(label, this.canvas);
    this.ctx = this.canvas.getContext("2d")!;
    this.view = {
      instanceId,
      camera: defaultCamera(dimension),
      shading: dimension === 3 ? "flat" : "wireframe",
      showSprings: true,
      showFaces: true,
      lightAngle: Math.PI / 4,
      width: this.canvas.width,
      height: this.canvas.height,
    };
    this.bindPointer();
  }

  setShading(mode: ShadingMode): void {
    this.view.shading = mode;
  }

  setLightAngle(radians: number): void {
    this.view.lightAngle = radians;
  }

  toggleSprings(show: boolean): void {
    this.view.showSprings = show;
  }

  private instance() {
    return this.app.instances.get(this.instanceId) ?? null;
  }

  private bindPointer(): void {
    this.canvas.addEventListener("pointerdown", (ev) => {
      const rect = this.canvas.getBoundingClientRect();
      const x = ev.clientX - rect.left;
      const y = ev.clientY - rect.top;
      const instance = this.instance();
      const frame = instance?.latestFrame;
      if (frame && instance!.info.status === "running") {
        const picked = pickParticle(frame, this.view, x, y);
        if (picked !== null) {
          const depth = project(this.view.camera, this.view.width, this.view.height,
                                frame.positions[picked]).depth;
          this.dragging = { particleId: picked, depth };
          this.canvas.setPointerCapture(ev.pointerId);
          this.sendDrag(x, y, true);
          return;
        }
      }
      this.orbiting = true;
      this.lastPointer = [x, y];
      this.canvas.setPointerCapture(ev.pointerId);
    });

    this.canvas.addEventListener("pointermove", (ev) => {
      const rect = this.canvas.getBoundingClientRect();
      const x = ev.clientX - rect.left;
      const y = ev.clientY - rect.top;
      if (this.dragging) {
        this.sendDrag(x, y, false);
      } else if (this.orbiting) {
        const [lx, ly] = this.lastPointer;
        this.view.camera = orbit(this.view.camera, (x - lx) * 0.008, (y - ly) * 0.008);
        this.lastPointer = [x, y];
      }
    });

    const release = () => {
      if (this.dragging) {
        // terminating message: zero remaining steps clears the drag input
        this.connection.fire(messages.drag(
          this.instanceId, this.dragging.particleId, [0, 0, 0], DRAG_STIFFNESS, 0));
        this.dragging = null;
      }
      this.orbiting = false;
    };
    this.canvas.addEventListener("pointerup", release);
    this.canvas.addEventListener("pointercancel", release);

    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.view.camera = dolly(this.view.camera, ev.deltaY > 0 ? 1.1 : 0.9);
    }, { passive: false });
  }

  private sendDrag(x: number, y: number, force: boolean): void {
    if (!this.dragging) return;
    const now = performance.now();
    if (!force && now - this.lastDragSent < DRAG_SEND_INTERVAL) return;
    this.lastDragSent = now;
    const target = unproject(this.view.camera, this.view.width, this.view.height,
                             x, y, this.dragging.depth);
    this.connection.fire(messages.drag(
      this.instanceId, this.dragging.particleId, target, DRAG_STIFFNESS, DRAG_STEPS));
  }

  render(): void {
    const instance = this.instance();
    if (!instance || !instance.latestFrame) {
      this.ctx.fillStyle = "#1e272e";
      this.ctx.fillRect(0, 0, this.view.width, this.view.height);
      this.ctx.fillStyle = "#dcdde1";
      this.ctx.fillText("waiting for frames...", 16, 24);
      return;
    }
    const list = buildDrawList(instance.latestFrame, liveSprings(instance),
                               instance.info.faces, this.view);
    paint(this.ctx, this.view.width, this.view.height, list);
    this.ctx.fillStyle = "#dcdde1";
    this.ctx.font = "11px monospace";
    const info = instance.info;
    this.ctx.fillText(
      `#${info.id} ${info.integrator} ${info.status} tick=${info.tick} t=${info.sim_time.toFixed(3)}s`,
      8, this.view.height - 8);
  }
}
