// Application entry: connect to the server, keep one store, lay out view
// panels plus the control column, and pump renders on animation frames.

import { Connection } from "./connection.js";
import { ControlPanel } from "./controls.js";
import { messages } from "./protocol.js";
import { AppState, handleServerMessage, initialState } from "./state.js";
import { ViewPanel } from "./view.js";

const app: AppState = initialState();
const views: ViewPanel[] = [];
let activeInstance: number | null = null;

const url = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
const connection = new Connection(url, (u) => new WebSocket(u));

const banner = document.createElement("div");
banner.className = "banner";
banner.textContent = "connecting...";

const viewsBox = document.createElement("div");
viewsBox.className = "views";

function addViewPanel(instanceId: number, dimension: number, title: string): void {
  const panel = new ViewPanel(app, connection, instanceId, dimension, title);
  views.push(panel);
  viewsBox.append(panel.element);
  connection.subscribe(instanceId, 30);
  activeInstance = instanceId;
}

const controls = new ControlPanel(app, connection, {
  activeInstance: () => activeInstance,
  addView(instanceId) {
    // same physics, one more subscription and canvas
    const info = app.instances.get(instanceId)?.info;
    connection.request(messages.addInstance(instanceId, "view")).then(() => {
      addViewPanel(instanceId, info?.dimension ?? 2, `view of #${instanceId}`);
    });
  },
  addComparison(instanceId, integrator) {
    connection.request(messages.addInstance(instanceId, "new_algorithm", integrator))
      .then((reply) => {
        if (reply.type === "ack" && reply.instance) {
          addViewPanel(reply.instance.id, reply.instance.dimension,
                       `#${reply.instance.id} ${integrator}`);
          connection.request(messages.start(reply.instance.id)).catch(() => {});
        }
      }).catch(() => {});
  },
  openPlayback(path) {
    connection.request(messages.startPlayback(path)).then((reply) => {
      if (reply.type === "ack" && reply.instance) {
        addViewPanel(reply.instance.id, reply.instance.dimension,
                     `playback #${reply.instance.id}`);
      }
    }).catch(() => {});
  },
  setShading(mode) {
    for (const view of views) view.setShading(mode);
  },
  setLightAngle(radians) {
    for (const view of views) view.setLightAngle(radians);
  },
  setShowSprings(show) {
    for (const view of views) view.toggleSprings(show);
  },
});

connection.onStatus = (connected) => {
  banner.textContent = connected ? "" : "connection lost - reconnecting...";
  banner.classList.toggle("hidden", connected);
};

let bootstrapped = false;
connection.onMessage = (message) => {
  handleServerMessage(app, message);
  if (message.type === "catalog" && !bootstrapped) {
    bootstrapped = true;
    const existing = [...app.instances.values()];
    if (existing.length) {
      for (const instance of existing) {
        addViewPanel(instance.info.id, instance.info.dimension, `#${instance.info.id}`);
      }
    } else {
      connection.request(messages.create(2)).then((reply) => {
        if (reply.type === "ack" && reply.instance) {
          addViewPanel(reply.instance.id, reply.instance.dimension, `#${reply.instance.id} default`);
          connection.request(messages.start(reply.instance.id)).catch(() => {});
        }
      }).catch(() => {});
    }
  }
  controls.refresh();
};

function frameLoop(): void {
  for (const view of views) view.render();
  requestAnimationFrame(frameLoop);
}

const root = document.getElementById("app")!;
const layout = document.createElement("div");
layout.className = "layout";
layout.append(viewsBox, controls.element);
root.append(banner, layout);

connection.connect();
requestAnimationFrame(frameLoop);
