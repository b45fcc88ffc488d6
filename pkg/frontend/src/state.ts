// Client-side store: catalog, per-instance topology, and the latest frame.
// All mutation flows through handleServerMessage so the data path from the
// socket is a single testable function; nothing here talks back to the
// server.

import type {
  CatalogMessage,
  FrameMessage,
  InstanceInfo,
  ServerMessage,
} from "./protocol.js";

export interface InstanceState {
  info: InstanceInfo;
  latestFrame: FrameMessage | null;
  brokenSprings: Set<number>;
}

export interface AppState {
  connected: boolean;
  integrators: CatalogMessage["integrators"];
  detectors: string[];
  instances: Map<number, InstanceState>;
  notices: string[]; // rolling toast texts (errors, auto-pause events)
}

export function initialState(): AppState {
  return {
    connected: false,
    integrators: [],
    detectors: [],
    instances: new Map(),
    notices: [],
  };
}

export function upsertInstance(state: AppState, info: InstanceInfo): InstanceState {
  const existing = state.instances.get(info.id);
  if (existing) {
    existing.info = info;
    return existing;
  }
  const created: InstanceState = { info, latestFrame: null, brokenSprings: new Set() };
  state.instances.set(info.id, created);
  return created;
}

export function liveSprings(instance: InstanceState) {
  if (!instance.brokenSprings.size) return instance.info.springs;
  return instance.info.springs.filter((s) => !instance.brokenSprings.has(s.id));
}

export function liveFaces(instance: InstanceState) {
  if (!instance.brokenSprings.size) return instance.info.faces;
  // faces die with their edge springs; the server already prunes them, so a
  // face is stale once any of its vertices' springs broke. Topology refresh
  // arrives with the next InstanceInfo; until then keep faces whose spring
  // triple is intact. Without per-face spring ids on the wire, drop nothing
  // extra here.
  return instance.info.faces;
}

function pushNotice(state: AppState, text: string) {
  state.notices.push(text);
  if (state.notices.length > 8) state.notices.shift();
}

export function handleServerMessage(state: AppState, message: ServerMessage): AppState {
  switch (message.type) {
    case "catalog": {
      state.connected = true;
      state.integrators = message.integrators;
      state.detectors = message.detectors;
      for (const info of message.instances) upsertInstance(state, info);
      break;
    }
    case "frame": {
      const instance = state.instances.get(message.instance_id);
      if (instance) {
        instance.latestFrame = message;
        for (const id of message.broken_spring_ids) instance.brokenSprings.add(id);
        instance.info.tick = message.tick;
        instance.info.sim_time = message.sim_time;
      }
      break;
    }
    case "ack": {
      if (message.instance) upsertInstance(state, message.instance);
      if (message.warnings) for (const w of message.warnings) pushNotice(state, `warning: ${w}`);
      break;
    }
    case "error": {
      pushNotice(state, `${message.code}: ${message.message}`);
      break;
    }
    case "event": {
      const instance = state.instances.get(message.instance_id);
      if (message.kind === "auto_paused") {
        if (instance) instance.info.status = "paused";
        pushNotice(state, `instance ${message.instance_id} auto-paused (${message.code ?? "?"})`);
      } else {
        pushNotice(state, `instance ${message.instance_id}: end of series`);
      }
      break;
    }
  }
  return state;
}
