// Message types for the /ws control protocol (docs/protocol.md).
// The UI builds every outgoing message through the constructors below, so a
// single test can check conformance against the documented schema.

export type Vec3 = [number, number, number];

export interface IntegratorInfo {
  name: string;
  time_step: number;
}

export interface SpringInfo {
  id: number;
  head: number;
  tail: number;
  kind: string;
}

export interface FaceInfo {
  id: number;
  vertices: [number, number, number];
}

export interface InstanceInfo {
  id: number;
  status: "running" | "paused" | "playback";
  integrator: string;
  detector: string;
  dimension: number;
  particle_count: number;
  tick: number;
  sim_time: number;
  springs: SpringInfo[];
  faces: FaceInfo[];
}

export interface CatalogMessage {
  type: "catalog";
  integrators: IntegratorInfo[];
  detectors: string[];
  instances: InstanceInfo[];
}

export interface FrameMessage {
  type: "frame";
  instance_id: number;
  tick: number;
  sim_time: number;
  positions: Vec3[];
  velocities: Vec3[];
  broken_spring_ids: number[];
  diagnostics: { energy: number; volume: number | null };
}

export interface AckMessage {
  type: "ack";
  request_id?: string;
  instance_id?: number;
  instance?: InstanceInfo;
  path?: string;
  frame_count?: number;
  warnings?: string[];
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
  request_id?: string;
}

export interface EventMessage {
  type: "event";
  kind: "auto_paused" | "end_of_series";
  instance_id: number;
  code?: string;
}

export type ServerMessage =
  | CatalogMessage
  | FrameMessage
  | AckMessage
  | ErrorMessage
  | EventMessage;

export interface ParamsPatch {
  gravity?: Vec3;
  drag_coefficient?: number;
  pressure_coefficient?: number;
  particle_mass?: number;
  particle_count?: number;
  hook_constant?: number;
  damping_factor?: number;
  time_step_override?: number | null;
  frame_rate?: number;
}

export type ClientMessage = { type: string; request_id?: string } & Record<string, unknown>;

export const messages = {
  create(dimension: number, integrator?: string): ClientMessage {
    const msg: ClientMessage = { type: "create", dimension };
    if (integrator) msg.integrator = integrator;
    return msg;
  },
  importObject(path: string): ClientMessage {
    return { type: "import_object", path };
  },
  importState(path: string): ClientMessage {
    return { type: "import_state", path };
  },
  start(instanceId: number): ClientMessage {
    return { type: "start", instance_id: instanceId };
  },
  pause(instanceId: number): ClientMessage {
    return { type: "pause", instance_id: instanceId };
  },
  resume(instanceId: number): ClientMessage {
    return { type: "resume", instance_id: instanceId };
  },
  setParams(instanceId: number, params: ParamsPatch): ClientMessage {
    return { type: "set_params", instance_id: instanceId, params };
  },
  swapAlgorithm(instanceId: number, kind: "integrator" | "detector", name: string): ClientMessage {
    return { type: "swap_algorithm", instance_id: instanceId, kind, name };
  },
  applyForce(instanceId: number, particleIds: number[], force: Vec3, steps: number): ClientMessage {
    return { type: "apply_force", instance_id: instanceId, particle_ids: particleIds, force, steps };
  },
  drag(instanceId: number, particleId: number, target: Vec3, stiffness: number, steps: number): ClientMessage {
    return { type: "drag", instance_id: instanceId, particle_id: particleId, target, stiffness, steps };
  },
  attach(instanceA: number, instanceB: number, pairs: [number, number][]): ClientMessage {
    return { type: "attach", instance_a: instanceA, instance_b: instanceB, pairs };
  },
  addInstance(instanceId: number, mode: "view" | "new_algorithm", name?: string): ClientMessage {
    const msg: ClientMessage = { type: "add_instance", instance_id: instanceId, mode };
    if (name) msg.name = name;
    return msg;
  },
  saveState(instanceId: number, path: string): ClientMessage {
    return { type: "save_state", instance_id: instanceId, path };
  },
  startSeries(instanceId: number, stride = 1): ClientMessage {
    return { type: "start_series", instance_id: instanceId, stride };
  },
  stopSeries(instanceId: number, path: string): ClientMessage {
    return { type: "stop_series", instance_id: instanceId, path };
  },
  startPlayback(path: string): ClientMessage {
    return { type: "start_playback", path };
  },
  stepPlayback(instanceId: number): ClientMessage {
    return { type: "step_playback", instance_id: instanceId };
  },
  subscribe(instanceId: number, rateHz = 30): ClientMessage {
    return { type: "subscribe", instance_id: instanceId, rate_hz: rateHz };
  },
  unsubscribe(instanceId: number): ClientMessage {
    return { type: "unsubscribe", instance_id: instanceId };
  },
};

// Field schema of every documented client message: used by tests to keep the
// builders in lock-step with docs/protocol.md.
export const MESSAGE_SCHEMAS: Record<string, { required: string[]; optional: string[] }> = {
  create: {
    required: ["type", "dimension"],
    optional: ["particle_count", "layer_count", "total_mass", "size", "inner_ratio",
               "pressure_coefficient", "integrator", "detector", "drop_height", "request_id"],
  },
  import_object: { required: ["type", "path"], optional: ["integrator", "request_id"] },
  import_state: { required: ["type", "path"], optional: ["request_id"] },
  start: { required: ["type", "instance_id"], optional: ["request_id"] },
  pause: { required: ["type", "instance_id"], optional: ["request_id"] },
  resume: { required: ["type", "instance_id"], optional: ["request_id"] },
  set_params: { required: ["type", "instance_id", "params"], optional: ["request_id"] },
  swap_algorithm: { required: ["type", "instance_id", "kind", "name"], optional: ["request_id"] },
  apply_force: {
    required: ["type", "instance_id", "particle_ids", "force", "steps"],
    optional: ["request_id"],
  },
  drag: {
    required: ["type", "instance_id", "particle_id", "target", "stiffness", "steps"],
    optional: ["request_id"],
  },
  attach: {
    required: ["type", "instance_a", "instance_b", "pairs"],
    optional: ["spring_kind", "request_id"],
  },
  add_instance: { required: ["type", "instance_id", "mode"], optional: ["name", "request_id"] },
  save_state: { required: ["type", "instance_id", "path"], optional: ["request_id"] },
  start_series: { required: ["type", "instance_id"], optional: ["stride", "request_id"] },
  stop_series: { required: ["type", "instance_id", "path"], optional: ["request_id"] },
  start_playback: { required: ["type", "path"], optional: ["request_id"] },
  step_playback: { required: ["type", "instance_id"], optional: ["request_id"] },
  subscribe: { required: ["type", "instance_id"], optional: ["rate_hz", "request_id"] },
  unsubscribe: { required: ["type", "instance_id"], optional: ["request_id"] },
};
