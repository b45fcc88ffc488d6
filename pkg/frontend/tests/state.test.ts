import { describe, expect, it } from "vitest";
import type { CatalogMessage, FrameMessage, InstanceInfo } from "../src/protocol.js";
import { handleServerMessage, initialState, liveSprings } from "../src/state.js";

function info(id: number): InstanceInfo {
  return {
    id,
    status: "running",
    integrator: "semiImplicitEuler",
    detector: "bruteForce",
    dimension: 2,
    particle_count: 2,
    tick: 0,
    sim_time: 0,
    springs: [
      { id: 0, head: 0, tail: 1, kind: "structural" },
      { id: 1, head: 1, tail: 0, kind: "shear" },
    ],
    faces: [],
  };
}

function catalog(): CatalogMessage {
  return {
    type: "catalog",
    integrators: [{ name: "semiImplicitEuler", time_step: 0.005 }],
    detectors: ["bruteForce"],
    instances: [info(1)],
  };
}

function frameAt(tick: number, broken: number[] = []): FrameMessage {
  return {
    type: "frame",
    instance_id: 1,
    tick,
    sim_time: tick * 0.005,
    positions: [[0, 0, 0], [1, 0, 0]],
    velocities: [[0, 0, 0], [0, 0, 0]],
    broken_spring_ids: broken,
    diagnostics: { energy: 1, volume: null },
  };
}

describe("store", () => {
  it("catalog populates algorithms and instances", () => {
    const state = handleServerMessage(initialState(), catalog());
    expect(state.connected).toBe(true);
    expect(state.integrators[0].name).toBe("semiImplicitEuler");
    expect(state.instances.get(1)?.info.particle_count).toBe(2);
  });

  it("frames update the latest snapshot and clock", () => {
    const state = handleServerMessage(initialState(), catalog());
    handleServerMessage(state, frameAt(7));
    const instance = state.instances.get(1)!;
    expect(instance.latestFrame?.tick).toBe(7);
    expect(instance.info.sim_time).toBeCloseTo(0.035);
  });

  it("broken springs accumulate and are pruned from the live set", () => {
    const state = handleServerMessage(initialState(), catalog());
    handleServerMessage(state, frameAt(1, [0]));
    const instance = state.instances.get(1)!;
    expect(liveSprings(instance).map((s) => s.id)).toEqual([1]);
    handleServerMessage(state, frameAt(2, [1]));
    expect(liveSprings(instance)).toEqual([]);
  });

  it("errors and auto-pause events become notices", () => {
    const state = handleServerMessage(initialState(), catalog());
    handleServerMessage(state, { type: "error", code: "UNKNOWN_ALGORITHM", message: "nope" });
    expect(state.notices.at(-1)).toContain("UNKNOWN_ALGORITHM");
    handleServerMessage(state, {
      type: "event", kind: "auto_paused", instance_id: 1, code: "NONFINITE_STATE",
    });
    expect(state.instances.get(1)?.info.status).toBe("paused");
    expect(state.notices.at(-1)).toContain("auto-paused");
  });

  it("acks carrying instances upsert them", () => {
    const state = handleServerMessage(initialState(), catalog());
    handleServerMessage(state, { type: "ack", instance_id: 2, instance: info(2) });
    expect(state.instances.size).toBe(2);
  });
});
