import { describe, expect, it } from "vitest";
import { defaultCamera, project, unproject } from "../src/camera.js";
import { buildDrawList, pickParticle, ViewState } from "../src/drawlist.js";
import type { FaceInfo, FrameMessage, SpringInfo, Vec3 } from "../src/protocol.js";

function view(shading: ViewState["shading"] = "flat"): ViewState {
  return {
    instanceId: 1,
    camera: defaultCamera(3),
    shading,
    showSprings: true,
    showFaces: true,
    lightAngle: Math.PI / 4,
    width: 400,
    height: 300,
  };
}

function frame(positions: Vec3[]): FrameMessage {
  return {
    type: "frame",
    instance_id: 1,
    tick: 5,
    sim_time: 0.025,
    positions,
    velocities: positions.map(() => [0, 0, 0] as Vec3),
    broken_spring_ids: [],
    diagnostics: { energy: 0, volume: null },
  };
}

const TRIANGLE: Vec3[] = [[0, 1, 0], [1, 1, 0], [0, 2, 0]];
const SPRINGS: SpringInfo[] = [
  { id: 0, head: 0, tail: 1, kind: "structural" },
  { id: 1, head: 1, tail: 2, kind: "structural" },
  { id: 2, head: 2, tail: 0, kind: "structural" },
];
const FACES: FaceInfo[] = [{ id: 0, vertices: [0, 1, 2] }];

describe("draw list", () => {
  it("is pure: identical inputs give identical lists", () => {
    const a = buildDrawList(frame(TRIANGLE), SPRINGS, FACES, view());
    const b = buildDrawList(frame(TRIANGLE), SPRINGS, FACES, view());
    expect(a).toEqual(b);
  });

  it("sorts far-to-near for the painter", () => {
    const list = buildDrawList(frame(TRIANGLE), SPRINGS, FACES, view());
    for (let i = 1; i < list.length; i += 1) {
      expect(list[i - 1].depth).toBeGreaterThanOrEqual(list[i].depth);
    }
  });

  it("wireframe mode fills no polygons", () => {
    const list = buildDrawList(frame(TRIANGLE), SPRINGS, FACES, view("wireframe"));
    expect(list.some((p) => p.kind === "poly")).toBe(false);
    expect(list.filter((p) => p.kind === "line").length).toBeGreaterThanOrEqual(3);
  });

  it("flat and smooth modes fill the face", () => {
    for (const mode of ["flat", "smooth"] as const) {
      const list = buildDrawList(frame(TRIANGLE), SPRINGS, FACES, view(mode));
      expect(list.filter((p) => p.kind === "poly").length).toBe(1);
    }
  });

  it("light angle changes flat shading output", () => {
    const lit = view("flat");
    const dark = { ...view("flat"), lightAngle: lit.lightAngle + Math.PI };
    const a = buildDrawList(frame(TRIANGLE), SPRINGS, FACES, lit)
      .find((p) => p.kind === "poly");
    const b = buildDrawList(frame(TRIANGLE), SPRINGS, FACES, dark)
      .find((p) => p.kind === "poly");
    expect(a && b && a.kind === "poly" && b.kind === "poly" && a.fill !== b.fill).toBe(true);
  });
});

describe("projection", () => {
  it("camera target projects to the canvas center", () => {
    const v = view();
    const p = project(v.camera, v.width, v.height, v.camera.target);
    expect(p.x).toBeCloseTo(v.width / 2, 6);
    expect(p.y).toBeCloseTo(v.height / 2, 6);
  });

  it("unproject inverts project at the same depth", () => {
    const v = view();
    const world: Vec3 = [0.4, 1.5, -0.2];
    const p = project(v.camera, v.width, v.height, world);
    const back = unproject(v.camera, v.width, v.height, p.x, p.y, p.depth);
    for (let i = 0; i < 3; i += 1) {
      expect(back[i]).toBeCloseTo(world[i], 9);
    }
  });

  it("pick finds the particle under the pointer", () => {
    const v = view();
    const f = frame(TRIANGLE);
    const p = project(v.camera, v.width, v.height, TRIANGLE[2]);
    expect(pickParticle(f, v, p.x + 2, p.y - 2)).toBe(2);
    expect(pickParticle(f, v, 5, 5)).toBeNull();
  });
});
