// Pure draw-list construction: (frame, topology, view state) -> primitives.
// The canvas painter just replays the list, so rendering determinism is
// testable without a browser: identical inputs yield identical lists.

import { CameraState, cross, dot, normalize, project, sub } from "./camera.js";
import type { FaceInfo, FrameMessage, SpringInfo, Vec3 } from "./protocol.js";

export type ShadingMode = "wireframe" | "flat" | "smooth";

export interface ViewState {
  instanceId: number;
  camera: CameraState;
  shading: ShadingMode;
  showSprings: boolean;
  showFaces: boolean;
  lightAngle: number; // radians in the xz plane, elevated 45 degrees
  width: number;
  height: number;
}

export interface LinePrimitive {
  kind: "line";
  x1: number; y1: number; x2: number; y2: number;
  depth: number;
  color: string;
}

export interface PolyPrimitive {
  kind: "poly";
  points: [number, number][];
  depth: number;
  fill: string;
}

export interface PointPrimitive {
  kind: "point";
  x: number; y: number;
  radius: number;
  depth: number;
  color: string;
}

export type Primitive = LinePrimitive | PolyPrimitive | PointPrimitive;

const BODY_COLOR: Vec3 = [0.85, 0.3, 0.25];
const SPRING_COLORS: Record<string, string> = {
  structural: "#7f8fa6",
  radius: "#8c7ae6",
  shear: "#718093",
};

function lightDirection(angle: number): Vec3 {
  const c = Math.SQRT1_2;
  return normalize([Math.cos(angle) * c, c, Math.sin(angle) * c]);
}

function shadeColor(base: Vec3, intensity: number): string {
  const channel = (v: number) => Math.round(255 * Math.min(1, Math.max(0, v * intensity)));
  return `rgb(${channel(base[0])},${channel(base[1])},${channel(base[2])})`;
}

function faceNormal(a: Vec3, b: Vec3, c: Vec3): Vec3 {
  return normalize(cross(sub(b, a), sub(c, a)));
}

// Per-vertex normals (area-weighted average of adjacent face normals),
// used by the smooth shading mode.
export function vertexNormals(positions: Vec3[], faces: FaceInfo[]): Vec3[] {
  const sums: Vec3[] = positions.map(() => [0, 0, 0] as Vec3);
  for (const face of faces) {
    const [i, j, k] = face.vertices;
    const n = cross(sub(positions[j], positions[i]), sub(positions[k], positions[i]));
    for (const v of face.vertices) {
      sums[v] = [sums[v][0] + n[0], sums[v][1] + n[1], sums[v][2] + n[2]];
    }
  }
  return sums.map(normalize);
}

export function buildGrid(view: ViewState, extent = 4, step = 1): Primitive[] {
  const out: Primitive[] = [];
  for (let i = -extent; i <= extent; i += step) {
    for (const [a, b] of [
      [[i, 0, -extent], [i, 0, extent]],
      [[-extent, 0, i], [extent, 0, i]],
    ] as [Vec3, Vec3][]) {
      const pa = project(view.camera, view.width, view.height, a);
      const pb = project(view.camera, view.width, view.height, b);
      if (pa.depth <= 0 || pb.depth <= 0) continue;
      out.push({
        kind: "line", x1: pa.x, y1: pa.y, x2: pb.x, y2: pb.y,
        depth: Math.max(pa.depth, pb.depth) + 1e6, // grid always behind the body
        color: "#2f3640",
      });
    }
  }
  return out;
}

export function buildDrawList(frame: FrameMessage, springs: SpringInfo[], faces: FaceInfo[],
                              view: ViewState): Primitive[] {
  const positions = frame.positions;
  const projected = positions.map((p) => project(view.camera, view.width, view.height, p));
  const out: Primitive[] = buildGrid(view);
  const light = lightDirection(view.lightAngle);

  if (view.showFaces && view.shading !== "wireframe" && faces.length) {
    const normals = view.shading === "smooth" ? vertexNormals(positions, faces) : null;
    for (const face of faces) {
      const [i, j, k] = face.vertices;
      const pts = [projected[i], projected[j], projected[k]];
      if (pts.some((p) => p.depth <= 0)) continue;
      let intensity: number;
      if (normals) {
        const lit = face.vertices.map((v) => Math.max(0, dot(normals[v], light)));
        intensity = 0.25 + 0.75 * (lit[0] + lit[1] + lit[2]) / 3;
      } else {
        const n = faceNormal(positions[i], positions[j], positions[k]);
        intensity = 0.25 + 0.75 * Math.max(0, dot(n, light));
      }
      out.push({
        kind: "poly",
        points: pts.map((p) => [p.x, p.y] as [number, number]),
        depth: (pts[0].depth + pts[1].depth + pts[2].depth) / 3,
        fill: shadeColor(BODY_COLOR, intensity),
      });
    }
  }

  if (view.showSprings || view.shading === "wireframe" || !faces.length) {
    for (const spring of springs) {
      const pa = projected[spring.head];
      const pb = projected[spring.tail];
      if (!pa || !pb || pa.depth <= 0 || pb.depth <= 0) continue;
      out.push({
        kind: "line", x1: pa.x, y1: pa.y, x2: pb.x, y2: pb.y,
        depth: (pa.depth + pb.depth) / 2,
        color: SPRING_COLORS[spring.kind] ?? "#7f8fa6",
      });
    }
  }

  for (let i = 0; i < projected.length; i += 1) {
    const p = projected[i];
    if (p.depth <= 0) continue;
    out.push({
      kind: "point", x: p.x, y: p.y,
      radius: Math.max(1.5, 26 / p.depth),
      depth: p.depth,
      color: "#f5f6fa",
    });
  }

  // painter's algorithm: far primitives first
  out.sort((a, b) => b.depth - a.depth);
  return out;
}

// Nearest particle to a canvas point, within a pick radius in pixels.
export function pickParticle(frame: FrameMessage, view: ViewState,
                             x: number, y: number, radius = 14): number | null {
  let best: number | null = null;
  let bestDist = radius;
  for (let i = 0; i < frame.positions.length; i += 1) {
    const p = project(view.camera, view.width, view.height, frame.positions[i]);
    if (p.depth <= 0) continue;
    const d = Math.hypot(p.x - x, p.y - y);
    if (d < bestDist) {
      best = i;
      bestDist = d;
    }
  }
  return best;
}
