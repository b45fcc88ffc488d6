// Minimal perspective camera with orbit/zoom controls and pointer
// unprojection. All math is plain and allocation-light so the draw-list
// builder stays pure and testable.

import type { Vec3 } from "./protocol.js";

export interface CameraState {
  target: Vec3;
  distance: number;
  yaw: number;   // radians around the +y axis
  pitch: number; // radians above the horizon, clamped to avoid gimbal flips
  fov: number;   // vertical field of view, radians
}

export function defaultCamera(dimension: number): CameraState {
  return {
    target: [0, 1.2, 0],
    distance: dimension === 3 ? 6 : 5,
    yaw: dimension === 3 ? Math.PI / 6 : 0,
    pitch: dimension === 3 ? 0.35 : 0,
    fov: Math.PI / 4,
  };
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a) || 1;
  return [a[0] / n, a[1] / n, a[2] / n];
}

export function cameraEye(camera: CameraState): Vec3 {
  const cp = Math.cos(camera.pitch);
  return add(camera.target, [
    camera.distance * cp * Math.sin(camera.yaw),
    camera.distance * Math.sin(camera.pitch),
    camera.distance * cp * Math.cos(camera.yaw),
  ]);
}

export interface Basis {
  eye: Vec3;
  right: Vec3;
  up: Vec3;
  forward: Vec3; // from eye toward target
}

export function cameraBasis(camera: CameraState): Basis {
  const eye = cameraEye(camera);
  const forward = normalize(sub(camera.target, eye));
  const right = normalize(cross(forward, [0, 1, 0]));
  const up = cross(right, forward);
  return { eye, right, up, forward };
}

export interface Projected {
  x: number;
  y: number;
  depth: number;   // distance along the view axis; <= 0 means behind the eye
}

// Perspective-project a world point onto a width x height canvas.
export function project(camera: CameraState, width: number, height: number, p: Vec3): Projected {
  const basis = cameraBasis(camera);
  const rel = sub(p, basis.eye);
  const depth = dot(rel, basis.forward);
  const f = (height / 2) / Math.tan(camera.fov / 2);
  const safe = depth <= 1e-6 ? 1e-6 : depth;
  return {
    x: width / 2 + (dot(rel, basis.right) / safe) * f,
    y: height / 2 - (dot(rel, basis.up) / safe) * f,
    depth,
  };
}

// Inverse of project at a fixed view depth: the world point whose projection
// is (x, y) and whose distance along the view axis equals depth. Dragging
// keeps the grabbed particle in its original screen-parallel plane.
export function unproject(camera: CameraState, width: number, height: number,
                          x: number, y: number, depth: number): Vec3 {
  const basis = cameraBasis(camera);
  const f = (height / 2) / Math.tan(camera.fov / 2);
  const rx = ((x - width / 2) * depth) / f;
  const ry = ((height / 2 - y) * depth) / f;
  return add(basis.eye, add(scale(basis.forward, depth),
                            add(scale(basis.right, rx), scale(basis.up, ry))));
}

export function orbit(camera: CameraState, dYaw: number, dPitch: number): CameraState {
  const limit = Math.PI / 2 - 0.05;
  return {
    ...camera,
    yaw: camera.yaw + dYaw,
    pitch: Math.max(-limit, Math.min(limit, camera.pitch + dPitch)),
  };
}

export function dolly(camera: CameraState, factor: number): CameraState {
  return { ...camera, distance: Math.min(50, Math.max(0.5, camera.distance * factor)) };
}
