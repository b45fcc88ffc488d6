"""Per-particle force models and the fixed-order accumulator.

Accumulation order is pinned for reproducibility: gravity, drag, springs by
ascending id, pressure by ascending face id, contact penalties, external
inputs. Coincident spring endpoints contribute zero force and bump a
diagnostics counter instead of aborting the step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import err
from .model import Particle, SoftBody, Spring, Vec3, dimension_mask, enclosed_measure, vec3

ZERO_LENGTH_EPS = 1e-12

IMPULSE = "impulse_force"
DRAG = "drag"


@dataclass
class ForceParams:
    gravity: Vec3 = field(default_factory=lambda: vec3(0.0, -9.81, 0.0))
    drag_coefficient: float = 0.1
    pressure_coefficient: float | None = None  # None = use the body's own coefficient
    elastic_limit: float = 1.5       # strain below which deformation stays elastic
    plastic_rate: float = 0.1        # fraction of overshoot folded into rest length
    fracture_strain: float = 2.5     # strain beyond which a spring breaks

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=np.float64)
        if self.drag_coefficient < 0:
            raise err("INVALID_PARAMS", "drag coefficient must be non-negative")
        if self.pressure_coefficient is not None and self.pressure_coefficient < 0:
            raise err("INVALID_PARAMS", "pressure coefficient must be non-negative")
        if self.elastic_limit < 1.0:
            raise err("INVALID_PARAMS", "elastic limit is a strain ratio >= 1")
        if not 0.0 <= self.plastic_rate <= 1.0:
            raise err("INVALID_PARAMS", "plastic rate must lie in [0, 1]")
        if self.fracture_strain <= self.elastic_limit:
            raise err("INVALID_PARAMS", "fracture strain must exceed the elastic limit")

    def effective_pressure(self, body: SoftBody) -> float:
        if self.pressure_coefficient is not None:
            return self.pressure_coefficient
        return body.pressure_coefficient or 0.0


@dataclass
class ExternalInput:
    """User interaction queued onto a running instance.

    ``impulse_force`` adds a constant force to each target particle;
    ``drag`` pulls each target toward a point with a spring of the given
    stiffness. Inputs expire after ``remaining_steps`` engine steps.
    """

    kind: str
    particle_ids: list[int]
    force: Vec3 | None = None
    target: Vec3 | None = None
    stiffness: float = 0.0
    remaining_steps: int = 1

    def __post_init__(self):
        if self.kind not in (IMPULSE, DRAG):
            raise err("INVALID_PARAMS", f"unknown input kind {self.kind!r}")
        if self.remaining_steps < 0:
            raise err("INVALID_PARAMS", "remaining_steps must be non-negative")
        if self.kind == IMPULSE and self.force is None:
            raise err("INVALID_PARAMS", "impulse input needs a force vector")
        if self.kind == DRAG and self.target is None:
            raise err("INVALID_PARAMS", "drag input needs a target point")
        if self.force is not None:
            self.force = np.asarray(self.force, dtype=np.float64)
        if self.target is not None:
            self.target = np.asarray(self.target, dtype=np.float64)


# -- single-particle / single-spring models ----------------------------------


def gravity_force(particle: Particle, gravity: Vec3) -> Vec3:
    return particle.mass * np.asarray(gravity, dtype=np.float64)


def drag_force(particle: Particle, drag_coefficient: float) -> Vec3:
    if drag_coefficient < 0:
        raise err("INVALID_PARAMS", "drag coefficient must be non-negative")
    return -drag_coefficient * particle.velocity


def spring_force_pair(spring: Spring, particles) -> tuple[Vec3, Vec3]:
    """Damped Hooke force on (head, tail); the two are equal and opposite.

    ``particles`` maps particle id -> Particle (a list indexed by id works).
    """
    head, tail = particles[spring.head], particles[spring.tail]
    axis = tail.position - head.position
    length = float(np.linalg.norm(axis))
    if length < ZERO_LENGTH_EPS:
        raise err("ZERO_LENGTH", f"spring {spring.id} endpoints coincide")
    direction = axis / length
    stretch = spring.hook_constant * (length - spring.rest_length)
    damping = spring.damping_factor * float(np.dot(tail.velocity - head.velocity, direction))
    on_head = (stretch + damping) * direction
    return on_head, -on_head


def pressure_forces(body: SoftBody, pressure_coefficient: float,
                    positions: np.ndarray | None = None) -> np.ndarray:
    """Outward pressure load per particle, shape (N, 3), indexed by particle id.

    The body is treated as a closed vessel at pressure P = kP / V where V is
    the enclosed volume (3-D) or the outer-ring area with unit depth (2-D).
    Each outer face pushes P*area along its normal, split evenly over its
    three vertices; each 2-D outer edge pushes P*length along its outward
    normal, split over its two endpoints.
    """
    if body.dimension < 2:
        raise err("NOT_APPLICABLE", "pressure needs an enclosed 2-D or 3-D body")
    x = body.positions if positions is None else positions
    out = np.zeros_like(x)
    if pressure_coefficient == 0.0:
        return out
    volume = enclosed_measure(body, x)
    if volume <= 0.0:
        raise err("NOT_ENCLOSED", "enclosed measure is not positive")
    pressure = pressure_coefficient / volume

    if body.dimension == 3:
        cache = body.face_arrays()
        p0, p1, p2 = x[cache["v0"]], x[cache["v1"]], x[cache["v2"]]
        # area-weighted outward normal of each triangle
        area_normal = 0.5 * np.cross(p1 - p0, p2 - p0)
        share = (pressure / 3.0) * area_normal
        for idx in (cache["v0"], cache["v1"], cache["v2"]):
            np.add.at(out, idx, share)
    else:
        for ring in body.outer_rings():
            ids = np.asarray(ring, dtype=np.intp)
            nxt = np.roll(ids, -1)
            edge = x[nxt] - x[ids]
            # counter-clockwise ring: (dy, -dx) points outward; length folds in
            edge_normal = np.stack([edge[:, 1], -edge[:, 0], np.zeros(len(ids))], axis=1)
            share = (pressure / 2.0) * edge_normal
            np.add.at(out, ids, share)
            np.add.at(out, nxt, share)
    return out


# -- accumulation -------------------------------------------------------------


def compute_forces(body: SoftBody, params: ForceParams, x: np.ndarray, v: np.ndarray,
                   inputs=(), contacts=None, counters: dict | None = None) -> np.ndarray:
    """Total force field at candidate state (x, v); pure in its inputs.

    ``contacts`` is a list of (Contact, Collider) pairs already detected at
    this state; pass an empty list to skip collision response.
    """
    from .collision import penalty_force  # local import to avoid a cycle

    forces = params.gravity * body.masses[:, None]
    forces = forces - params.drag_coefficient * v

    cache = body.spring_arrays()
    if cache["count"]:
        head, tail = cache["head"], cache["tail"]
        axis = x[tail] - x[head]
        length = np.linalg.norm(axis, axis=1)
        live = length >= ZERO_LENGTH_EPS
        if counters is not None and not live.all():
            counters["zero_length_springs"] = counters.get("zero_length_springs", 0) + int((~live).sum())
        safe_len = np.where(live, length, 1.0)
        direction = axis / safe_len[:, None]
        stretch = cache["k"] * (length - cache["rest"])
        damping = cache["c"] * np.einsum("ij,ij->i", v[tail] - v[head], direction)
        magnitude = np.where(live, stretch + damping, 0.0)
        pair = magnitude[:, None] * direction
        np.add.at(forces, head, pair)
        np.add.at(forces, tail, -pair)

    kp = params.effective_pressure(body)
    if kp > 0.0 and body.dimension >= 2:
        forces = forces + pressure_forces(body, kp, x)

    for contact, collider in contacts or ():
        forces[contact.particle_id] += penalty_force(contact, collider)

    for item in inputs:
        if item.remaining_steps <= 0:
            continue
        if item.kind == IMPULSE:
            for pid in item.particle_ids:
                forces[pid] += item.force
        else:
            for pid in item.particle_ids:
                forces[pid] += item.stiffness * (item.target - x[pid])

    return forces * dimension_mask(body.dimension)


def accumulate_forces(body: SoftBody, params: ForceParams, inputs=(), contacts=None,
                      counters: dict | None = None) -> SoftBody:
    """Commit accumulated force and acceleration onto the body at its current state."""
    forces = compute_forces(body, params, body.positions, body.velocities,
                            inputs=inputs, contacts=contacts, counters=counters)
    body.forces[:] = forces
    body.accelerations[:] = forces / body.masses[:, None]
    return body


def apply_deformation_model(body: SoftBody, params: ForceParams) -> list[int]:
    """Plastic creep and fracture pass; returns ids of springs that broke.

    Strain s = length / rest_length per spring: elastic below the elastic
    limit, plastic creep (rest length chases current length at plastic_rate)
    between the limits, removal above the fracture strain. Faces whose edge
    spring broke are removed with it. Springs with ~zero rest length carry
    no usable strain ratio and are left alone.
    """
    cache = body.spring_arrays()
    if cache["count"] == 0:
        return []
    x = body.positions
    length = np.linalg.norm(x[cache["tail"]] - x[cache["head"]], axis=1)
    rest = cache["rest"]
    usable = rest >= ZERO_LENGTH_EPS
    strain = np.where(usable, length / np.where(usable, rest, 1.0), 1.0)
    fractured = usable & (strain > params.fracture_strain)
    plastic = usable & ~fractured & (strain > params.elastic_limit)

    for idx in np.nonzero(plastic)[0]:
        new_rest = (1.0 - params.plastic_rate) * rest[idx] + params.plastic_rate * length[idx]
        body.springs[idx].rest_length = new_rest
        rest[idx] = new_rest  # keep the cached array in step with the dataclass

    broken = [cache["ids"][idx] for idx in np.nonzero(fractured)[0]]
    if broken:
        body.remove_springs(set(broken))
    return broken
