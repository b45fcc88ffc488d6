"""Softbody domain model: particles, springs, faces, layered bodies.

Bodies store per-particle state in (N, 3) float64 arrays so that force
evaluation and integration stay vectorized; particle ids are therefore
always equal to their row index. Topology (springs, faces, layers) lives
in plain dataclass lists with stable ids that survive fracture.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import err

_body_ids = itertools.count()

Vec3 = np.ndarray  # shape (3,), float64

STRUCTURAL = "structural"
RADIUS = "radius"
SHEAR = "shear"
SPRING_KINDS = (STRUCTURAL, RADIUS, SHEAR)

# Defaults used when construction parameters leave a value unset.
DEFAULT_TOTAL_MASS = 1.0
DEFAULT_SIZE = 1.0
DEFAULT_INNER_RATIO = 0.5
DEFAULT_PRESSURE_COEFFICIENT = 5.0
DEFAULT_COLOR = (0.8, 0.2, 0.2)
DEFAULT_HOOK_CONSTANTS = {STRUCTURAL: 200.0, RADIUS: 150.0, SHEAR: 100.0}
DEFAULT_DAMPING_FACTORS = {STRUCTURAL: 1.0, RADIUS: 1.0, SHEAR: 1.0}


def vec3(x: float = 0.0, y: float = 0.0, z: float = 0.0) -> Vec3:
    return np.array([x, y, z], dtype=np.float64)


def dimension_mask(dimension: int) -> Vec3:
    """Component mask: 1-D bodies live on the x axis, 2-D bodies in the xy plane."""
    if dimension == 1:
        return np.array([1.0, 0.0, 0.0])
    if dimension == 2:
        return np.array([1.0, 1.0, 0.0])
    return np.ones(3)


@dataclass
class Particle:
    """Point-mass snapshot; the body arrays remain the source of truth."""

    id: int
    mass: float
    position: Vec3
    velocity: Vec3
    acceleration: Vec3
    accumulated_force: Vec3
    pinned: bool = False


@dataclass
class Spring:
    id: int
    head: int
    tail: int
    rest_length: float
    hook_constant: float
    damping_factor: float
    kind: str = STRUCTURAL
    normal: Vec3 | None = None  # cached average of adjacent face normals; unused by forces

    def __post_init__(self):
        if self.head == self.tail:
            raise err("SELF_LOOP", f"spring {self.id} connects particle {self.head} to itself")
        if self.rest_length < 0 or self.hook_constant < 0 or self.damping_factor < 0:
            raise err("INVALID_PARAMS", "spring constants must be non-negative")
        if self.kind not in SPRING_KINDS:
            raise err("INVALID_PARAMS", f"unknown spring kind {self.kind!r}")


@dataclass
class Face:
    id: int
    vertices: tuple[int, int, int]  # outward winding
    springs: tuple[int, int, int]  # edge springs, aligned with vertex pairs

    def __post_init__(self):
        if len(set(self.vertices)) != 3:
            raise err("DEGENERATE_FACE", f"face {self.id} repeats a vertex")


@dataclass
class Layer:
    """One shell of particles. 2-D outer-layer ids are kept in ring order
    (that ordering defines the enclosed polygon used by the pressure model).
    ``group`` tags which attachment component the layer belongs to."""

    label: str
    particle_ids: list[int]
    group: int = 0


@dataclass
class CreationParams:
    dimension: int
    particle_count: int = 16  # per layer (1-D: chain length)
    layer_count: int = 2
    total_mass: float = DEFAULT_TOTAL_MASS
    size: float = DEFAULT_SIZE
    inner_ratio: float = DEFAULT_INNER_RATIO
    hook_constants: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_HOOK_CONSTANTS))
    damping_factors: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_DAMPING_FACTORS))
    pressure_coefficient: float = DEFAULT_PRESSURE_COEFFICIENT
    color: tuple[float, float, float] = DEFAULT_COLOR
    density: float | None = None  # alternative statement of total mass

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise err("INVALID_PARAMS", f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.particle_count < 2:
            raise err("INVALID_PARAMS", "particle_count must be at least 2")
        if self.layer_count < 1:
            raise err("INVALID_PARAMS", "layer_count must be positive")
        if self.total_mass <= 0:
            raise err("INVALID_PARAMS", "total_mass must be positive")
        if self.size <= 0:
            raise err("INVALID_PARAMS", "size must be positive")
        if not 0.0 < self.inner_ratio < 1.0:
            raise err("INVALID_PARAMS", "inner_ratio must lie strictly between 0 and 1")
        if self.pressure_coefficient < 0:
            raise err("INVALID_PARAMS", "pressure_coefficient must be non-negative")
        for table in (self.hook_constants, self.damping_factors):
            for kind, value in table.items():
                if kind not in SPRING_KINDS or value < 0:
                    raise err("INVALID_PARAMS", f"bad spring constant {kind}={value}")
        if self.density is not None and self.density <= 0:
            raise err("INVALID_PARAMS", "density must be positive")


class SoftBody:
    """Layered mass-spring body with optional faces and pressure coefficient."""

    def __init__(self, dimension: int, body_id: int | None = None):
        if dimension not in (1, 2, 3):
            raise err("INVALID_PARAMS", f"dimension must be 1, 2 or 3, got {dimension}")
        self.id = next(_body_ids) if body_id is None else body_id
        self.dimension = dimension
        self.masses = np.zeros(0)
        self.positions = np.zeros((0, 3))
        self.velocities = np.zeros((0, 3))
        self.accelerations = np.zeros((0, 3))
        self.forces = np.zeros((0, 3))
        self.pinned = np.zeros(0, dtype=bool)
        self.springs: list[Spring] = []
        self.faces: list[Face] = []
        self.layers: list[Layer] = []
        self.pressure_coefficient: float | None = None  # builders set it for 2-D/3-D
        self.color: tuple[float, float, float] = DEFAULT_COLOR
        self.spring_defaults: dict[str, tuple[float, float]] = {
            kind: (DEFAULT_HOOK_CONSTANTS[kind], DEFAULT_DAMPING_FACTORS[kind]) for kind in SPRING_KINDS
        }
        self._next_spring_id = 0
        self._next_face_id = 0
        self._topology_version = 0
        self._spring_cache = None
        self._face_cache = None

    # -- particles ---------------------------------------------------------

    @property
    def particle_count(self) -> int:
        return self.positions.shape[0]

    def add_particles(self, positions: np.ndarray, masses: np.ndarray, pinned=None) -> None:
        positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
        masses = np.asarray(masses, dtype=np.float64).reshape(-1)
        if positions.shape[0] != masses.shape[0]:
            raise err("INVALID_PARAMS", "positions and masses disagree in length")
        if np.any(masses <= 0):
            raise err("INVALID_PARAMS", "particle mass must be positive")
        n = positions.shape[0]
        self.masses = np.concatenate([self.masses, masses])
        self.positions = np.vstack([self.positions, positions])
        self.velocities = np.vstack([self.velocities, np.zeros((n, 3))])
        self.accelerations = np.vstack([self.accelerations, np.zeros((n, 3))])
        self.forces = np.vstack([self.forces, np.zeros((n, 3))])
        flags = np.zeros(n, dtype=bool) if pinned is None else np.asarray(pinned, dtype=bool)
        self.pinned = np.concatenate([self.pinned, flags])
        self.apply_dimension_mask()

    def particle(self, particle_id: int) -> Particle:
        self._check_particle(particle_id)
        i = particle_id
        return Particle(
            id=i,
            mass=float(self.masses[i]),
            position=self.positions[i].copy(),
            velocity=self.velocities[i].copy(),
            acceleration=self.accelerations[i].copy(),
            accumulated_force=self.forces[i].copy(),
            pinned=bool(self.pinned[i]),
        )

    def _check_particle(self, particle_id: int) -> None:
        if not 0 <= particle_id < self.particle_count:
            raise err("UNKNOWN_PARTICLE", f"no particle with id {particle_id}")

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def centroid(self) -> Vec3:
        weighted = (self.masses[:, None] * self.positions).sum(axis=0)
        return weighted / self.masses.sum()

    def apply_dimension_mask(self) -> None:
        mask = dimension_mask(self.dimension)
        for arr in (self.positions, self.velocities, self.accelerations, self.forces):
            arr *= mask
        self.velocities[self.pinned] = 0.0

    # -- topology ----------------------------------------------------------

    def add_spring(self, head: int, tail: int, kind: str = STRUCTURAL,
                   hook_constant: float | None = None, damping_factor: float | None = None,
                   rest_length: float | None = None) -> int:
        if head == tail:
            raise err("SELF_LOOP", "spring head and tail must differ")
        self._check_particle(head)
        self._check_particle(tail)
        default_k, default_c = self.spring_defaults.get(kind, self.spring_defaults[STRUCTURAL])
        if rest_length is None:
            rest_length = float(np.linalg.norm(self.positions[tail] - self.positions[head]))
        spring = Spring(
            id=self._next_spring_id,
            head=head,
            tail=tail,
            rest_length=rest_length,
            hook_constant=default_k if hook_constant is None else hook_constant,
            damping_factor=default_c if damping_factor is None else damping_factor,
            kind=kind,
        )
        self.springs.append(spring)
        self._next_spring_id += 1
        self.invalidate_topology()
        return spring.id

    def add_face(self, v1: int, v2: int, v3: int) -> int:
        if self.dimension < 2:
            raise err("DIMENSION_FORBIDS_FACE", "1-D bodies cannot carry faces")
        if len({v1, v2, v3}) != 3:
            raise err("DEGENERATE_FACE", "face vertices must be distinct")
        for v in (v1, v2, v3):
            self._check_particle(v)
        edge_springs = []
        for a, b in ((v1, v2), (v2, v3), (v3, v1)):
            spring = self.find_spring(a, b)
            if spring is None:
                edge_springs.append(self.add_spring(a, b, STRUCTURAL))
            else:
                edge_springs.append(spring.id)
        face = Face(id=self._next_face_id, vertices=(v1, v2, v3), springs=tuple(edge_springs))
        self.faces.append(face)
        self._next_face_id += 1
        self.invalidate_topology()
        return face.id

    def find_spring(self, a: int, b: int) -> Spring | None:
        for spring in self.springs:
            if {spring.head, spring.tail} == {a, b}:
                return spring
        return None

    def spring_by_id(self, spring_id: int) -> Spring:
        for spring in self.springs:
            if spring.id == spring_id:
                return spring
        raise err("UNKNOWN_PARTICLE", f"no spring with id {spring_id}")

    def remove_springs(self, spring_ids: set[int]) -> None:
        if not spring_ids:
            return
        self.springs = [s for s in self.springs if s.id not in spring_ids]
        self.faces = [f for f in self.faces if not spring_ids.intersection(f.springs)]
        self.invalidate_topology()

    def invalidate_topology(self) -> None:
        self._topology_version += 1
        self._spring_cache = None
        self._face_cache = None

    @property
    def groups(self) -> list[int]:
        return sorted({layer.group for layer in self.layers}) or [0]

    def group_particle_ids(self, group: int) -> list[int]:
        ids: list[int] = []
        for layer in self.layers:
            if layer.group == group:
                ids.extend(layer.particle_ids)
        return ids

    def outer_rings(self) -> list[list[int]]:
        """Ordered outer-layer rings, one per attachment group (2-D pressure)."""
        rings = []
        for group in self.groups:
            outer = [l for l in self.layers if l.group == group and l.label == "outer"]
            if outer:
                rings.append(list(outer[0].particle_ids))
        return rings

    # -- cached topology arrays (rebuilt after any change) -------------------

    def spring_arrays(self):
        if self._spring_cache is None:
            n = len(self.springs)
            self._spring_cache = {
                "head": np.array([s.head for s in self.springs], dtype=np.intp),
                "tail": np.array([s.tail for s in self.springs], dtype=np.intp),
                "k": np.array([s.hook_constant for s in self.springs]),
                "c": np.array([s.damping_factor for s in self.springs]),
                "rest": np.array([s.rest_length for s in self.springs]),
                "ids": [s.id for s in self.springs],
                "count": n,
            }
        return self._spring_cache

    def face_arrays(self):
        if self._face_cache is None:
            self._face_cache = {
                "v0": np.array([f.vertices[0] for f in self.faces], dtype=np.intp),
                "v1": np.array([f.vertices[1] for f in self.faces], dtype=np.intp),
                "v2": np.array([f.vertices[2] for f in self.faces], dtype=np.intp),
                "count": len(self.faces),
                "closed": surface_is_closed(self.faces),
            }
        return self._face_cache

    # -- copying -----------------------------------------------------------

    def copy(self) -> "SoftBody":
        clone = SoftBody(self.dimension, self.id)
        clone.masses = self.masses.copy()
        clone.positions = self.positions.copy()
        clone.velocities = self.velocities.copy()
        clone.accelerations = self.accelerations.copy()
        clone.forces = self.forces.copy()
        clone.pinned = self.pinned.copy()
        clone.springs = [
            Spring(s.id, s.head, s.tail, s.rest_length, s.hook_constant, s.damping_factor, s.kind)
            for s in self.springs
        ]
        clone.faces = [Face(f.id, f.vertices, f.springs) for f in self.faces]
        clone.layers = [Layer(l.label, list(l.particle_ids), l.group) for l in self.layers]
        clone.pressure_coefficient = self.pressure_coefficient
        clone.color = self.color
        clone.spring_defaults = dict(self.spring_defaults)
        clone._next_spring_id = self._next_spring_id
        clone._next_face_id = self._next_face_id
        return clone


def refresh_spring_normals(body: SoftBody) -> None:
    """Cache each spring's normal as the average of its adjacent face normals
    (normalized). Springs bordering no face keep None. Purely descriptive:
    the force model never reads it."""
    adjacency: dict[int, list[np.ndarray]] = {}
    x = body.positions
    for face in body.faces:
        a, b, c = face.vertices
        n = np.cross(x[b] - x[a], x[c] - x[a])
        for sid in face.springs:
            adjacency.setdefault(sid, []).append(n)
    for spring in body.springs:
        stack = adjacency.get(spring.id)
        if not stack:
            spring.normal = None
            continue
        total = np.sum(stack, axis=0)
        length = float(np.linalg.norm(total))
        spring.normal = total / length if length > 1e-12 else None


def surface_is_closed(faces: list[Face]) -> bool:
    """True when every directed edge is used exactly once and paired with its
    reverse, i.e. the faces form closed consistently-oriented surfaces."""
    if not faces:
        return False
    directed: dict[tuple[int, int], int] = {}
    for face in faces:
        a, b, c = face.vertices
        for edge in ((a, b), (b, c), (c, a)):
            directed[edge] = directed.get(edge, 0) + 1
    for (a, b), count in directed.items():
        if count != 1 or directed.get((b, a), 0) != 1:
            return False
    return True


# -- construction -----------------------------------------------------------


def create_default_soft_body(dimension: int) -> SoftBody:
    return create_soft_body(default_creation_params(dimension))


def default_creation_params(dimension: int) -> CreationParams:
    if dimension == 1:
        return CreationParams(dimension=1, particle_count=8, layer_count=1)
    if dimension == 2:
        return CreationParams(dimension=2, particle_count=16, layer_count=2)
    return CreationParams(dimension=3, particle_count=50, layer_count=2)


def _sync_rest_lengths(body: SoftBody) -> None:
    """Recompute every rest length through the same vectorized expression the
    force evaluator uses, so a freshly built body is a bitwise fixed point."""
    cache = body.spring_arrays()
    if cache["count"] == 0:
        return
    rest = np.linalg.norm(body.positions[cache["tail"]] - body.positions[cache["head"]], axis=1)
    for i, spring in enumerate(body.springs):
        spring.rest_length = float(rest[i])
    body.invalidate_topology()


def create_soft_body(params: CreationParams, body_id: int | None = None) -> SoftBody:
    if params.dimension == 1:
        body = _build_chain(params, body_id)
    elif params.dimension == 2:
        body = _build_rings(params, body_id)
    else:
        body = _build_spheres(params, body_id)
    _sync_rest_lengths(body)
    body.color = params.color
    body.spring_defaults = {
        kind: (params.hook_constants.get(kind, DEFAULT_HOOK_CONSTANTS[kind]),
               params.damping_factors.get(kind, DEFAULT_DAMPING_FACTORS[kind]))
        for kind in SPRING_KINDS
    }
    if params.dimension >= 2:
        body.pressure_coefficient = params.pressure_coefficient
    else:
        body.pressure_coefficient = None
    body.apply_dimension_mask()
    return body


def _spread_masses(body: SoftBody, total_mass: float) -> None:
    body.masses[:] = total_mass / body.particle_count


def _build_chain(params: CreationParams, body_id: int) -> SoftBody:
    """1-D default: straight chain along x, structural springs only, no faces."""
    body = SoftBody(1, body_id)
    n = params.particle_count
    spacing = params.size / (n - 1)
    xs = np.array([[-params.size / 2 + i * spacing, 0.0, 0.0] for i in range(n)])
    body.add_particles(xs, np.full(n, 1.0))
    _spread_masses(body, params.total_mass)
    k, c = params.hook_constants[STRUCTURAL], params.damping_factors[STRUCTURAL]
    for i in range(n - 1):
        body.add_spring(i, i + 1, STRUCTURAL, k, c)
    body.layers = [Layer("outer", list(range(n)))]
    return body


def _ring_positions(count: int, radius: float) -> np.ndarray:
    angles = 2.0 * math.pi * np.arange(count) / count
    return np.stack([radius * np.cos(angles), radius * np.sin(angles), np.zeros(count)], axis=1)


def _build_rings(params: CreationParams, body_id: int) -> SoftBody:
    """2-D default: concentric counter-clockwise rings in the xy plane.
    Structural springs along each ring, radius springs between matching
    vertices of adjacent rings, shear springs to the i±1 neighbours."""
    body = SoftBody(2, body_id)
    n = params.particle_count
    if n < 3:
        raise err("INVALID_PARAMS", "2-D bodies need at least 3 particles per ring")
    radii = [params.size]
    for layer_index in range(1, params.layer_count):
        # successive layers shrink geometrically by inner_ratio
        radii.append(radii[-1] * params.inner_ratio)
    for radius in radii:
        body.add_particles(_ring_positions(n, radius), np.full(n, 1.0))
    _spread_masses(body, params.total_mass)

    ks, cs = params.hook_constants, params.damping_factors
    for layer_index in range(params.layer_count):
        base = layer_index * n
        for i in range(n):
            body.add_spring(base + i, base + (i + 1) % n, STRUCTURAL, ks[STRUCTURAL], cs[STRUCTURAL])
    for layer_index in range(params.layer_count - 1):
        outer_base, inner_base = layer_index * n, (layer_index + 1) * n
        for i in range(n):
            body.add_spring(outer_base + i, inner_base + i, RADIUS, ks[RADIUS], cs[RADIUS])
        for i in range(n):
            body.add_spring(outer_base + i, inner_base + (i + 1) % n, SHEAR, ks[SHEAR], cs[SHEAR])
            body.add_spring(outer_base + i, inner_base + (i - 1) % n, SHEAR, ks[SHEAR], cs[SHEAR])

    body.layers = []
    for layer_index in range(params.layer_count):
        label = "outer" if layer_index == 0 else ("inner" if layer_index == params.layer_count - 1 else f"mid{layer_index}")
        body.layers.append(Layer(label, list(range(layer_index * n, (layer_index + 1) * n))))
    return body


def _sphere_grid(count_hint: int) -> tuple[int, int]:
    """Pick a UV-sphere resolution (meridians, latitude rings) whose vertex
    count n_lon*n_lat + 2 approximates the requested per-layer count."""
    best = (8, 6)
    best_gap = abs(8 * 6 + 2 - count_hint)
    for n_lon in range(3, 64):
        n_lat = max(2, round((count_hint - 2) / n_lon))
        gap = abs(n_lon * n_lat + 2 - count_hint)
        # prefer wider-than-tall grids, matching the default 8x6 layout
        if gap < best_gap or (gap == best_gap and abs(n_lon - 1.4 * n_lat) < abs(best[0] - 1.4 * best[1])):
            best, best_gap = (n_lon, n_lat), gap
    return best


def uv_sphere(n_lon: int, n_lat: int, radius: float) -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    """UV-sphere vertices and outward-wound triangle list.

    Vertex 0 is the north pole, vertex n_lon*n_lat+1 the south pole; latitude
    rings are listed top to bottom, each ring counter-clockwise seen from +y.
    """
    verts = [np.array([0.0, radius, 0.0])]
    for j in range(1, n_lat + 1):
        phi = math.pi * j / (n_lat + 1)  # polar angle from +y
        y = radius * math.cos(phi)
        r = radius * math.sin(phi)
        for i in range(n_lon):
            theta = 2.0 * math.pi * i / n_lon
            verts.append(np.array([r * math.cos(theta), y, r * math.sin(theta)]))
    verts.append(np.array([0.0, -radius, 0.0]))
    south = len(verts) - 1

    def ring(j: int, i: int) -> int:
        return 1 + j * n_lon + (i % n_lon)

    faces: list[tuple[int, int, int]] = []
    for i in range(n_lon):
        faces.append((0, ring(0, i + 1), ring(0, i)))
    for j in range(n_lat - 1):
        for i in range(n_lon):
            a, b = ring(j, i), ring(j, i + 1)
            c, d = ring(j + 1, i), ring(j + 1, i + 1)
            faces.append((a, d, c))
            faces.append((a, b, d))
    for i in range(n_lon):
        faces.append((south, ring(n_lat - 1, i), ring(n_lat - 1, i + 1)))
    return np.array(verts), faces


def _build_spheres(params: CreationParams, body_id: int) -> SoftBody:
    """3-D default: concentric triangulated UV spheres. Structural springs are
    the surface mesh edges of every layer, radius springs join matching
    vertices, shear springs cross-brace a vertex to its neighbours on the
    adjacent layer. Faces are stored for the outer surface only."""
    body = SoftBody(3, body_id)
    n_lon, n_lat = _sphere_grid(params.particle_count)
    verts, tri = uv_sphere(n_lon, n_lat, params.size)
    per_layer = verts.shape[0]
    radii = [params.size]
    for _ in range(1, params.layer_count):
        radii.append(radii[-1] * params.inner_ratio)
    for radius in radii:
        body.add_particles(verts * (radius / params.size), np.full(per_layer, 1.0))
    _spread_masses(body, params.total_mass)

    ks, cs = params.hook_constants, params.damping_factors
    edges = sorted({(min(a, b), max(a, b)) for a, b, c in tri for a, b in ((a, b), (b, c), (c, a))})
    for layer_index in range(params.layer_count):
        base = layer_index * per_layer
        for a, b in edges:
            body.add_spring(base + a, base + b, STRUCTURAL, ks[STRUCTURAL], cs[STRUCTURAL])
    for layer_index in range(params.layer_count - 1):
        outer_base, inner_base = layer_index * per_layer, (layer_index + 1) * per_layer
        for v in range(per_layer):
            body.add_spring(outer_base + v, inner_base + v, RADIUS, ks[RADIUS], cs[RADIUS])
        for a, b in edges:
            body.add_spring(outer_base + a, inner_base + b, SHEAR, ks[SHEAR], cs[SHEAR])
            body.add_spring(outer_base + b, inner_base + a, SHEAR, ks[SHEAR], cs[SHEAR])
    for a, b, c in tri:
        body.add_face(a, b, c)

    body.layers = []
    for layer_index in range(params.layer_count):
        label = "outer" if layer_index == 0 else ("inner" if layer_index == params.layer_count - 1 else f"mid{layer_index}")
        body.layers.append(Layer(label, list(range(layer_index * per_layer, (layer_index + 1) * per_layer))))
    return body


# -- attach ------------------------------------------------------------------


def attach_objects(a: SoftBody, b: SoftBody, pairs: list[tuple[int, int]],
                   kind: str = STRUCTURAL, hook_constant: float | None = None,
                   damping_factor: float | None = None) -> tuple[SoftBody, dict]:
    """Merge two bodies and bridge them with one spring per particle pair.

    Each pair is (particle id in a, particle id in b), so both endpoints of a
    bridge spring always come from different bodies; passing the same body
    twice raises SAME_OBJECT. Returns the combined body plus the id remapping
    ``{"a": {old: new}, "b": {old: new}}``; the inputs are left untouched.
    """
    if a is b or a.id == b.id:
        raise err("SAME_OBJECT", "attachment needs two distinct bodies")
    for pair in pairs:
        if len(pair) != 2:
            raise err("INVALID_PARAMS", "each attachment pair must name one particle per body")
    dimension = max(a.dimension, b.dimension)
    combined = SoftBody(dimension, a.id)
    combined.color = a.color
    combined.spring_defaults = dict(a.spring_defaults)
    if dimension >= 2:
        combined.pressure_coefficient = a.pressure_coefficient if a.pressure_coefficient is not None else b.pressure_coefficient

    map_a = {old: old for old in range(a.particle_count)}
    offset = a.particle_count
    map_b = {old: old + offset for old in range(b.particle_count)}

    combined.add_particles(a.positions, a.masses, a.pinned)
    combined.add_particles(b.positions, b.masses, b.pinned)
    combined.velocities[:offset] = a.velocities
    combined.velocities[offset:] = b.velocities

    for body, mapping in ((a, map_a), (b, map_b)):
        for s in body.springs:
            combined.add_spring(mapping[s.head], mapping[s.tail], s.kind,
                                s.hook_constant, s.damping_factor, s.rest_length)
        for f in body.faces:
            v1, v2, v3 = (mapping[v] for v in f.vertices)
            combined.add_face(v1, v2, v3)

    group_offset = (max(l.group for l in a.layers) + 1) if a.layers else 1
    combined.layers = [Layer(l.label, [map_a[i] for i in l.particle_ids], l.group) for l in a.layers]
    combined.layers += [Layer(l.label, [map_b[i] for i in l.particle_ids], l.group + group_offset) for l in b.layers]

    for pid_a, pid_b in pairs:
        if pid_a not in map_a:
            raise err("UNKNOWN_PARTICLE", f"particle {pid_a} not in first body")
        if pid_b not in map_b:
            raise err("UNKNOWN_PARTICLE", f"particle {pid_b} not in second body")
        combined.add_spring(map_a[pid_a], map_b[pid_b], kind, hook_constant, damping_factor)

    combined.apply_dimension_mask()
    return combined, {"a": map_a, "b": map_b}


# -- geometry ----------------------------------------------------------------


def compute_volume(body: SoftBody, positions: np.ndarray | None = None) -> float:
    """Signed enclosed volume of the face surface via the tetrahedron sum
    V = (1/6) * sum over faces of p1 . (p2 x p3); positive for outward winding."""
    if body.dimension < 3:
        raise err("NOT_VOLUMETRIC", "volume is defined for 3-D bodies only")
    cache = body.face_arrays()
    if cache["count"] == 0 or not cache["closed"]:
        raise err("OPEN_SURFACE", "face set does not close the body surface")
    x = body.positions if positions is None else positions
    p0, p1, p2 = x[cache["v0"]], x[cache["v1"]], x[cache["v2"]]
    return float(np.einsum("ij,ij->", p0, np.cross(p1, p2)) / 6.0)


def enclosed_area(body: SoftBody, positions: np.ndarray | None = None) -> float:
    """Total shoelace area of the outer rings (2-D bodies, xy plane)."""
    if body.dimension != 2:
        raise err("NOT_APPLICABLE", "enclosed area is defined for 2-D bodies")
    rings = body.outer_rings()
    if not rings or any(len(r) < 3 for r in rings):
        raise err("NOT_ENCLOSED", "2-D body lacks a closed outer ring")
    x = body.positions if positions is None else positions
    total = 0.0
    for ring in rings:
        pts = x[ring]
        nxt = np.roll(pts, -1, axis=0)
        total += 0.5 * float(np.sum(pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1]))
    return total


def enclosed_measure(body: SoftBody, positions: np.ndarray | None = None) -> float:
    """Volume for 3-D bodies, enclosed polygon area (unit depth) for 2-D."""
    if body.dimension == 3:
        return compute_volume(body, positions)
    return enclosed_area(body, positions)
