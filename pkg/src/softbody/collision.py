"""Collision detection against static colliders plus penalty response.

Detectors are pluggable through a registry keyed by name; the shipped
"bruteForce" detector tests every particle against every collider, and
"aabbPruned" skips particles via a bounding-box precheck while returning
identical contact sets. Soft-to-soft reaction between attached groups is
approximated with per-group bounding-sphere proxies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import err
from .model import SoftBody, Vec3

HALF_SPACE = "halfSpace"
SPHERE = "sphere"

DEFAULT_CONTACT_STIFFNESS = 1000.0
DEFAULT_CONTACT_DAMPING = 5.0


@dataclass
class Collider:
    kind: str
    point: Vec3 | None = None        # halfSpace: a point on the plane
    normal: Vec3 | None = None       # halfSpace: unit outward normal
    center: Vec3 | None = None       # sphere
    radius: float = 0.0              # sphere
    contact_stiffness: float = DEFAULT_CONTACT_STIFFNESS
    contact_damping: float = DEFAULT_CONTACT_DAMPING

    def __post_init__(self):
        if self.kind not in (HALF_SPACE, SPHERE):
            raise err("INVALID_PARAMS", f"unknown collider kind {self.kind!r}")
        if self.contact_stiffness < 0 or self.contact_damping < 0:
            raise err("INVALID_PARAMS", "contact constants must be non-negative")
        if self.kind == HALF_SPACE:
            if self.point is None or self.normal is None:
                raise err("INVALID_PARAMS", "half-space collider needs point and normal")
            self.point = np.asarray(self.point, dtype=np.float64)
            self.normal = np.asarray(self.normal, dtype=np.float64)
            n = float(np.linalg.norm(self.normal))
            if abs(n - 1.0) > 1e-9:
                raise err("INVALID_PARAMS", "half-space normal must be unit length")
        else:
            if self.center is None or self.radius <= 0:
                raise err("INVALID_PARAMS", "sphere collider needs a center and radius > 0")
            self.center = np.asarray(self.center, dtype=np.float64)


@dataclass
class Contact:
    particle_id: int
    penetration_depth: float
    normal: Vec3
    relative_normal_velocity: float
    collider_index: int = -1


def ground_plane(height: float = 0.0, stiffness: float = DEFAULT_CONTACT_STIFFNESS,
                 damping: float = DEFAULT_CONTACT_DAMPING) -> Collider:
    return Collider(HALF_SPACE, point=np.array([0.0, height, 0.0]),
                    normal=np.array([0.0, 1.0, 0.0]),
                    contact_stiffness=stiffness, contact_damping=damping)


def _collider_contacts(index: int, collider: Collider, x: np.ndarray, v: np.ndarray,
                       candidates: np.ndarray, counters: dict | None) -> list[Contact]:
    contacts: list[Contact] = []
    if collider.kind == HALF_SPACE:
        signed = (x[candidates] - collider.point) @ collider.normal
        hit = signed < 0.0
        for pid, dist in zip(candidates[hit], signed[hit]):
            vn = float(v[pid] @ collider.normal)
            contacts.append(Contact(int(pid), float(-dist), collider.normal.copy(), vn, index))
    else:
        offset = x[candidates] - collider.center
        dist = np.linalg.norm(offset, axis=1)
        hit = dist < collider.radius
        for pid, d, off in zip(candidates[hit], dist[hit], offset[hit]):
            if d < 1e-12:
                # normal undefined at the exact center; skip with a diagnostic
                if counters is not None:
                    counters["degenerate_normals"] = counters.get("degenerate_normals", 0) + 1
                continue
            normal = off / d
            vn = float(v[pid] @ normal)
            contacts.append(Contact(int(pid), float(collider.radius - d), normal, vn, index))
    return contacts


def detect_contacts(body: SoftBody, colliders, x: np.ndarray | None = None,
                    v: np.ndarray | None = None, counters: dict | None = None) -> list[Contact]:
    """Brute-force detector: every particle against every collider.

    Contacts come back ordered by (particle id, collider index); zero-depth
    grazing touches are not emitted.
    """
    x = body.positions if x is None else x
    v = body.velocities if v is None else v
    everything = np.arange(x.shape[0], dtype=np.intp)
    contacts: list[Contact] = []
    for index, collider in enumerate(colliders):
        contacts.extend(_collider_contacts(index, collider, x, v, everything, counters))
    contacts.sort(key=lambda c: (c.particle_id, c.collider_index))
    return contacts


def detect_contacts_pruned(body: SoftBody, colliders, x: np.ndarray | None = None,
                           v: np.ndarray | None = None, counters: dict | None = None) -> list[Contact]:
    """Same contact set as the brute-force detector, with an AABB precheck."""
    x = body.positions if x is None else x
    v = body.velocities if v is None else v
    contacts: list[Contact] = []
    for index, collider in enumerate(colliders):
        if collider.kind == SPHERE:
            lo = collider.center - collider.radius
            hi = collider.center + collider.radius
            inside = np.all((x >= lo) & (x <= hi), axis=1)
            candidates = np.nonzero(inside)[0].astype(np.intp)
        else:
            candidates = np.arange(x.shape[0], dtype=np.intp)
        contacts.extend(_collider_contacts(index, collider, x, v, candidates, counters))
    contacts.sort(key=lambda c: (c.particle_id, c.collider_index))
    return contacts


def penalty_force(contact: Contact, collider: Collider) -> Vec3:
    """Spring-damper push along the contact normal.

    Damping only resists approach (negative normal velocity); the combined
    normal component is clamped at zero so the response never pulls inward.
    """
    magnitude = collider.contact_stiffness * contact.penetration_depth
    magnitude -= collider.contact_damping * min(contact.relative_normal_velocity, 0.0)
    return max(magnitude, 0.0) * contact.normal


def group_contact_pairs(body: SoftBody, x: np.ndarray | None = None,
                        v: np.ndarray | None = None) -> list[tuple[Contact, Collider]]:
    """Soft-to-soft broad phase between attachment groups of one body.

    Each group is proxied by its bounding sphere; particles of one group that
    fall inside another group's sphere get a penalty contact pushing them
    back out. Single-group bodies produce nothing.
    """
    groups = body.groups
    if len(groups) < 2:
        return []
    x = body.positions if x is None else x
    v = body.velocities if v is None else v
    spheres = []
    members = []
    for group in groups:
        ids = np.asarray(body.group_particle_ids(group), dtype=np.intp)
        if ids.size == 0:
            continue
        center = x[ids].mean(axis=0)
        radius = float(np.linalg.norm(x[ids] - center, axis=1).max())
        if radius <= 0.0:
            continue
        spheres.append(Collider(SPHERE, center=center, radius=radius))
        members.append(ids)
    pairs: list[tuple[Contact, Collider]] = []
    for i in range(len(spheres)):
        for j in range(len(spheres)):
            if i == j:
                continue
            gap = np.linalg.norm(spheres[i].center - spheres[j].center)
            if gap >= spheres[i].radius + spheres[j].radius:
                continue
            for contact in _collider_contacts(-1, spheres[j], x, v, members[i], None):
                pairs.append((contact, spheres[j]))
    return pairs


class DetectorRegistry:
    """Named collision detectors; registration refuses duplicates."""

    def __init__(self):
        self._detectors: dict[str, object] = {}

    def register(self, name: str, detect) -> None:
        """Register ``detect(body, colliders, x=None, v=None, counters=None)
        -> list[Contact]``; results must be ordered by (particle id, collider
        index) and must not emit zero-depth contacts."""
        if name in self._detectors:
            raise err("DUPLICATE_NAME", f"detector {name!r} already registered")
        self._detectors[name] = detect

    def get(self, name: str):
        if name not in self._detectors:
            raise err("UNKNOWN_ALGORITHM", f"no detector named {name!r}")
        return self._detectors[name]

    def names(self) -> list[str]:
        return list(self._detectors)

    def __contains__(self, name: str) -> bool:
        return name in self._detectors


DEFAULT_DETECTOR = "bruteForce"


def default_detector_registry() -> DetectorRegistry:
    registry = DetectorRegistry()
    registry.register("bruteForce", detect_contacts)
    registry.register("aabbPruned", detect_contacts_pruned)
    return registry


DETECTORS = default_detector_registry()


def register_detector(name: str, detect, registry: DetectorRegistry | None = None) -> None:
    (registry or DETECTORS).register(name, detect)
