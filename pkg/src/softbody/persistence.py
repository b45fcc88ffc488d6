"""Canonical file formats: .sbobj, .sbstate, .sbseries, .sbenv and CSV export.

Documents are UTF-8 JSON with sorted keys and floats printed at 17
significant digits, so save -> load -> save is byte-identical and loaded
floats equal the saved ones bit for bit. Readers gate on formatVersion and
reject unknown majors.
"""

from __future__ import annotations

import csv

import numpy as np

from .collision import Collider, DEFAULT_DETECTOR, DETECTORS, DetectorRegistry, HALF_SPACE, SPHERE
from .engine import Frame, PAUSED, Series, SimInstance, SimParams, snapshot_frame
from .errors import SimulationError, err
from .forces import ForceParams
from .integrators import DEFAULT_INTEGRATOR, INTEGRATORS, IntegratorRegistry
from .model import Face, Layer, SoftBody, Spring

FORMAT_VERSION = 1


# -- canonical JSON -----------------------------------------------------------


def format_float(value: float) -> str:
    """17-significant-digit decimal; always spelled as a float literal."""
    text = "%.17g" % float(value)
    if not any(ch in text for ch in ".eE"):
        text += ".0"
    return text


def _canon(value, indent: int) -> str:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        parts = [f'{pad}  "{key}": {_canon(value[key], indent + 1)}' for key in sorted(value)]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        items = list(value)
        if not items:
            return "[]"
        if all(isinstance(i, (int, float, np.integer, np.floating)) and not isinstance(i, bool) for i in items):
            return "[" + ", ".join(_canon(i, 0) for i in items) + "]"
        parts = [f"{pad}  {_canon(i, indent + 1)}" for i in items]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise err("SCHEMA_MISMATCH", f"cannot serialize value of type {type(value).__name__}")


def canonical_json(document: dict) -> str:
    return _canon(document, 0) + "\n"


def _parse_document(text: str) -> dict:
    import json

    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise err("CORRUPT_DOCUMENT", f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise err("SCHEMA_MISMATCH", "document root must be an object")
    return document


def _check_version(document: dict) -> None:
    version = document.get("formatVersion")
    if not isinstance(version, int):
        raise err("SCHEMA_MISMATCH", "missing integer formatVersion")
    if version != FORMAT_VERSION:
        raise err("SCHEMA_MISMATCH", f"unsupported formatVersion {version}")


def _write_text(text: str, sink) -> None:
    try:
        if hasattr(sink, "write"):
            sink.write(text)
        else:
            with open(sink, "w", encoding="utf-8") as handle:
                handle.write(text)
    except OSError as exc:
        raise err("IO_FAILURE", str(exc)) from exc


def _read_text(source) -> str:
    try:
        if hasattr(source, "read"):
            return source.read()
        with open(source, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise err("IO_FAILURE", str(exc)) from exc


def _vec(value, what: str) -> list[float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise err("SCHEMA_MISMATCH", f"{what} must be a 3-component array")
    return [float(v) for v in value]


# -- body <-> document --------------------------------------------------------


def body_to_document(body: SoftBody, include_pinned: bool) -> dict:
    particles = []
    for i in range(body.particle_count):
        entry = {
            "id": i,
            "mass": float(body.masses[i]),
            "position": [float(v) for v in body.positions[i]],
            "velocity": [float(v) for v in body.velocities[i]],
        }
        if include_pinned:
            entry["pinned"] = bool(body.pinned[i])
        particles.append(entry)
    springs = [
        {
            "id": s.id, "head": s.head, "tail": s.tail, "kind": s.kind,
            "restLen": float(s.rest_length), "k": float(s.hook_constant), "c": float(s.damping_factor),
        }
        for s in body.springs
    ]
    faces = [{"id": f.id, "vertices": list(f.vertices)} for f in body.faces]
    layers = [{"label": l.label, "particles": list(l.particle_ids), "group": l.group} for l in body.layers]
    document = {
        "dimension": body.dimension,
        "layers": layers,
        "particles": particles,
        "springs": springs,
        "faces": faces,
        "color": [float(c) for c in body.color],
    }
    if body.dimension >= 2:
        document["pressureCoefficient"] = body.pressure_coefficient
    return document


def body_from_document(document: dict, *, allow_pinned: bool) -> SoftBody:
    dimension = document.get("dimension")
    if dimension not in (1, 2, 3):
        raise err("SCHEMA_MISMATCH", "dimension must be 1, 2 or 3")
    raw_particles = document.get("particles")
    if not isinstance(raw_particles, list) or not raw_particles:
        raise err("SCHEMA_MISMATCH", "particles must be a non-empty array")

    body = SoftBody(dimension)
    id_map: dict[int, int] = {}
    positions, masses, velocities, pinned = [], [], [], []
    for index, entry in enumerate(raw_particles):
        if not isinstance(entry, dict) or "id" not in entry or "mass" not in entry:
            raise err("SCHEMA_MISMATCH", "each particle needs id and mass")
        pid = entry["id"]
        if pid in id_map:
            raise err("INVARIANT_VIOLATION", f"duplicate particle id {pid}")
        id_map[pid] = index
        if float(entry["mass"]) <= 0:
            raise err("INVARIANT_VIOLATION", f"particle {pid} has non-positive mass")
        masses.append(float(entry["mass"]))
        positions.append(_vec(entry.get("position", [0, 0, 0]), "position"))
        velocities.append(_vec(entry.get("velocity", [0, 0, 0]), "velocity"))
        pinned.append(bool(entry.get("pinned", False)) if allow_pinned else False)
    body.add_particles(np.array(positions), np.array(masses), np.array(pinned, dtype=bool))
    body.velocities[:] = np.array(velocities)

    for entry in document.get("springs", []):
        for key in ("id", "head", "tail", "restLen", "k", "c"):
            if key not in entry:
                raise err("SCHEMA_MISMATCH", f"spring missing field {key!r}")
        head, tail = entry["head"], entry["tail"]
        if head not in id_map or tail not in id_map:
            raise err("INVARIANT_VIOLATION", f"spring {entry['id']} references an unknown particle")
        try:
            spring = Spring(
                id=int(entry["id"]),
                head=id_map[head],
                tail=id_map[tail],
                rest_length=float(entry["restLen"]),
                hook_constant=float(entry["k"]),
                damping_factor=float(entry["c"]),
                kind=entry.get("kind", "structural"),
            )
        except SimulationError as exc:
            raise err("INVARIANT_VIOLATION", exc.message) from exc
        body.springs.append(spring)
        body._next_spring_id = max(body._next_spring_id, spring.id + 1)

    raw_faces = document.get("faces", [])
    if dimension == 1 and raw_faces:
        raise err("INVARIANT_VIOLATION", "1-D bodies cannot carry faces")
    for entry in raw_faces:
        vertices = entry.get("vertices")
        if not isinstance(vertices, list) or len(vertices) != 3:
            raise err("SCHEMA_MISMATCH", "face vertices must be a 3-id array")
        try:
            mapped = tuple(id_map[v] for v in vertices)
        except KeyError as exc:
            raise err("INVARIANT_VIOLATION", f"face references unknown particle {exc}") from exc
        edge_springs = []
        for a, b in ((mapped[0], mapped[1]), (mapped[1], mapped[2]), (mapped[2], mapped[0])):
            spring = body.find_spring(a, b)
            edge_springs.append(spring.id if spring else body.add_spring(a, b))
        try:
            face = Face(id=int(entry["id"]), vertices=mapped, springs=tuple(edge_springs))
        except SimulationError as exc:
            raise err("INVARIANT_VIOLATION", exc.message) from exc
        body.faces.append(face)
        body._next_face_id = max(body._next_face_id, face.id + 1)

    body.layers = []
    for entry in document.get("layers", []):
        ids = entry.get("particles", [])
        try:
            mapped_ids = [id_map[v] for v in ids]
        except KeyError as exc:
            raise err("INVARIANT_VIOLATION", f"layer references unknown particle {exc}") from exc
        body.layers.append(Layer(entry.get("label", "outer"), mapped_ids, int(entry.get("group", 0))))
    if not body.layers:
        body.layers = [Layer("outer", list(range(body.particle_count)))]

    if dimension >= 2:
        pressure = document.get("pressureCoefficient")
        if pressure is not None and pressure < 0:
            raise err("INVARIANT_VIOLATION", "pressureCoefficient must be non-negative")
        body.pressure_coefficient = None if pressure is None else float(pressure)
    else:
        if document.get("pressureCoefficient") is not None:
            raise err("INVARIANT_VIOLATION", "1-D bodies carry no pressure coefficient")
        body.pressure_coefficient = None
    color = document.get("color", list(body.color))
    body.color = tuple(float(c) for c in _vec(color, "color"))
    body.invalidate_topology()
    body.apply_dimension_mask()
    return body


# -- colliders ----------------------------------------------------------------


def collider_to_document(collider: Collider) -> dict:
    if collider.kind == HALF_SPACE:
        params = {"point": [float(v) for v in collider.point], "normal": [float(v) for v in collider.normal]}
    else:
        params = {"center": [float(v) for v in collider.center], "radius": float(collider.radius)}
    return {"kind": collider.kind, "params": params,
            "kc": float(collider.contact_stiffness), "kd": float(collider.contact_damping)}


def collider_from_document(entry: dict) -> Collider:
    kind = entry.get("kind")
    params = entry.get("params", {})
    kc = float(entry.get("kc", 1000.0))
    kd = float(entry.get("kd", 5.0))
    try:
        if kind == HALF_SPACE:
            return Collider(HALF_SPACE, point=np.array(_vec(params.get("point"), "point")),
                            normal=np.array(_vec(params.get("normal"), "normal")),
                            contact_stiffness=kc, contact_damping=kd)
        if kind == SPHERE:
            return Collider(SPHERE, center=np.array(_vec(params.get("center"), "center")),
                            radius=float(params.get("radius", 0.0)),
                            contact_stiffness=kc, contact_damping=kd)
    except SimulationError as exc:
        raise err("SCHEMA_MISMATCH", exc.message) from exc
    raise err("SCHEMA_MISMATCH", f"unknown collider kind {kind!r}")


def load_environment(source) -> tuple[list[Collider], dict]:
    document = _parse_document(_read_text(source))
    _check_version(document)
    colliders = [collider_from_document(entry) for entry in document.get("colliders", [])]
    return colliders, document.get("displayHints", {})


def write_environment(colliders, display_hints: dict | None, sink) -> str:
    document = {
        "formatVersion": FORMAT_VERSION,
        "colliders": [collider_to_document(c) for c in colliders],
        "displayHints": display_hints or {},
    }
    text = canonical_json(document)
    _write_text(text, sink)
    return text


# -- object persistence (UC10) -------------------------------------------------


def export_object(body: SoftBody, sink) -> str:
    document = {"formatVersion": FORMAT_VERSION}
    document.update(body_to_document(body, include_pinned=False))
    text = canonical_json(document)
    _write_text(text, sink)
    return text


def import_object(source) -> SoftBody:
    document = _parse_document(_read_text(source))
    _check_version(document)
    return body_from_document(document, allow_pinned=False)


# -- single state (UC09 / UC14) ------------------------------------------------


def _params_to_document(params: SimParams) -> dict:
    fp = params.force_params
    return {
        "forceParams": {
            "gravity": [float(v) for v in fp.gravity],
            "dragCoefficient": float(fp.drag_coefficient),
            "pressureCoefficient": None if fp.pressure_coefficient is None else float(fp.pressure_coefficient),
            "elasticLimit": float(fp.elastic_limit),
            "plasticRate": float(fp.plastic_rate),
            "fractureStrain": float(fp.fracture_strain),
        },
        "timeStepOverride": None if params.time_step_override is None else float(params.time_step_override),
        "frameRate": float(params.frame_rate),
    }


def _params_from_document(entry: dict) -> SimParams:
    fp = entry.get("forceParams", {})
    try:
        force_params = ForceParams(
            gravity=np.array(_vec(fp.get("gravity", [0.0, -9.81, 0.0]), "gravity")),
            drag_coefficient=float(fp.get("dragCoefficient", 0.1)),
            pressure_coefficient=fp.get("pressureCoefficient"),
            elastic_limit=float(fp.get("elasticLimit", 1.5)),
            plastic_rate=float(fp.get("plasticRate", 0.1)),
            fracture_strain=float(fp.get("fractureStrain", 2.5)),
        )
        return SimParams(
            force_params=force_params,
            time_step_override=entry.get("timeStepOverride"),
            frame_rate=float(entry.get("frameRate", 60.0)),
        )
    except SimulationError as exc:
        raise err("SCHEMA_MISMATCH", exc.message) from exc


def save_state(instance: SimInstance, sink) -> str:
    document = {
        "formatVersion": FORMAT_VERSION,
        "savedAtTick": instance.tick,
        "simTime": instance.sim_time,
        "integratorName": instance.integrator_name,
        "detectorName": instance.detector_name,
        "params": _params_to_document(instance.params),
        "body": dict(body_to_document(instance.body, include_pinned=True)),
        "environment": [collider_to_document(c) for c in instance.environment],
    }
    text = canonical_json(document)
    _write_text(text, sink)
    return text


def load_state(source, instance_id: int = 0,
               integrators: IntegratorRegistry = INTEGRATORS,
               detectors: DetectorRegistry = DETECTORS) -> SimInstance:
    """Restore a paused instance; unknown algorithm names degrade to the
    defaults with a recorded warning so documents outlive plugin sets."""
    document = _parse_document(_read_text(source))
    _check_version(document)
    for key in ("savedAtTick", "simTime", "integratorName", "detectorName", "params", "body"):
        if key not in document:
            raise err("SCHEMA_MISMATCH", f"state document missing {key!r}")
    try:
        body = body_from_document(document["body"], allow_pinned=True)
    except SimulationError as exc:
        if exc.code in ("SCHEMA_MISMATCH", "INVARIANT_VIOLATION", "IO_FAILURE"):
            raise
        raise err("CORRUPT_DOCUMENT", exc.message) from exc
    params = _params_from_document(document["params"])
    warnings = []
    integrator_name = document["integratorName"]
    if integrator_name not in integrators:
        warnings.append(f"unknown integrator {integrator_name!r}; using {DEFAULT_INTEGRATOR}")
        integrator_name = DEFAULT_INTEGRATOR
    detector_name = document["detectorName"]
    if detector_name not in detectors:
        warnings.append(f"unknown detector {detector_name!r}; using {DEFAULT_DETECTOR}")
        detector_name = DEFAULT_DETECTOR
    environment = [collider_from_document(entry) for entry in document.get("environment", [])]
    instance = SimInstance(instance_id, body, integrator_name=integrator_name,
                           detector_name=detector_name, environment=environment,
                           params=params, status=PAUSED)
    instance.tick = int(document["savedAtTick"])
    instance.sim_time = float(document["simTime"])
    instance.warnings.extend(warnings)
    instance.last_frame = snapshot_frame(instance)
    return instance


# -- series (UC09 / UC15) -------------------------------------------------------


def _frame_to_document(frame: Frame) -> dict:
    return {
        "tick": frame.tick,
        "simTime": frame.sim_time,
        "positions": [[float(v) for v in row] for row in frame.positions],
        "velocities": [[float(v) for v in row] for row in frame.velocities],
        "brokenSpringIds": list(frame.broken_spring_ids),
    }


def write_series(series: Series, sink) -> str:
    if not series.frames:
        raise err("EMPTY_SERIES", "refusing to write a series with no frames")
    document = {
        "formatVersion": FORMAT_VERSION,
        "header": {
            "body": body_to_document(series.body, include_pinned=True),
            "params": _params_to_document(series.params),
            "integratorName": series.integrator_name,
            "detectorName": series.detector_name,
            "stride": series.stride,
            "frameCount": len(series.frames),
        },
        "frames": [_frame_to_document(f) for f in series.frames],
    }
    text = canonical_json(document)
    _write_text(text, sink)
    return text


def load_series(source) -> Series:
    document = _parse_document(_read_text(source))
    _check_version(document)
    header = document.get("header")
    if not isinstance(header, dict) or "body" not in header:
        raise err("SCHEMA_MISMATCH", "series document missing header.body")
    body = body_from_document(header["body"], allow_pinned=True)
    raw_frames = document.get("frames", [])
    if not raw_frames:
        raise err("EMPTY_SERIES", "series holds no frames")
    frames: list[Frame] = []
    previous_tick = None
    for entry in raw_frames:
        if not isinstance(entry, dict) or "tick" not in entry or "positions" not in entry:
            raise err("SCHEMA_MISMATCH", "frame needs tick and positions")
        tick = int(entry["tick"])
        if previous_tick is not None and tick <= previous_tick:
            raise err("SCHEMA_MISMATCH", "frame ticks must increase strictly")
        previous_tick = tick
        positions = np.array(entry["positions"], dtype=np.float64)
        velocities = np.array(entry.get("velocities", np.zeros_like(positions)), dtype=np.float64)
        if positions.shape != (body.particle_count, 3):
            raise err("SCHEMA_MISMATCH", "frame positions disagree with header topology")
        frames.append(Frame(
            instance_id=0,
            tick=tick,
            sim_time=float(entry.get("simTime", 0.0)),
            positions=positions,
            velocities=velocities,
            broken_spring_ids=[int(v) for v in entry.get("brokenSpringIds", [])],
            diagnostics={},
        ))
    return Series(
        body=body,
        params=_params_from_document(header.get("params", {})),
        integrator_name=header.get("integratorName", DEFAULT_INTEGRATOR),
        detector_name=header.get("detectorName", DEFAULT_DETECTOR),
        stride=int(header.get("stride", 1)),
        frames=frames,
    )


# -- CSV export -----------------------------------------------------------------


def export_csv(series: Series, sink) -> None:
    """One row per (frame, particle); numbers carry 17 significant digits."""
    close_after = False
    if hasattr(sink, "write"):
        handle = sink
    else:
        try:
            handle = open(sink, "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise err("IO_FAILURE", str(exc)) from exc
        close_after = True
    try:
        writer = csv.writer(handle)
        writer.writerow(["tick", "simTime", "particleId", "x", "y", "z", "vx", "vy", "vz"])
        for frame in series.frames:
            for pid in range(frame.positions.shape[0]):
                writer.writerow([
                    frame.tick,
                    format_float(frame.sim_time),
                    pid,
                    *(format_float(v) for v in frame.positions[pid]),
                    *(format_float(v) for v in frame.velocities[pid]),
                ])
    except OSError as exc:
        raise err("IO_FAILURE", str(exc)) from exc
    finally:
        if close_after:
            handle.close()


def instance_from_series(series: Series, instance_id: int = 0) -> SimInstance:
    """Playback instance seeded from a series header."""
    from .engine import start_playback

    instance = SimInstance(instance_id, series.body.copy(),
                           integrator_name=series.integrator_name,
                           detector_name=series.detector_name,
                           params=series.params, status=PAUSED)
    start_playback(instance, series)
    return instance
