"""Simulation loop and instance lifecycle.

A SimInstance owns exactly one body, one integrator choice and one detector
choice. All mutation (parameter patches, algorithm swaps, queued inputs)
takes effect between steps, never inside one, so identical command sequences
pinned to tick boundaries replay bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .collision import DETECTORS, DetectorRegistry, ground_plane, group_contact_pairs
from .errors import SimulationError, err
from .forces import ForceParams, ExternalInput, DRAG, accumulate_forces, apply_deformation_model, compute_forces
from .integrators import DEFAULT_INTEGRATOR, INTEGRATORS, IntegratorRegistry
from .model import CreationParams, SoftBody, create_soft_body, enclosed_area, compute_volume

RUNNING = "running"
PAUSED = "paused"
PLAYBACK = "playback"


@dataclass
class SimParams:
    force_params: ForceParams = field(default_factory=ForceParams)
    time_step_override: float | None = None
    frame_rate: float = 60.0  # publish rate; physics stepping is never decimated

    def __post_init__(self):
        if self.time_step_override is not None and self.time_step_override <= 0:
            raise err("INVALID_PARAMS", "time step override must be positive")
        if self.frame_rate <= 0:
            raise err("INVALID_PARAMS", "frame rate must be positive")


@dataclass
class Frame:
    instance_id: int
    tick: int
    sim_time: float
    positions: np.ndarray
    velocities: np.ndarray
    broken_spring_ids: list[int]
    diagnostics: dict


@dataclass
class Series:
    """A recorded run: topology snapshot plus the per-step state frames."""

    body: SoftBody
    params: SimParams
    integrator_name: str
    detector_name: str
    stride: int
    frames: list[Frame]


@dataclass
class Recording:
    stride: int
    start_tick: int
    body_snapshot: SoftBody
    params: SimParams
    integrator_name: str
    detector_name: str
    frames: list[Frame] = field(default_factory=list)


@dataclass
class Playback:
    series: Series
    cursor: int = 0


class SimInstance:
    def __init__(self, instance_id: int, body: SoftBody, integrator_name: str = DEFAULT_INTEGRATOR,
                 detector_name: str = "bruteForce", environment=None, params: SimParams | None = None,
                 creation: CreationParams | None = None, status: str = PAUSED):
        self.id = instance_id
        self.body = body
        self.integrator_name = integrator_name
        self.detector_name = detector_name
        self.environment = list(environment) if environment is not None else [ground_plane()]
        self.params = params or SimParams()
        self.creation = creation
        self.sim_time = 0.0
        self.tick = 0
        self.status = status
        self.pending_inputs: list[ExternalInput] = []
        self.recording: Recording | None = None
        self.playback: Playback | None = None
        self.warnings: list[str] = []
        self.counters: dict = {}
        self.auto_paused = False
        self.last_frame: Frame | None = snapshot_frame(self)

    def views(self) -> "SimInstance":
        """A same-algorithm view is just another handle on this instance."""
        return self


def effective_dt(instance: SimInstance, integrators: IntegratorRegistry = INTEGRATORS) -> float:
    if instance.params.time_step_override is not None:
        return instance.params.time_step_override
    return integrators.spec(instance.integrator_name).time_step


def _diagnostics(instance: SimInstance) -> dict:
    body = instance.body
    gravity = instance.params.force_params.gravity
    kinetic = 0.5 * float(np.sum(body.masses * np.einsum("ij,ij->i", body.velocities, body.velocities)))
    cache = body.spring_arrays()
    elastic = 0.0
    if cache["count"]:
        length = np.linalg.norm(body.positions[cache["tail"]] - body.positions[cache["head"]], axis=1)
        elastic = 0.5 * float(np.sum(cache["k"] * (length - cache["rest"]) ** 2))
    potential = -float(np.sum(body.masses * (body.positions @ gravity)))
    diag = {"energy": kinetic + elastic + potential}
    try:
        if body.dimension == 3:
            diag["volume"] = compute_volume(body)
        elif body.dimension == 2:
            diag["volume"] = enclosed_area(body)
        else:
            diag["volume"] = None
    except SimulationError:
        diag["volume"] = None
    return diag


def snapshot_frame(instance: SimInstance, broken: list[int] | None = None) -> Frame:
    return Frame(
        instance_id=instance.id,
        tick=instance.tick,
        sim_time=instance.sim_time,
        positions=instance.body.positions.copy(),
        velocities=instance.body.velocities.copy(),
        broken_spring_ids=list(broken or ()),
        diagnostics=_diagnostics(instance),
    )


def step(instance: SimInstance, integrators: IntegratorRegistry = INTEGRATORS,
         detectors: DetectorRegistry = DETECTORS) -> Frame:
    """Advance one time step: detect, accumulate, integrate, deform, book-keep."""
    if instance.status != RUNNING:
        raise err("WRONG_STATUS", f"cannot step a {instance.status} instance")
    # overflow on the way to a NONFINITE_STATE rejection is expected; keep it quiet
    with np.errstate(over="ignore", invalid="ignore"):
        return _step_inner(instance, integrators, detectors)


def _step_inner(instance: SimInstance, integrators: IntegratorRegistry,
                detectors: DetectorRegistry) -> Frame:
    body = instance.body
    params = instance.params.force_params
    dt = effective_dt(instance, integrators)
    detector = detectors.get(instance.detector_name)
    environment = instance.environment

    contacts = detector(body, environment, body.positions, body.velocities, instance.counters)
    contact_pairs = [(c, environment[c.collider_index]) for c in contacts]
    contact_pairs += group_contact_pairs(body)
    accumulate_forces(body, params, instance.pending_inputs, contact_pairs, instance.counters)

    def evaluator(x, v):
        if x is body.positions and v is body.velocities:
            return body.accelerations  # stage one reuses the committed accumulators
        stage_contacts = detector(body, environment, x, v, None)
        stage_pairs = [(c, environment[c.collider_index]) for c in stage_contacts]
        stage_pairs += group_contact_pairs(body, x, v)
        forces = compute_forces(body, params, x, v, instance.pending_inputs, stage_pairs)
        return forces / body.masses[:, None]

    step_function = integrators.get(instance.integrator_name)
    try:
        new_x, new_v = step_function(body.positions, body.velocities, dt, evaluator, body.pinned)
    except SimulationError as exc:
        if exc.code == "NONFINITE_STATE":
            instance.status = PAUSED
            instance.auto_paused = True
        raise

    body.positions[:] = new_x
    body.velocities[:] = new_v
    broken = apply_deformation_model(body, params)
    body.apply_dimension_mask()

    instance.tick += 1
    instance.sim_time += dt

    for item in instance.pending_inputs:
        item.remaining_steps -= 1
    instance.pending_inputs = [i for i in instance.pending_inputs if i.remaining_steps > 0]

    frame = snapshot_frame(instance, broken)
    recording = instance.recording
    if recording is not None:
        since_start = instance.tick - recording.start_tick
        if since_start >= 1 and since_start % recording.stride == 0:
            recording.frames.append(frame)
    instance.last_frame = frame
    return frame


def pause(instance: SimInstance) -> SimInstance:
    if instance.status != RUNNING:
        raise err("WRONG_STATUS", "pause needs a running instance")
    instance.status = PAUSED
    return instance


def resume(instance: SimInstance) -> SimInstance:
    if instance.status != PAUSED:
        raise err("WRONG_STATUS", "resume needs a paused instance")
    instance.status = RUNNING
    instance.auto_paused = False
    return instance


def _reject_playback(instance: SimInstance) -> None:
    if instance.status == PLAYBACK:
        raise err("PLAYBACK_IMMUTABLE", "playback instances cannot be mutated")


def apply_user_force(instance: SimInstance, user_input: ExternalInput) -> SimInstance:
    _reject_playback(instance)
    if instance.status != RUNNING:
        raise err("WRONG_STATUS", "interaction needs a running instance")
    for pid in user_input.particle_ids:
        instance.body._check_particle(pid)
    if user_input.kind == DRAG:
        # a drag stream replaces the previous drag on the same particles;
        # remaining_steps == 0 is the release message
        targets = set(user_input.particle_ids)
        instance.pending_inputs = [
            i for i in instance.pending_inputs
            if not (i.kind == DRAG and set(i.particle_ids) == targets)
        ]
        if user_input.remaining_steps == 0:
            return instance
    instance.pending_inputs.append(user_input)
    return instance


def set_params(instance: SimInstance, patch: dict,
               integrators: IntegratorRegistry = INTEGRATORS) -> SimInstance:
    """Apply a runtime parameter patch between steps."""
    _reject_playback(instance)
    body = instance.body
    force_params = instance.params.force_params
    for key, value in patch.items():
        if key == "gravity":
            force_params.gravity = np.asarray(value, dtype=np.float64)
        elif key == "drag_coefficient":
            if value < 0:
                raise err("INVALID_PARAMS", "drag coefficient must be non-negative")
            force_params.drag_coefficient = float(value)
        elif key == "pressure_coefficient":
            if value is not None and value < 0:
                raise err("INVALID_PARAMS", "pressure coefficient must be non-negative")
            force_params.pressure_coefficient = None if value is None else float(value)
        elif key == "elastic_limit":
            if value < 1.0:
                raise err("INVALID_PARAMS", "elastic limit is a strain ratio >= 1")
            force_params.elastic_limit = float(value)
        elif key == "plastic_rate":
            if not 0.0 <= value <= 1.0:
                raise err("INVALID_PARAMS", "plastic rate must lie in [0, 1]")
            force_params.plastic_rate = float(value)
        elif key == "fracture_strain":
            if value <= force_params.elastic_limit:
                raise err("INVALID_PARAMS", "fracture strain must exceed the elastic limit")
            force_params.fracture_strain = float(value)
        elif key == "particle_mass":
            if value <= 0:
                raise err("INVALID_PARAMS", "particle mass must be positive")
            body.masses[:] = float(value)
        elif key == "particle_count":
            _rebuild_with_count(instance, int(value))
        elif key == "velocity":
            body.velocities[:] = np.asarray(value, dtype=np.float64)
            body.apply_dimension_mask()
        elif key == "acceleration":
            body.accelerations[:] = np.asarray(value, dtype=np.float64)
            body.accelerations *= _mask_of(body)
            body.forces[:] = body.accelerations * body.masses[:, None]
        elif key == "hook_constant":
            if value < 0:
                raise err("INVALID_PARAMS", "hook constant must be non-negative")
            for spring in body.springs:
                spring.hook_constant = float(value)
            body.invalidate_topology()
        elif key == "damping_factor":
            if value < 0:
                raise err("INVALID_PARAMS", "damping factor must be non-negative")
            for spring in body.springs:
                spring.damping_factor = float(value)
            body.invalidate_topology()
        elif key == "time_step_override":
            if value is not None and value <= 0:
                raise err("INVALID_PARAMS", "time step override must be positive")
            instance.params.time_step_override = None if value is None else float(value)
        elif key == "frame_rate":
            if value <= 0:
                raise err("INVALID_PARAMS", "frame rate must be positive")
            instance.params.frame_rate = float(value)
        else:
            raise err("INVALID_PARAMS", f"unknown parameter {key!r}")
    return instance


def _mask_of(body: SoftBody):
    from .model import dimension_mask

    return dimension_mask(body.dimension)


def _rebuild_with_count(instance: SimInstance, total_count: int) -> None:
    """Particle-count change rebuilds the body in place, preserving centroid,
    total mass, dimension and the simulation clock; velocities reset to the
    body average (no interpolation rule exists for fresh topology)."""
    if instance.creation is None:
        raise err("INVALID_PARAMS", "body has no construction recipe; cannot resize")
    if total_count < 2:
        raise err("INVALID_PARAMS", "particle count must be at least 2")
    body = instance.body
    recipe = instance.creation
    per_layer = max(2, total_count // recipe.layer_count)
    centroid = body.centroid()
    total_mass = body.total_mass()
    mean_velocity = body.velocities.mean(axis=0)

    new_params = replace(recipe, particle_count=per_layer, total_mass=total_mass)
    new_body = create_soft_body(new_params, body_id=body.id)
    new_body.positions += centroid - new_body.centroid()
    new_body.velocities[:] = mean_velocity
    new_body.apply_dimension_mask()
    instance.body = new_body
    instance.creation = new_params


def swap_algorithm(instance: SimInstance, kind: str, name: str,
                   integrators: IntegratorRegistry = INTEGRATORS,
                   detectors: DetectorRegistry = DETECTORS) -> SimInstance:
    _reject_playback(instance)
    if kind == "integrator":
        if name not in integrators:
            raise err("UNKNOWN_ALGORITHM", f"no integrator named {name!r}")
        if name == instance.integrator_name:
            raise err("SAME_ALGORITHM", f"{name!r} is already running")
        instance.integrator_name = name
    elif kind == "detector":
        if name not in detectors:
            raise err("UNKNOWN_ALGORITHM", f"no detector named {name!r}")
        if name == instance.detector_name:
            raise err("SAME_ALGORITHM", f"{name!r} is already running")
        instance.detector_name = name
    else:
        raise err("INVALID_PARAMS", f"unknown algorithm kind {kind!r}")
    return instance


def clone_with_algorithm(instance: SimInstance, name: str, new_id: int,
                         integrators: IntegratorRegistry = INTEGRATORS) -> SimInstance:
    """Independent comparison instance: deep copy of the current state under a
    (possibly different) integrator; no further coupling to the source."""
    if name not in integrators:
        raise err("UNKNOWN_ALGORITHM", f"no integrator named {name!r}")
    body = instance.body.copy()
    params = SimParams(
        force_params=replace(instance.params.force_params),
        time_step_override=instance.params.time_step_override,
        frame_rate=instance.params.frame_rate,
    )
    clone = SimInstance(new_id, body, integrator_name=name, detector_name=instance.detector_name,
                        environment=list(instance.environment), params=params,
                        creation=instance.creation, status=instance.status)
    clone.sim_time = instance.sim_time
    clone.tick = instance.tick
    clone.last_frame = snapshot_frame(clone)
    return clone


# -- recording and playback ---------------------------------------------------


def start_recording(instance: SimInstance, stride: int = 1) -> None:
    if stride < 1:
        raise err("INVALID_PARAMS", "stride must be at least 1")
    instance.recording = Recording(
        stride=stride,
        start_tick=instance.tick,
        body_snapshot=instance.body.copy(),
        params=SimParams(force_params=replace(instance.params.force_params),
                         time_step_override=instance.params.time_step_override,
                         frame_rate=instance.params.frame_rate),
        integrator_name=instance.integrator_name,
        detector_name=instance.detector_name,
    )


def stop_recording(instance: SimInstance) -> Series:
    recording = instance.recording
    if recording is None:
        raise err("WRONG_STATUS", "instance is not recording")
    instance.recording = None
    return Series(
        body=recording.body_snapshot,
        params=recording.params,
        integrator_name=recording.integrator_name,
        detector_name=recording.detector_name,
        stride=recording.stride,
        frames=recording.frames,
    )


def start_playback(instance: SimInstance, series: Series) -> None:
    if not series.frames:
        raise err("EMPTY_SERIES", "series holds no frames")
    instance.playback = Playback(series=series, cursor=0)
    instance.status = PLAYBACK
    instance.pending_inputs = []


def step_playback(instance: SimInstance) -> Frame:
    if instance.status != PLAYBACK or instance.playback is None:
        raise err("WRONG_STATUS", "instance is not in playback")
    playback = instance.playback
    if playback.cursor >= len(playback.series.frames):
        raise err("END_OF_SERIES", "playback reached the end of the series")
    recorded = playback.series.frames[playback.cursor]
    playback.cursor += 1
    # body state mirrors the frame so renders and saves agree with playback
    instance.body.positions[: recorded.positions.shape[0]] = recorded.positions
    instance.body.velocities[: recorded.velocities.shape[0]] = recorded.velocities
    instance.tick = recorded.tick
    instance.sim_time = recorded.sim_time
    frame = Frame(
        instance_id=instance.id,
        tick=recorded.tick,
        sim_time=recorded.sim_time,
        positions=recorded.positions.copy(),
        velocities=recorded.velocities.copy(),
        broken_spring_ids=list(recorded.broken_spring_ids),
        diagnostics=dict(recorded.diagnostics),
    )
    instance.last_frame = frame
    return frame
