"""Instance manager behind the network server and the CLI batch runner.

The hub owns every live SimInstance, drains external commands at step
boundaries (a single lock makes commands atomic between steps), paces
physics against the wall clock with a fixed-dt accumulator, and fans frames
out to subscribers. Slow subscribers never stall stepping: sinks must be
non-blocking enqueue callables and excess backlog simply slows simulated
time rather than dropping physics steps.
"""

from __future__ import annotations

import itertools
import math
import threading
import time
from dataclasses import dataclass, field

from . import engine, persistence
from .collision import DETECTORS, DetectorRegistry, ground_plane
from .engine import PAUSED, PLAYBACK, RUNNING, SimInstance
from .errors import SimulationError, err
from .forces import DRAG, IMPULSE, ExternalInput
from .integrators import DEFAULT_INTEGRATOR, INTEGRATORS, IntegratorRegistry
from .model import CreationParams, attach_objects, create_soft_body, default_creation_params

MAX_BACKLOG_SECONDS = 0.25  # beyond this the simulation slows instead of catching up
MAX_STEPS_PER_SWEEP = 200
PAUSED_REPUBLISH_SECONDS = 1.0


@dataclass
class Subscription:
    id: int
    instance_id: int
    rate_hz: float
    sink: object  # callable(dict) -> None, non-blocking


@dataclass
class _Pacing:
    last_wall: float = field(default_factory=time.monotonic)
    backlog: float = 0.0
    last_publish_wall: float = 0.0
    playback_done: bool = False


def frame_payload(frame: engine.Frame) -> dict:
    return {
        "type": "frame",
        "instance_id": frame.instance_id,
        "tick": frame.tick,
        "sim_time": frame.sim_time,
        "positions": frame.positions.tolist(),
        "velocities": frame.velocities.tolist(),
        "broken_spring_ids": list(frame.broken_spring_ids),
        "diagnostics": frame.diagnostics,
    }


class SimulationHub:
    def __init__(self, integrators: IntegratorRegistry = INTEGRATORS,
                 detectors: DetectorRegistry = DETECTORS, max_instances: int = 8,
                 default_environment=None):
        self.integrators = integrators
        self.detectors = detectors
        self.max_instances = max_instances
        self.default_environment = list(default_environment) if default_environment else [ground_plane()]
        self.instances: dict[int, SimInstance] = {}
        self._instance_ids = itertools.count(1)
        self._subscription_ids = itertools.count(1)
        self._subscriptions: dict[int, Subscription] = {}
        self._pacing: dict[int, _Pacing] = {}
        self._lock = threading.RLock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, name="softbody-hub", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._stop.set()
        self._thread.join(timeout=5.0)
        self._thread = None

    # -- instance management ---------------------------------------------------

    def _admit(self) -> None:
        if len(self.instances) >= self.max_instances:
            raise err("INSTANCE_LIMIT", f"at most {self.max_instances} live instances")

    def _register(self, instance: SimInstance) -> SimInstance:
        self.instances[instance.id] = instance
        self._pacing[instance.id] = _Pacing()
        return instance

    def get(self, instance_id: int) -> SimInstance:
        instance = self.instances.get(instance_id)
        if instance is None:
            raise err("UNKNOWN_INSTANCE", f"no instance with id {instance_id}")
        return instance

    def create_instance(self, creation: CreationParams | None = None, dimension: int = 2,
                        integrator_name: str | None = None, detector_name: str | None = None,
                        environment=None, drop_height: float | None = None) -> SimInstance:
        with self._lock:
            self._admit()
            params = creation or default_creation_params(dimension)
            body = create_soft_body(params)
            # construction centers bodies at the origin; lift them clear of the
            # default ground plane unless the caller pins a height
            if body.dimension >= 2:
                lift = 2.0 * params.size if drop_height is None else drop_height
                body.positions[:, 1] += lift
            name = integrator_name or DEFAULT_INTEGRATOR
            if name not in self.integrators:
                raise err("UNKNOWN_ALGORITHM", f"no integrator named {name!r}")
            detector = detector_name or "bruteForce"
            if detector not in self.detectors:
                raise err("UNKNOWN_ALGORITHM", f"no detector named {detector!r}")
            instance = SimInstance(next(self._instance_ids), body, integrator_name=name,
                                   detector_name=detector,
                                   environment=environment if environment is not None else self.default_environment,
                                   creation=params, status=PAUSED)
            return self._register(instance)

    def import_object_instance(self, path: str, integrator_name: str | None = None) -> SimInstance:
        with self._lock:
            self._admit()
            body = persistence.import_object(path)
            name = integrator_name or DEFAULT_INTEGRATOR
            if name not in self.integrators:
                raise err("UNKNOWN_ALGORITHM", f"no integrator named {name!r}")
            instance = SimInstance(next(self._instance_ids), body, integrator_name=name,
                                   environment=self.default_environment, status=PAUSED)
            return self._register(instance)

    def import_state_instance(self, path: str) -> SimInstance:
        with self._lock:
            self._admit()
            instance = persistence.load_state(path, instance_id=next(self._instance_ids),
                                              integrators=self.integrators, detectors=self.detectors)
            return self._register(instance)

    def start_playback_instance(self, path: str) -> SimInstance:
        with self._lock:
            self._admit()
            series = persistence.load_series(path)
            instance = persistence.instance_from_series(series, instance_id=next(self._instance_ids))
            return self._register(instance)

    def attach_instances(self, id_a: int, id_b: int, pairs, kind: str = "structural",
                         hook_constant: float | None = None, damping_factor: float | None = None) -> SimInstance:
        with self._lock:
            self._admit()
            a, b = self.get(id_a), self.get(id_b)
            if id_a == id_b:
                raise err("SAME_OBJECT", "attachment needs two distinct instances")
            combined, _ = attach_objects(a.body, b.body, pairs, kind=kind,
                                         hook_constant=hook_constant, damping_factor=damping_factor)
            from dataclasses import replace

            from .engine import SimParams

            params = SimParams(force_params=replace(a.params.force_params),
                               time_step_override=a.params.time_step_override,
                               frame_rate=a.params.frame_rate)
            instance = SimInstance(next(self._instance_ids), combined,
                                   integrator_name=a.integrator_name, detector_name=a.detector_name,
                                   environment=list(a.environment), params=params,
                                   status=PAUSED)
            return self._register(instance)

    def add_instance(self, source_id: int, mode: str, algorithm: str | None = None) -> SimInstance:
        with self._lock:
            source = self.get(source_id)
            if mode == "view":
                return source.views()
            if mode != "new_algorithm":
                raise err("INVALID_PARAMS", f"unknown add_instance mode {mode!r}")
            self._admit()
            clone = engine.clone_with_algorithm(source, algorithm or source.integrator_name,
                                                next(self._instance_ids), self.integrators)
            return self._register(clone)

    def remove_instance(self, instance_id: int) -> None:
        with self._lock:
            self.get(instance_id)
            del self.instances[instance_id]
            self._pacing.pop(instance_id, None)
            stale = [sid for sid, sub in self._subscriptions.items() if sub.instance_id == instance_id]
            for sid in stale:
                del self._subscriptions[sid]

    # -- command surface (each call is atomic between steps) ---------------------

    def start_instance(self, instance_id: int) -> None:
        with self._lock:
            instance = self.get(instance_id)
            engine.resume(instance)
            pacing = self._pacing[instance_id]
            pacing.last_wall = time.monotonic()
            pacing.backlog = 0.0

    def pause_instance(self, instance_id: int) -> None:
        with self._lock:
            engine.pause(self.get(instance_id))

    def resume_instance(self, instance_id: int) -> None:
        self.start_instance(instance_id)

    def set_params(self, instance_id: int, patch: dict) -> None:
        with self._lock:
            engine.set_params(self.get(instance_id), patch, self.integrators)

    def swap_algorithm(self, instance_id: int, kind: str, name: str) -> None:
        with self._lock:
            engine.swap_algorithm(self.get(instance_id), kind, name, self.integrators, self.detectors)

    def apply_force(self, instance_id: int, particle_ids, force, steps: int = 1) -> None:
        with self._lock:
            instance = self.get(instance_id)
            engine.apply_user_force(instance, ExternalInput(
                kind=IMPULSE, particle_ids=list(particle_ids), force=force, remaining_steps=steps))

    def apply_drag(self, instance_id: int, particle_id: int, target, stiffness: float,
                   steps: int = 30) -> None:
        with self._lock:
            instance = self.get(instance_id)
            engine.apply_user_force(instance, ExternalInput(
                kind=DRAG, particle_ids=[particle_id], target=target,
                stiffness=stiffness, remaining_steps=steps))

    def save_state(self, instance_id: int, path: str) -> None:
        with self._lock:
            persistence.save_state(self.get(instance_id), path)

    def start_series(self, instance_id: int, stride: int = 1) -> None:
        with self._lock:
            engine.start_recording(self.get(instance_id), stride)

    def stop_series(self, instance_id: int, path: str) -> int:
        with self._lock:
            series = engine.stop_recording(self.get(instance_id))
            persistence.write_series(series, path)
            return len(series.frames)

    def step_playback(self, instance_id: int) -> dict:
        with self._lock:
            frame = engine.step_playback(self.get(instance_id))
            payload = frame_payload(frame)
            self._publish(instance_id, payload)
            return payload

    def step_instance(self, instance_id: int, steps: int = 1) -> None:
        """Synchronous stepping used by tests and the CLI batch path."""
        with self._lock:
            instance = self.get(instance_id)
            for _ in range(steps):
                frame = engine.step(instance, self.integrators, self.detectors)
                self._maybe_publish(instance, frame)

    # -- subscriptions -----------------------------------------------------------

    def subscribe(self, instance_id: int, sink, rate_hz: float = 30.0) -> int:
        with self._lock:
            instance = self.get(instance_id)
            if rate_hz <= 0:
                raise err("INVALID_PARAMS", "rate_hz must be positive")
            sub = Subscription(next(self._subscription_ids), instance_id, rate_hz, sink)
            self._subscriptions[sub.id] = sub
            if instance.last_frame is not None:
                sink(frame_payload(instance.last_frame))
            return sub.id

    def unsubscribe(self, subscription_id: int) -> None:
        with self._lock:
            self._subscriptions.pop(subscription_id, None)

    def drop_subscriptions(self, subscription_ids) -> None:
        with self._lock:
            for sid in subscription_ids:
                self._subscriptions.pop(sid, None)

    def _publish(self, instance_id: int, payload: dict) -> None:
        for sub in self._subscriptions.values():
            if sub.instance_id == instance_id:
                sub.sink(payload)

    def _maybe_publish(self, instance: SimInstance, frame: engine.Frame) -> None:
        """Tick-stride decimation: a subscriber at rate r sees every
        ceil(1/(dt*r))-th tick, so two subscribers at one rate see identical
        sequences and the wall rate stays at or below r."""
        subs = [s for s in self._subscriptions.values() if s.instance_id == instance.id]
        if not subs:
            return
        dt = engine.effective_dt(instance, self.integrators)
        payload = None
        for sub in subs:
            stride = max(1, math.ceil(1.0 / (dt * sub.rate_hz)))
            if frame.tick % stride == 0:
                if payload is None:
                    payload = frame_payload(frame)
                sub.sink(payload)

    def catalog(self) -> dict:
        with self._lock:
            return {
                "type": "catalog",
                "integrators": [
                    {"name": name, "time_step": self.integrators.spec(name).time_step}
                    for name in self.integrators.names()
                ],
                "detectors": self.detectors.names(),
                "instances": [self.describe(i) for i in self.instances.values()],
            }

    def describe(self, instance: SimInstance) -> dict:
        return {
            "id": instance.id,
            "status": instance.status,
            "integrator": instance.integrator_name,
            "detector": instance.detector_name,
            "dimension": instance.body.dimension,
            "particle_count": instance.body.particle_count,
            "tick": instance.tick,
            "sim_time": instance.sim_time,
            "springs": [
                {"id": s.id, "head": s.head, "tail": s.tail, "kind": s.kind}
                for s in instance.body.springs
            ],
            "faces": [{"id": f.id, "vertices": list(f.vertices)} for f in instance.body.faces],
        }

    # -- pacing loop ---------------------------------------------------------------

    def _run(self) -> None:
        while not self._stop.is_set():
            with self._lock:
                self._sweep()
            time.sleep(0.002)

    def _sweep(self) -> None:
        now = time.monotonic()
        for instance_id, instance in list(self.instances.items()):
            pacing = self._pacing[instance_id]
            elapsed = now - pacing.last_wall
            pacing.last_wall = now
            if instance.status == RUNNING:
                dt = engine.effective_dt(instance, self.integrators)
                # still admit one step per sweep when dt exceeds the backlog cap
                pacing.backlog = min(pacing.backlog + elapsed, max(MAX_BACKLOG_SECONDS, dt))
                steps = 0
                while pacing.backlog >= dt and steps < MAX_STEPS_PER_SWEEP:
                    try:
                        frame = engine.step(instance, self.integrators, self.detectors)
                    except SimulationError as exc:
                        # halt the instance on any step failure; the last good
                        # state stays visible and subscribers learn the code
                        instance.status = PAUSED
                        instance.auto_paused = True
                        pacing.backlog = 0.0
                        self._publish(instance_id, {
                            "type": "event", "kind": "auto_paused",
                            "instance_id": instance_id, "code": exc.code,
                        })
                        break
                    pacing.backlog -= dt
                    steps += 1
                    self._maybe_publish(instance, frame)
                if steps:
                    pacing.last_publish_wall = now
            elif instance.status == PLAYBACK and not pacing.playback_done:
                interval = 1.0 / instance.params.frame_rate
                pacing.backlog = min(pacing.backlog + elapsed, MAX_BACKLOG_SECONDS)
                while pacing.backlog >= interval:
                    pacing.backlog -= interval
                    try:
                        frame = engine.step_playback(instance)
                    except SimulationError as exc:
                        if exc.code == "END_OF_SERIES":
                            pacing.playback_done = True
                            self._publish(instance_id, {
                                "type": "event", "kind": "end_of_series",
                                "instance_id": instance_id,
                            })
                            break
                        raise
                    self._publish(instance_id, frame_payload(frame))
                    pacing.last_publish_wall = now
            else:
                # paused: keep re-publishing the last frame so late viewers and
                # frozen canvases still show the state
                if instance.last_frame is not None and now - pacing.last_publish_wall >= PAUSED_REPUBLISH_SECONDS:
                    self._publish(instance_id, frame_payload(instance.last_frame))
                    pacing.last_publish_wall = now
