"""Acceptance suite: one test per release criterion, each at its stated
tolerance and runtime budget. A summary line per criterion is printed at the
end of the pytest run (see conftest)."""

import functools
import io
import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from softbody import engine, persistence
from softbody.ahp import cost_value_points, priority_vector, read_matrix_csv
from softbody.engine import RUNNING, SimInstance, SimParams
from softbody.errors import SimulationError
from softbody.forces import ForceParams, accumulate_forces, pressure_forces
from softbody.hub import SimulationHub
from softbody.integrators import (
    step_explicit_euler,
    step_midpoint,
    step_rk4,
    step_semi_implicit_euler,
)
from softbody.model import (
    attach_objects,
    compute_volume,
    create_default_soft_body,
    default_creation_params,
    vec3,
)
from softbody.server import create_app

from conftest import record_acceptance
from helpers import CUBE_FACES, brute_force_volume, empirical_order, make_box

TABLE2_RV = [0.04008, 0.303636, 0.257903, 0.137458, 0.026803,
             0.093861, 0.019991, 0.030226, 0.020978, 0.069064]
TABLE4_RV = [0.16388357, 0.07823027, 0.07883144, 0.20970563, 0.11218574,
             0.10629523, 0.19646051, 0.01715835, 0.02170381, 0.01554545]


def criterion(name):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                record_acceptance(name, False)
                raise
            record_acceptance(name, True)
        return inner
    return wrap


def dropped_default_body():
    body = create_default_soft_body(2)
    body.positions[:, 1] += 2.0
    return body


@criterion("AHP value-table reproduction (all 10 RV values within 5e-4)")
def test_ahp_value_table(ahp_dir):
    start = time.monotonic()
    rv = priority_vector(read_matrix_csv(ahp_dir / "value_matrix.csv"))
    for got, expected in zip(rv.values, TABLE2_RV):
        assert abs(got - expected) <= 5e-4
    assert time.monotonic() - start < 1.0


@criterion("AHP cost-table reproduction (all 10 RV values within 5e-4)")
def test_ahp_cost_table(ahp_dir):
    start = time.monotonic()
    rv = priority_vector(read_matrix_csv(ahp_dir / "cost_matrix.csv"))
    for got, expected in zip(rv.values, TABLE4_RV):
        assert abs(got - expected) <= 5e-4
    by_label = rv.as_dict()
    assert by_label["F011"] == pytest.approx(0.16388, abs=5e-4)
    assert by_label["F014"] == pytest.approx(0.20971, abs=5e-4)
    assert by_label["F024"] == pytest.approx(0.19646, abs=5e-4)
    assert time.monotonic() - start < 1.0


@criterion("integrator convergence orders >= 0.9 / 1.9 / 3.9 on the oscillator")
def test_integrator_orders():
    start = time.monotonic()
    expectations = [
        (step_semi_implicit_euler, 0.9),
        (step_explicit_euler, 0.9),
        (step_midpoint, 1.9),
        (step_rk4, 3.9),
    ]
    for stepper, minimum in expectations:
        for dt in (1e-2, 5e-3):  # each Richardson pair covers dt and dt/2
            order = empirical_order(stepper, omega=2 * np.pi, dt=dt, period_time=1.0)
            assert order >= minimum, f"{stepper.__name__} at dt={dt}: order {order:.2f}"
    assert time.monotonic() - start < 10.0


@criterion("constant-acceleration exactness (1e-12) and the one-step Euler formula")
def test_constant_acceleration_exactness():
    start = time.monotonic()

    def const(xs, vs):
        return np.broadcast_to(np.array([-9.81, 0.0, 0.0]), xs.shape)

    for stepper in (step_midpoint, step_rk4):
        x = np.zeros((1, 3))
        v = np.zeros((1, 3))
        t = 0.0
        for _ in range(100):
            x, v = stepper(x, v, 0.01, const)
            t += 0.01
            assert abs(x[0, 0] - 0.5 * -9.81 * t * t) < 1e-12
            assert abs(v[0, 0] - -9.81 * t) < 1e-12

    x = np.array([[2.0, 0.0, 0.0]])
    v = np.zeros((1, 3))
    x2, v2 = step_semi_implicit_euler(x, v, 0.1, lambda xs, vs: np.broadcast_to(
        np.array([-10.0, 0.0, 0.0]), xs.shape))
    assert v2[0, 0] == -1.0 and x2[0, 0] == 1.9
    assert time.monotonic() - start < 1.0


@criterion("stability trend: halving dt never destabilizes; explicit Euler energy grows")
def test_stability_trend():
    """A run counts as unstable when stepping raises (NONFINITE_STATE or a
    downstream failure such as NOT_ENCLOSED) or when integration error
    fractures springs; the fracture model intercepts float overflow long
    before positions reach inf, so spring loss is the practical instability
    signal for the default body."""
    start = time.monotonic()

    def survives(dt):
        instance = SimInstance(1, dropped_default_body(), status=RUNNING,
                               params=SimParams(time_step_override=dt))
        spring_count = len(instance.body.springs)
        try:
            for _ in range(10_000):
                engine.step(instance)
        except SimulationError:
            return False
        return len(instance.body.springs) == spring_count

    verdicts = [survives(dt) for dt in (0.04, 0.02, 0.01, 0.005)]
    # once stable, every smaller step stays stable
    for earlier, later in zip(verdicts, verdicts[1:]):
        assert not (earlier and not later), f"halving dt destabilized: {verdicts}"
    assert verdicts[-1], "default time step must be stable for 10k steps"

    omega = 2 * np.pi
    x = np.array([[1.0, 0.0, 0.0]])
    v = np.zeros((1, 3))
    energies = []
    for _ in range(1000):
        x, v = step_explicit_euler(x, v, 0.02, lambda xs, vs: -(omega ** 2) * xs)
        energies.append(0.5 * v[0, 0] ** 2 + 0.5 * omega ** 2 * x[0, 0] ** 2)
    assert np.all(np.diff(energies) > 0.0)
    assert time.monotonic() - start < 60.0


@criterion("conservation: springs sum to zero, pressure closes, momentum constant")
def test_conservation_suite():
    start = time.monotonic()

    # internal spring forces cancel (1e-9)
    rng = np.random.default_rng(42)
    body = create_default_soft_body(2)
    body.positions += rng.normal(scale=0.08, size=body.positions.shape)
    body.velocities += rng.normal(scale=0.6, size=body.velocities.shape)
    body.apply_dimension_mask()
    bare = ForceParams(gravity=vec3(0, 0, 0), drag_coefficient=0.0, pressure_coefficient=0.0)
    accumulate_forces(body, bare)
    assert np.linalg.norm(body.forces.sum(axis=0)) < 1e-9

    # closed-surface pressure forces cancel (1e-6 relative)
    for shape in (make_box(), create_default_soft_body(3)):
        out = pressure_forces(shape, 6.0)
        residual = np.linalg.norm(out.sum(axis=0))
        peak = np.abs(out).max()
        assert residual <= 1e-6 * max(peak, 1.0)

    # momentum constant over 1k steps without external forces (1e-9)
    instance = SimInstance(1, create_default_soft_body(2), environment=[],
                           params=SimParams(force_params=bare, time_step_override=0.005),
                           status=RUNNING)
    instance.body.velocities[:] = rng.normal(scale=0.3, size=instance.body.velocities.shape)
    instance.body.apply_dimension_mask()
    p0 = (instance.body.masses[:, None] * instance.body.velocities).sum(axis=0)
    for _ in range(1000):
        engine.step(instance)
    p1 = (instance.body.masses[:, None] * instance.body.velocities).sum(axis=0)
    assert np.linalg.norm(p1 - p0) < 1e-9
    assert time.monotonic() - start < 30.0


@criterion("volume oracle: unit cube, scaled cube, sphere vs brute-force sum")
def test_volume_oracle():
    start = time.monotonic()
    assert abs(compute_volume(make_box()) - 1.0) <= 1e-9
    assert abs(compute_volume(make_box(scale=(2.0, 1.0, 1.0))) - 2.0) <= 1e-9
    body = create_default_soft_body(3)
    oracle = brute_force_volume(body.positions, [f.vertices for f in body.faces])
    ours = compute_volume(body)
    assert abs(ours - oracle) / abs(oracle) < 1e-6
    assert time.monotonic() - start < 5.0


@criterion("attach: combined counts and SAME_OBJECT rejection")
def test_attach_contract():
    start = time.monotonic()
    a = create_default_soft_body(2)
    b = create_default_soft_body(2)
    combined, _ = attach_objects(a, b, [(0, 8), (4, 12)])
    assert combined.particle_count == a.particle_count + b.particle_count
    assert len(combined.springs) == len(a.springs) + len(b.springs) + 2
    assert combined.total_mass() == pytest.approx(a.total_mass() + b.total_mass(), abs=1e-15)
    with pytest.raises(SimulationError) as excinfo:
        attach_objects(a, a, [(0, 1)])
    assert excinfo.value.code == "SAME_OBJECT"
    assert time.monotonic() - start < 1.0


@criterion("persistence fidelity: bitwise resume over 1000 steps, verbatim playback, CSV counts")
def test_persistence_fidelity():
    start = time.monotonic()
    instance = SimInstance(1, dropped_default_body(), status=RUNNING)
    for _ in range(10):
        engine.step(instance)
    text = persistence.save_state(instance, io.StringIO())
    reloaded = persistence.load_state(io.StringIO(text), instance_id=2)
    engine.resume(reloaded)
    for _ in range(1000):
        fa = engine.step(instance)
        fb = engine.step(reloaded)
        assert np.array_equal(fa.positions, fb.positions)
        assert np.array_equal(fa.velocities, fb.velocities)

    engine.start_recording(instance, stride=1)
    recorded = [engine.step(instance) for _ in range(100)]
    series = engine.stop_recording(instance)
    series_text = persistence.write_series(series, io.StringIO())
    loaded = persistence.load_series(io.StringIO(series_text))
    player = persistence.instance_from_series(loaded, instance_id=3)
    for original in recorded:
        frame = engine.step_playback(player)
        assert np.array_equal(frame.positions, original.positions)

    sink = io.StringIO()
    persistence.export_csv(loaded, sink)
    rows = sink.getvalue().strip().splitlines()
    assert len(rows) == 1 + len(loaded.frames) * loaded.body.particle_count
    assert time.monotonic() - start < 30.0


@criterion("runtime mutation: resize preserves centroid and mass; swap retimes the step")
def test_runtime_mutation():
    start = time.monotonic()
    instance = SimInstance(1, dropped_default_body(), status=RUNNING,
                           creation=default_creation_params(2))
    for _ in range(30):
        engine.step(instance)
    centroid = instance.body.centroid()
    mass = instance.body.total_mass()
    engine.set_params(instance, {"particle_count": 64})
    assert instance.body.particle_count == 64
    assert np.linalg.norm(instance.body.centroid() - centroid) < 1e-9
    assert instance.body.total_mass() == mass
    frame = engine.step(instance)  # TC2-UC01: simulation continues
    assert np.isfinite(frame.positions).all()

    t0 = instance.sim_time
    engine.swap_algorithm(instance, "integrator", "rk4")
    engine.step(instance)
    assert instance.sim_time - t0 == pytest.approx(0.01, abs=1e-12)
    assert time.monotonic() - start < 10.0


@criterion("protocol conformance: golden pairs, error reachability, 10 s frame-rate ceiling")
def test_protocol_conformance(tmp_path):
    start = time.monotonic()
    hub = SimulationHub()
    app = create_app(hub, ui_dir=None)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            catalog = ws.receive_json()
            assert catalog["type"] == "catalog"
            assert len(catalog["integrators"]) >= 4

            def send(payload, rid):
                payload = dict(payload)
                payload["request_id"] = rid
                ws.send_json(payload)
                for _ in range(500):
                    message = ws.receive_json()
                    if message.get("request_id") == rid:
                        return message
                raise AssertionError(f"no reply for {rid}")

            # golden request/response per documented type
            created = send({"type": "create", "dimension": 2}, "create")
            iid = created["instance_id"]
            assert send({"type": "subscribe", "instance_id": iid, "rate_hz": 30}, "sub")["type"] == "ack"
            assert send({"type": "start", "instance_id": iid}, "start")["type"] == "ack"
            assert send({"type": "set_params", "instance_id": iid,
                         "params": {"gravity": [0, -9.81, 0]}}, "sp")["type"] == "ack"
            assert send({"type": "swap_algorithm", "instance_id": iid,
                         "kind": "integrator", "name": "midpoint"}, "swap")["type"] == "ack"
            assert send({"type": "apply_force", "instance_id": iid, "particle_ids": [0],
                         "force": [0, 2, 0], "steps": 1}, "force")["type"] == "ack"
            assert send({"type": "drag", "instance_id": iid, "particle_id": 0,
                         "target": [0, 3, 0], "stiffness": 10.0}, "drag")["type"] == "ack"
            assert send({"type": "start_series", "instance_id": iid}, "ss")["type"] == "ack"

            # frame-rate ceiling: <= rate+1 per second over 10 s
            frames = 0
            window_start = time.monotonic()
            while time.monotonic() - window_start < 10.0:
                message = ws.receive_json()
                if message["type"] == "frame":
                    frames += 1
            assert frames <= 31 * 10, f"{frames} frames in 10 s exceeds the 30 Hz ceiling"
            assert frames > 50, "stream stalled"

            series_path = str(tmp_path / "ceil.sbseries")
            stopped = send({"type": "stop_series", "instance_id": iid, "path": series_path}, "stop")
            assert stopped["frame_count"] > 0
            assert send({"type": "pause", "instance_id": iid}, "pause")["type"] == "ack"
            assert send({"type": "resume", "instance_id": iid}, "resume")["type"] == "ack"
            state_path = str(tmp_path / "c.sbstate")
            assert send({"type": "save_state", "instance_id": iid, "path": state_path}, "save")["type"] == "ack"
            assert send({"type": "import_state", "path": state_path}, "is")["type"] == "ack"
            playback = send({"type": "start_playback", "path": series_path}, "pb")
            assert playback["type"] == "ack"
            view = send({"type": "add_instance", "instance_id": iid, "mode": "view"}, "vw")
            assert view["instance_id"] == iid

            # error reachability
            checks = [
                ({"type": "pause", "instance_id": 777}, "UNKNOWN_INSTANCE"),
                ({"type": "swap_algorithm", "instance_id": iid, "kind": "integrator",
                  "name": "nope"}, "UNKNOWN_ALGORITHM"),
                ({"type": "set_params", "instance_id": iid,
                  "params": {"particle_mass": -1}}, "INVALID_PARAMS"),
                ({"type": "apply_force", "instance_id": playback["instance_id"],
                  "particle_ids": [0], "force": [0, 1, 0]}, "PLAYBACK_IMMUTABLE"),
                ({"type": "nonsense"}, "UNKNOWN_TYPE"),
            ]
            for index, (payload, expected) in enumerate(checks):
                reply = send(payload, f"err{index}")
                assert reply["type"] == "error" and reply["code"] == expected, (reply, expected)
    assert time.monotonic() - start < 60.0
