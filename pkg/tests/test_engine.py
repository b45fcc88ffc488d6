import numpy as np
import pytest

from softbody import engine
from softbody.engine import PAUSED, PLAYBACK, RUNNING, SimInstance, SimParams
from softbody.errors import SimulationError
from softbody.forces import DRAG, IMPULSE, ExternalInput, ForceParams
from softbody.model import SoftBody, create_default_soft_body, vec3


def free_fall_instance() -> SimInstance:
    body = SoftBody(3)
    body.add_particles(np.zeros((1, 3)), np.array([1.0]))
    params = SimParams(force_params=ForceParams(gravity=vec3(0, -10, 0), drag_coefficient=0.0),
                       time_step_override=0.1)
    instance = SimInstance(1, body, environment=[], params=params, status=RUNNING)
    return instance


def quiet_instance(dim=2, dt=0.005, status=RUNNING) -> SimInstance:
    """Body with every ambient force switched off: an exact fixed point."""
    body = create_default_soft_body(dim)
    params = SimParams(force_params=ForceParams(gravity=vec3(0, 0, 0), drag_coefficient=0.0,
                                                pressure_coefficient=0.0),
                       time_step_override=dt)
    return SimInstance(1, body, environment=[], params=params, status=status)


def default_scene_instance(status=RUNNING, integrator="semiImplicitEuler") -> SimInstance:
    body = create_default_soft_body(2)
    body.positions[:, 1] += 2.0
    from softbody.model import default_creation_params

    instance = SimInstance(1, body, integrator_name=integrator, status=status,
                           creation=default_creation_params(2))
    return instance


class TestStep:
    def test_idle_fixed_point(self):
        instance = quiet_instance()
        before = instance.body.positions.copy()
        frame = engine.step(instance)
        assert np.array_equal(frame.positions, before)

    def test_free_fall_one_step(self):
        instance = free_fall_instance()
        frame = engine.step(instance)
        assert frame.velocities[0, 1] == pytest.approx(-1.0)
        assert frame.positions[0, 1] == pytest.approx(-0.1)

    def test_clock_accumulates(self):
        instance = quiet_instance(dt=0.005)
        for _ in range(10):
            engine.step(instance)
        assert instance.tick == 10
        assert instance.sim_time == pytest.approx(0.05, abs=1e-12)

    def test_step_requires_running(self):
        instance = quiet_instance(status=PAUSED)
        with pytest.raises(SimulationError) as excinfo:
            engine.step(instance)
        assert excinfo.value.code == "WRONG_STATUS"

    def test_acceleration_matches_force_over_mass(self):
        instance = default_scene_instance()
        engine.step(instance)
        body = instance.body
        assert np.allclose(body.accelerations * body.masses[:, None], body.forces)

    def test_nonfinite_auto_pauses_and_keeps_state(self):
        instance = default_scene_instance(integrator="explicitEuler")
        instance.params.time_step_override = 0.2  # far beyond stability
        # isolate the raw spring blow-up: no pressure, no fracture safety valve
        instance.params.force_params.pressure_coefficient = 0.0
        instance.params.force_params.elastic_limit = 1e9
        instance.params.force_params.fracture_strain = float("inf")
        last_good = None
        with pytest.raises(SimulationError) as excinfo:
            for _ in range(10_000):
                frame = engine.step(instance)
                last_good = frame.positions
        assert excinfo.value.code == "NONFINITE_STATE"
        assert instance.status == PAUSED
        assert instance.auto_paused
        assert np.isfinite(instance.body.positions).all()
        if last_good is not None:
            assert np.array_equal(instance.body.positions, last_good)


class TestPauseResume:
    def test_pause_freezes_state(self):
        instance = quiet_instance()
        engine.step(instance)
        engine.pause(instance)
        snapshot = instance.body.positions.copy()
        with pytest.raises(SimulationError):
            engine.step(instance)
        assert np.array_equal(instance.body.positions, snapshot)

    def test_pause_resume_is_bitwise_transparent(self):
        a = default_scene_instance()
        b = default_scene_instance()
        for _ in range(50):
            engine.step(a)
            engine.step(b)
        engine.pause(a)
        engine.resume(a)
        for _ in range(50):
            fa = engine.step(a)
            fb = engine.step(b)
        assert np.array_equal(fa.positions, fb.positions)
        assert np.array_equal(fa.velocities, fb.velocities)

    def test_wrong_status_transitions(self):
        instance = quiet_instance(status=RUNNING)
        with pytest.raises(SimulationError) as excinfo:
            engine.resume(instance)
        assert excinfo.value.code == "WRONG_STATUS"
        engine.pause(instance)
        with pytest.raises(SimulationError) as excinfo:
            engine.pause(instance)
        assert excinfo.value.code == "WRONG_STATUS"


class TestSetParams:
    def test_gravity_patch_changes_accumulators(self):
        instance = quiet_instance()
        engine.set_params(instance, {"gravity": [0.0, -9.81, 0.0]})
        engine.step(instance)
        expected = instance.body.masses[:, None] * np.array([0.0, -9.81, 0.0])
        assert np.allclose(instance.body.forces, expected)

    def test_particle_count_rebuild_preserves_centroid_and_mass(self):
        instance = default_scene_instance()
        for _ in range(20):
            engine.step(instance)
        centroid = instance.body.centroid()
        mass = instance.body.total_mass()
        tick = instance.tick
        engine.set_params(instance, {"particle_count": 64})
        body = instance.body
        assert body.particle_count == 64
        assert np.linalg.norm(body.centroid() - centroid) < 1e-9
        assert body.total_mass() == mass
        assert instance.tick == tick
        engine.step(instance)  # continues cleanly

    def test_invalid_mass_rejected(self):
        instance = quiet_instance()
        with pytest.raises(SimulationError) as excinfo:
            engine.set_params(instance, {"particle_mass": 0.0})
        assert excinfo.value.code == "INVALID_PARAMS"

    def test_uniform_velocity_overwrite_masks(self):
        instance = quiet_instance(dim=2)
        engine.set_params(instance, {"velocity": [1.0, 2.0, 3.0]})
        assert np.allclose(instance.body.velocities[:, :2], [1.0, 2.0])
        assert np.all(instance.body.velocities[:, 2] == 0.0)

    def test_unknown_key_rejected(self):
        instance = quiet_instance()
        with pytest.raises(SimulationError) as excinfo:
            engine.set_params(instance, {"warp_factor": 9})
        assert excinfo.value.code == "INVALID_PARAMS"


class TestSwapAlgorithm:
    def test_swap_changes_next_dt(self):
        instance = default_scene_instance()
        engine.step(instance)
        t_before = instance.sim_time
        engine.swap_algorithm(instance, "integrator", "rk4")
        engine.step(instance)
        assert instance.sim_time - t_before == pytest.approx(0.01, abs=1e-12)

    def test_swap_preserves_state(self):
        instance = default_scene_instance()
        engine.step(instance)
        positions = instance.body.positions.copy()
        engine.swap_algorithm(instance, "integrator", "midpoint")
        assert np.array_equal(instance.body.positions, positions)

    def test_unknown_and_same_names(self):
        instance = default_scene_instance()
        with pytest.raises(SimulationError) as excinfo:
            engine.swap_algorithm(instance, "integrator", "foo")
        assert excinfo.value.code == "UNKNOWN_ALGORITHM"
        with pytest.raises(SimulationError) as excinfo:
            engine.swap_algorithm(instance, "integrator", "semiImplicitEuler")
        assert excinfo.value.code == "SAME_ALGORITHM"

    def test_detector_swap(self):
        instance = default_scene_instance()
        engine.swap_algorithm(instance, "detector", "aabbPruned")
        assert instance.detector_name == "aabbPruned"
        engine.step(instance)


class TestUserForce:
    def test_impulse_changes_acceleration(self):
        instance = quiet_instance()
        engine.apply_user_force(instance, ExternalInput(
            kind=IMPULSE, particle_ids=[0], force=vec3(0, 50, 0), remaining_steps=1))
        engine.step(instance)
        # committed accumulators reflect the step that consumed the impulse
        assert instance.body.accelerations[0, 1] == pytest.approx(50.0 / (1.0 / 32))

    def test_impulse_acceleration_value(self):
        instance = quiet_instance()
        engine.apply_user_force(instance, ExternalInput(
            kind=IMPULSE, particle_ids=[0], force=vec3(0, 50, 0), remaining_steps=1))
        frame = engine.step(instance)
        # dv = (F/m) * dt with m = 1/32 kg, dt = 0.005
        assert frame.velocities[0, 1] == pytest.approx(50.0 / (1.0 / 32) * 0.005)

    def test_input_expiry(self):
        instance = quiet_instance()
        engine.apply_user_force(instance, ExternalInput(
            kind=IMPULSE, particle_ids=[0], force=vec3(0, 50, 0), remaining_steps=2))
        engine.step(instance)
        assert len(instance.pending_inputs) == 1
        engine.step(instance)
        assert instance.pending_inputs == []

    def test_drag_release_clears_pending(self):
        instance = quiet_instance()
        engine.apply_user_force(instance, ExternalInput(
            kind=DRAG, particle_ids=[3], target=vec3(2, 0, 0), stiffness=5.0, remaining_steps=30))
        assert len(instance.pending_inputs) == 1
        engine.apply_user_force(instance, ExternalInput(
            kind=DRAG, particle_ids=[3], target=vec3(2, 0, 0), stiffness=5.0, remaining_steps=0))
        assert instance.pending_inputs == []

    def test_unknown_particle(self):
        instance = quiet_instance()
        with pytest.raises(SimulationError) as excinfo:
            engine.apply_user_force(instance, ExternalInput(
                kind=IMPULSE, particle_ids=[999], force=vec3(1, 0, 0)))
        assert excinfo.value.code == "UNKNOWN_PARTICLE"

    def test_rejected_when_paused(self):
        instance = quiet_instance(status=PAUSED)
        with pytest.raises(SimulationError) as excinfo:
            engine.apply_user_force(instance, ExternalInput(
                kind=IMPULSE, particle_ids=[0], force=vec3(1, 0, 0)))
        assert excinfo.value.code == "WRONG_STATUS"


class TestCloneAndViews:
    def test_clone_is_bitwise_copy(self):
        instance = default_scene_instance()
        for _ in range(25):
            engine.step(instance)
        clone = engine.clone_with_algorithm(instance, "rk4", new_id=2)
        assert np.array_equal(clone.body.positions, instance.body.positions)
        assert clone.tick == instance.tick

    def test_clone_diverges_under_new_algorithm(self):
        instance = default_scene_instance()
        for _ in range(5):
            engine.step(instance)
        clone = engine.clone_with_algorithm(instance, "rk4", new_id=2)
        for _ in range(40):
            engine.step(instance)
            engine.step(clone)
        assert not np.allclose(instance.body.positions, clone.body.positions)

    def test_view_is_same_instance(self):
        instance = default_scene_instance()
        assert instance.views() is instance


class TestRecordingPlayback:
    def test_record_count_matches_steps(self):
        instance = quiet_instance()
        engine.start_recording(instance, stride=1)
        for _ in range(100):
            engine.step(instance)
        series = engine.stop_recording(instance)
        assert len(series.frames) == 100

    def test_stride_decimates(self):
        instance = quiet_instance()
        engine.start_recording(instance, stride=10)
        for _ in range(100):
            engine.step(instance)
        series = engine.stop_recording(instance)
        assert len(series.frames) == 10

    def test_playback_emits_verbatim(self):
        instance = default_scene_instance()
        engine.start_recording(instance, stride=1)
        recorded = [engine.step(instance) for _ in range(50)]
        series = engine.stop_recording(instance)
        player = SimInstance(9, series.body.copy(), params=series.params, status=PAUSED)
        engine.start_playback(player, series)
        assert player.status == PLAYBACK
        for original in recorded:
            emitted = engine.step_playback(player)
            assert np.array_equal(emitted.positions, original.positions)
            assert emitted.tick == original.tick

    def test_playback_end_and_immutability(self):
        instance = quiet_instance()
        engine.start_recording(instance, stride=1)
        engine.step(instance)
        series = engine.stop_recording(instance)
        player = SimInstance(9, series.body.copy(), params=series.params, status=PAUSED)
        engine.start_playback(player, series)
        engine.step_playback(player)
        with pytest.raises(SimulationError) as excinfo:
            engine.step_playback(player)
        assert excinfo.value.code == "END_OF_SERIES"
        with pytest.raises(SimulationError) as excinfo:
            engine.apply_user_force(player, ExternalInput(
                kind=IMPULSE, particle_ids=[0], force=vec3(1, 0, 0)))
        assert excinfo.value.code == "PLAYBACK_IMMUTABLE"
        with pytest.raises(SimulationError) as excinfo:
            engine.set_params(player, {"gravity": [0, 0, 0]})
        assert excinfo.value.code == "PLAYBACK_IMMUTABLE"

    def test_empty_series_rejected(self):
        instance = quiet_instance()
        engine.start_recording(instance, stride=1)
        series = engine.stop_recording(instance)
        player = SimInstance(9, instance.body.copy())
        with pytest.raises(SimulationError) as excinfo:
            engine.start_playback(player, series)
        assert excinfo.value.code == "EMPTY_SERIES"


class TestConservation:
    def test_momentum_constant_without_external_forces(self):
        instance = quiet_instance()
        rng = np.random.default_rng(5)
        instance.body.velocities[:] = rng.normal(scale=0.3, size=instance.body.velocities.shape)
        instance.body.apply_dimension_mask()
        p0 = (instance.body.masses[:, None] * instance.body.velocities).sum(axis=0)
        for _ in range(1000):
            engine.step(instance)
        p1 = (instance.body.masses[:, None] * instance.body.velocities).sum(axis=0)
        assert np.linalg.norm(p1 - p0) < 1e-9

    def test_semi_implicit_energy_bounded(self):
        # undamped single spring-mass: k=100, m=1 -> omega=10
        body = SoftBody(3)
        body.add_particles(np.array([[0.0, 0.0, 0.0], [1.5, 0.0, 0.0]]), np.array([1.0, 1.0]))
        body.pinned[0] = True
        body.add_spring(0, 1, hook_constant=100.0, damping_factor=0.0, rest_length=1.0)
        # keep the oscillation safely inside the elastic regime
        params = SimParams(force_params=ForceParams(gravity=vec3(0, 0, 0), drag_coefficient=0.0,
                                                    elastic_limit=3.0, fracture_strain=5.0),
                           time_step_override=1e-3)
        instance = SimInstance(1, body, environment=[], params=params, status=RUNNING)
        energies = [engine.step(instance).diagnostics["energy"] for _ in range(10_000)]
        initial = 0.5 * 100.0 * 0.5 ** 2
        assert max(abs(e - initial) for e in energies) / initial < 0.02


class TestDeterminism:
    def test_replay_with_commands_is_bitwise(self):
        def run():
            instance = default_scene_instance()
            stream = []
            for tick in range(120):
                if tick == 40:
                    engine.set_params(instance, {"gravity": [0.0, -3.0, 0.0]})
                if tick == 80:
                    engine.swap_algorithm(instance, "integrator", "midpoint")
                stream.append(engine.step(instance))
            return stream

        first, second = run(), run()
        for fa, fb in zip(first, second):
            assert np.array_equal(fa.positions, fb.positions)
            assert np.array_equal(fa.velocities, fb.velocities)
            assert fa.sim_time == fb.sim_time


class TestRegisteredAlgorithmSwap:
    def test_swap_to_freshly_registered_integrator(self):
        from softbody.integrators import IntegratorSpec, default_integrator_registry
        from softbody.collision import default_detector_registry

        registry = default_integrator_registry()

        def step_verlet(x, v, dt, accel, pinned=None):
            a = accel(x, v)
            x_new = x + v * dt + 0.5 * a * dt * dt
            v_new = v + 0.5 * (a + accel(x_new, v)) * dt
            if pinned is not None and pinned.any():
                x_new[pinned] = x[pinned]
                v_new[pinned] = 0.0
            return x_new, v_new

        registry.register(IntegratorSpec("verlet", 0.004), step_verlet)
        detectors = default_detector_registry()
        instance = quiet_instance()
        instance.params.time_step_override = None
        engine.swap_algorithm(instance, "integrator", "verlet", registry, detectors)
        t0 = instance.sim_time
        engine.step(instance, registry, detectors)
        # the registered algorithm's own interval drives the clock
        assert instance.sim_time - t0 == pytest.approx(0.004, abs=1e-15)


class TestSoftContactSeparation:
    def test_overlapping_attached_groups_push_apart(self):
        from softbody.model import attach_objects, create_default_soft_body

        a = create_default_soft_body(2)
        b = create_default_soft_body(2)
        b.positions[:, 0] += 1.2  # strong overlap between the two rings
        combined, mapping = attach_objects(a, b, [])
        ids_a = list(mapping["a"].values())
        ids_b = list(mapping["b"].values())
        params = SimParams(force_params=ForceParams(gravity=vec3(0, 0, 0), drag_coefficient=0.2,
                                                    pressure_coefficient=0.0),
                           time_step_override=0.002)
        instance = SimInstance(1, combined, environment=[], params=params, status=RUNNING)
        gap0 = np.linalg.norm(combined.positions[ids_b].mean(axis=0)
                              - combined.positions[ids_a].mean(axis=0))
        for _ in range(400):
            engine.step(instance)
        gap1 = np.linalg.norm(instance.body.positions[ids_b].mean(axis=0)
                              - instance.body.positions[ids_a].mean(axis=0))
        assert gap1 > gap0  # bounding-sphere proxies drive the groups apart
