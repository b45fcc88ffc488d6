"""Time-integration algorithms over (positions, velocities) particle state.

Every stepper is a pure transformer: it takes (x, v) arrays of shape (N, 3),
a time step, and a force evaluator ``accel(x, v) -> a`` that may be called at
intermediate candidate states (RK stages). Pinned particles come out
bit-identical with zero velocity. A non-finite result raises
NONFINITE_STATE instead of propagating NaNs into committed state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import err


@dataclass
class IntegratorSpec:
    name: str
    time_step: float  # each algorithm advances by its own default interval

    def __post_init__(self):
        if self.time_step <= 0:
            raise err("INVALID_PARAMS", "time step must be positive")


def _finalize(x_old, v_old, x_new, v_new, pinned):
    if pinned is not None and pinned.any():
        x_new[pinned] = x_old[pinned]
        v_new[pinned] = 0.0
    if not (np.isfinite(x_new).all() and np.isfinite(v_new).all()):
        raise err("NONFINITE_STATE", "integration produced a non-finite state")
    return x_new, v_new


def step_semi_implicit_euler(x, v, dt, accel, pinned=None):
    """v advances on the current acceleration, then x advances on the new v."""
    a = accel(x, v)
    v_new = v + a * dt
    x_new = x + v_new * dt
    return _finalize(x, v, x_new, v_new, pinned)


def step_explicit_euler(x, v, dt, accel, pinned=None):
    """x advances on the old v; classical forward Euler (diverges on stiff
    undamped systems, kept as the documented contrast case)."""
    a = accel(x, v)
    x_new = x + v * dt
    v_new = v + a * dt
    return _finalize(x, v, x_new, v_new, pinned)


def step_midpoint(x, v, dt, accel, pinned=None):
    """Second-order midpoint rule (RK2) on the coupled (x, v) system."""
    a1 = accel(x, v)
    x_mid = x + 0.5 * dt * v
    v_mid = v + 0.5 * dt * a1
    a2 = accel(x_mid, v_mid)
    x_new = x + dt * v_mid
    v_new = v + dt * a2
    return _finalize(x, v, x_new, v_new, pinned)


def step_rk4(x, v, dt, accel, pinned=None):
    """Classical fourth-order Runge-Kutta with four force evaluations."""
    k1x = v
    k1v = accel(x, v)
    k2x = v + 0.5 * dt * k1v
    k2v = accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
    k3x = v + 0.5 * dt * k2v
    k3v = accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
    k4x = v + dt * k3v
    k4v = accel(x + dt * k3x, v + dt * k3v)
    x_new = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    v_new = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return _finalize(x, v, x_new, v_new, pinned)


class IntegratorRegistry:
    """Named steppers with per-algorithm default time steps."""

    def __init__(self):
        self._steps: dict[str, object] = {}
        self._specs: dict[str, IntegratorSpec] = {}

    def register(self, spec: IntegratorSpec, step_function) -> None:
        if spec.name in self._steps:
            raise err("DUPLICATE_NAME", f"integrator {spec.name!r} already registered")
        self._steps[spec.name] = step_function
        self._specs[spec.name] = spec

    def get(self, name: str):
        if name not in self._steps:
            raise err("UNKNOWN_ALGORITHM", f"no integrator named {name!r}")
        return self._steps[name]

    def spec(self, name: str) -> IntegratorSpec:
        if name not in self._specs:
            raise err("UNKNOWN_ALGORITHM", f"no integrator named {name!r}")
        return self._specs[name]

    def names(self) -> list[str]:
        return list(self._steps)

    def __contains__(self, name: str) -> bool:
        return name in self._steps


DEFAULT_INTEGRATOR = "semiImplicitEuler"


def default_integrator_registry() -> IntegratorRegistry:
    registry = IntegratorRegistry()
    registry.register(IntegratorSpec("semiImplicitEuler", 0.005), step_semi_implicit_euler)
    registry.register(IntegratorSpec("explicitEuler", 0.002), step_explicit_euler)
    registry.register(IntegratorSpec("midpoint", 0.005), step_midpoint)
    registry.register(IntegratorSpec("rk4", 0.01), step_rk4)
    return registry


INTEGRATORS = default_integrator_registry()


def register_integrator(spec: IntegratorSpec, step_function,
                        registry: IntegratorRegistry | None = None) -> None:
    (registry or INTEGRATORS).register(spec, step_function)
