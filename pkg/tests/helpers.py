"""Shared fixtures: hand-built meshes and independent numeric oracles."""

import math

import numpy as np

from softbody.model import SoftBody

# unit cube [0,1]^3, 12 outward-wound triangles
CUBE_VERTICES = np.array([
    [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0],
])
CUBE_FACES = [
    (0, 2, 1), (0, 3, 2),  # bottom, normal -z
    (4, 5, 6), (4, 6, 7),  # top, +z
    (0, 1, 5), (0, 5, 4),  # front, -y
    (3, 6, 2), (3, 7, 6),  # back, +y
    (0, 4, 7), (0, 7, 3),  # left, -x
    (1, 2, 6), (1, 6, 5),  # right, +x
]


def make_box(scale=(1.0, 1.0, 1.0), mass=1.0) -> SoftBody:
    body = SoftBody(3)
    vertices = CUBE_VERTICES * np.asarray(scale)
    body.add_particles(vertices, np.full(8, mass / 8.0))
    for a, b, c in CUBE_FACES:
        body.add_face(a, b, c)
    from softbody.model import Layer

    body.layers = [Layer("outer", list(range(8)))]
    return body


def brute_force_volume(positions, faces) -> float:
    """Plain-Python signed tetrahedron sum, no vectorization shortcuts."""
    total = 0.0
    for a, b, c in faces:
        p, q, r = positions[a], positions[b], positions[c]
        det = (p[0] * (q[1] * r[2] - q[2] * r[1])
               - p[1] * (q[0] * r[2] - q[2] * r[0])
               + p[2] * (q[0] * r[1] - q[1] * r[0]))
        total += det / 6.0
    return total


def oscillator_exact(x0: float, v0: float, omega: float, t: float) -> tuple[float, float]:
    """Closed-form solution of x'' = -omega^2 x."""
    x = x0 * math.cos(omega * t) + (v0 / omega) * math.sin(omega * t)
    v = -x0 * omega * math.sin(omega * t) + v0 * math.cos(omega * t)
    return x, v


def integrate_oscillator(step, omega: float, dt: float, n_steps: int,
                         x0: float = 1.0, v0: float = 0.0):
    """Drive a 1-particle oscillator with the given stepper; returns (x, v)."""
    x = np.array([[x0, 0.0, 0.0]])
    v = np.array([[v0, 0.0, 0.0]])

    def accel(xs, vs):
        return -(omega ** 2) * xs

    for _ in range(n_steps):
        x, v = step(x, v, dt, accel)
    return float(x[0, 0]), float(v[0, 0])


def empirical_order(step, omega: float, dt: float, period_time: float) -> float:
    """Richardson order estimate from errors at dt and dt/2."""
    errors = []
    for h in (dt, dt / 2.0):
        n = round(period_time / h)
        x, _ = integrate_oscillator(step, omega, h, n)
        exact, _ = oscillator_exact(1.0, 0.0, omega, n * h)
        errors.append(abs(x - exact))
    return math.log2(errors[0] / errors[1])
