#!/usr/bin/env python3
"""Energy audit of an undamped spring-mass under each integrator.

Shows the documented stability contrast: semi-implicit Euler keeps total
energy bounded, explicit Euler pumps energy monotonically, midpoint/RK4 decay
slowly. Prints relative energy drift samples per integrator.
"""

import argparse
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from softbody.integrators import (
    step_explicit_euler,
    step_midpoint,
    step_rk4,
    step_semi_implicit_euler,
)

STEPPERS = {
    "semiImplicitEuler": step_semi_implicit_euler,
    "explicitEuler": step_explicit_euler,
    "midpoint": step_midpoint,
    "rk4": step_rk4,
}


def audit(step, omega: float, dt: float, steps: int, samples: int):
    x = np.array([[1.0, 0.0, 0.0]])
    v = np.zeros((1, 3))

    def accel(xs, vs):
        return -(omega ** 2) * xs

    initial = 0.5 * omega ** 2
    out = []
    for i in range(1, steps + 1):
        x, v = step(x, v, dt, accel)
        if i % (steps // samples) == 0:
            energy = 0.5 * v[0, 0] ** 2 + 0.5 * omega ** 2 * x[0, 0] ** 2
            out.append((i, (energy - initial) / initial))
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--omega", type=float, default=10.0)
    parser.add_argument("--dt", type=float, default=1e-3)
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--samples", type=int, default=5)
    args = parser.parse_args()

    print(f"omega={args.omega} dt={args.dt} steps={args.steps} (relative energy drift)")
    for name, step in STEPPERS.items():
        points = audit(step, args.omega, args.dt, args.steps, args.samples)
        trail = "  ".join(f"@{i}: {drift:+.3e}" for i, drift in points)
        print(f"{name:>18}  {trail}")


if __name__ == "__main__":
    main()
