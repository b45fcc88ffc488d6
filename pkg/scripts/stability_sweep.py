#!/usr/bin/env python3
"""Time-step stability sweep for the default 2-D body.

For each integrator and each dt, run up to --steps steps and report whether
the run survives (no step failure, no fractured springs). Prints a table to
stdout; the same trend backs the acceptance criterion.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from softbody import engine
from softbody.engine import RUNNING, SimInstance, SimParams
from softbody.errors import SimulationError
from softbody.model import create_default_soft_body


def survives(integrator: str, dt: float, steps: int) -> str:
    body = create_default_soft_body(2)
    body.positions[:, 1] += 2.0
    springs = len(body.springs)
    instance = SimInstance(1, body, integrator_name=integrator, status=RUNNING,
                           params=SimParams(time_step_override=dt))
    try:
        for i in range(steps):
            engine.step(instance)
    except SimulationError as exc:
        return f"failed@{i} ({exc.code})"
    broken = springs - len(instance.body.springs)
    return "stable" if broken == 0 else f"shattered ({broken} springs)"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--dts", default="0.04,0.02,0.01,0.005,0.0025")
    parser.add_argument("--integrators", default="semiImplicitEuler,explicitEuler,midpoint,rk4")
    args = parser.parse_args()

    dts = [float(v) for v in args.dts.split(",")]
    names = args.integrators.split(",")
    width = max(len(n) for n in names) + 2
    print(f"{'integrator':<{width}}" + "".join(f"{dt:>22}" for dt in dts))
    for name in names:
        row = [survives(name, dt, args.steps) for dt in dts]
        print(f"{name:<{width}}" + "".join(f"{cell:>22}" for cell in row))


if __name__ == "__main__":
    main()
