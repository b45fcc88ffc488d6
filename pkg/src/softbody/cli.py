"""Headless command line: create bodies, run/resume/compare simulations,
serve the control endpoint, and run the AHP prioritization.

Exit codes: 0 success, 1 runtime failure (one-line diagnostic on stderr),
2 usage errors (argparse).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import ahp, engine, persistence
from .engine import RUNNING, SimInstance
from .errors import SimulationError
from .hub import SimulationHub
from .integrators import DEFAULT_INTEGRATOR, INTEGRATORS
from .model import CreationParams, create_soft_body, default_creation_params


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softbody", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the WebSocket control server")
    p_serve.add_argument("--port", type=int, default=8700)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--max-instances", type=int, default=8)
    p_serve.add_argument("--environment", help="collider set (.sbenv) used for new instances")
    p_serve.add_argument("--ui-dir", help="directory of built UI assets to serve at /")
    p_serve.add_argument("--plugin", action="append", default=[],
                         help="module:function hook called with (integrators, detectors) at startup")

    p_create = sub.add_parser("create", help="create a body and write it as .sbobj")
    p_create.add_argument("--dim", type=int, choices=(1, 2, 3), required=True)
    p_create.add_argument("--particles", type=int, help="particles per layer")
    p_create.add_argument("--layers", type=int)
    p_create.add_argument("--mass", type=float, help="total mass in kg")
    p_create.add_argument("--size", type=float)
    p_create.add_argument("--inner-ratio", type=float)
    p_create.add_argument("--pressure", type=float)
    p_create.add_argument("--drop-height", type=float, default=None,
                          help="lift the body centroid this far above the origin "
                               "(default 2x size for 2-D/3-D so it clears the ground plane; 0 keeps it centered)")
    p_create.add_argument("--out", required=True)

    p_run = sub.add_parser("run", help="run a simulation headless")
    p_run.add_argument("--object", required=True, help="body file (.sbobj)")
    p_run.add_argument("--integrator", default=DEFAULT_INTEGRATOR)
    p_run.add_argument("--detector", default="bruteForce")
    p_run.add_argument("--steps", type=int, default=1000)
    p_run.add_argument("--dt", type=float, help="override the integrator's time step")
    p_run.add_argument("--environment", help="collider set (.sbenv)")
    p_run.add_argument("--record", help="write the run as .sbseries")
    p_run.add_argument("--stride", type=int, default=1)
    p_run.add_argument("--export-csv", help="also export the recorded series as CSV")
    p_run.add_argument("--save-state", help="write the final state as .sbstate")

    p_resume = sub.add_parser("resume", help="resume from a saved state")
    p_resume.add_argument("--state", required=True)
    p_resume.add_argument("--steps", type=int, default=1000)
    p_resume.add_argument("--record")
    p_resume.add_argument("--stride", type=int, default=1)
    p_resume.add_argument("--export-csv")
    p_resume.add_argument("--save-state")

    p_compare = sub.add_parser("compare", help="run one body under several integrators")
    p_compare.add_argument("--object", required=True)
    p_compare.add_argument("--integrators", required=True, help="comma-separated names")
    p_compare.add_argument("--steps", type=int, default=1000)
    p_compare.add_argument("--dt", type=float, help="shared time step (default: per-integrator)")
    p_compare.add_argument("--environment")
    p_compare.add_argument("--report", required=True, help="per-tick divergence CSV")

    p_ahp = sub.add_parser("ahp", help="cost-value prioritization from comparison matrices")
    p_ahp.add_argument("--value-matrix", required=True)
    p_ahp.add_argument("--cost-matrix", required=True)
    p_ahp.add_argument("--out", required=True)

    return parser


def _load_environment(path: str | None):
    if path is None:
        return None
    colliders, _hints = persistence.load_environment(path)
    return colliders


def _instance_for_run(args, integrator: str) -> SimInstance:
    body = persistence.import_object(args.object)
    environment = _load_environment(getattr(args, "environment", None))
    instance = SimInstance(0, body, integrator_name=integrator,
                           detector_name=getattr(args, "detector", "bruteForce"),
                           environment=environment)
    if getattr(args, "dt", None):
        instance.params.time_step_override = args.dt
    instance.status = RUNNING
    return instance


def _run_and_export(instance: SimInstance, args) -> None:
    record = getattr(args, "record", None)
    export = getattr(args, "export_csv", None)
    if record or export:
        engine.start_recording(instance, getattr(args, "stride", 1))
    for _ in range(args.steps):
        engine.step(instance)
    if record or export:
        series = engine.stop_recording(instance)
        if not series.frames:
            # a zero-step run still documents its initial state
            series.frames.append(engine.snapshot_frame(instance))
        if record:
            persistence.write_series(series, record)
        if export:
            persistence.export_csv(series, export)
    if getattr(args, "save_state", None):
        persistence.save_state(instance, args.save_state)


def _cmd_create(args) -> int:
    defaults = default_creation_params(args.dim)
    from dataclasses import replace

    overrides = {}
    if args.particles is not None:
        overrides["particle_count"] = args.particles
    if args.layers is not None:
        overrides["layer_count"] = args.layers
    if args.mass is not None:
        overrides["total_mass"] = args.mass
    if args.size is not None:
        overrides["size"] = args.size
    if args.inner_ratio is not None:
        overrides["inner_ratio"] = args.inner_ratio
    if args.pressure is not None:
        overrides["pressure_coefficient"] = args.pressure
    params = replace(defaults, **overrides) if overrides else defaults
    body = create_soft_body(params)
    if body.dimension >= 2:
        lift = 2.0 * params.size if args.drop_height is None else args.drop_height
        body.positions[:, 1] += lift
    persistence.export_object(body, args.out)
    print(f"wrote {args.out}: dimension {body.dimension}, {body.particle_count} particles, "
          f"{len(body.springs)} springs, {len(body.faces)} faces")
    return 0


def _cmd_run(args) -> int:
    instance = _instance_for_run(args, args.integrator)
    _run_and_export(instance, args)
    print(f"ran {args.steps} steps with {args.integrator}; sim time {instance.sim_time:.6g} s")
    return 0


def _cmd_resume(args) -> int:
    instance = persistence.load_state(args.state)
    for warning in instance.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    engine.resume(instance)
    _run_and_export(instance, args)
    print(f"resumed to tick {instance.tick}; sim time {instance.sim_time:.6g} s")
    return 0


def _cmd_compare(args) -> int:
    names = [n.strip() for n in args.integrators.split(",") if n.strip()]
    if len(names) < 2:
        raise SimulationError("INVALID_PARAMS", "compare needs at least two integrators")
    instances = [_instance_for_run(args, name) for name in names]
    with open(args.report, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        header = ["tick"] + [f"sim_time_{n}" for n in names] + ["rms_divergence", "max_divergence"]
        writer.writerow(header)
        for _ in range(args.steps):
            frames = [engine.step(instance) for instance in instances]
            reference = frames[0].positions
            deltas = [np.linalg.norm(f.positions - reference, axis=1) for f in frames[1:]]
            rms = max(float(np.sqrt(np.mean(d * d))) for d in deltas)
            peak = max(float(d.max()) for d in deltas)
            writer.writerow([frames[0].tick] + [f"{f.sim_time:.9g}" for f in frames]
                            + [f"{rms:.9g}", f"{peak:.9g}"])
    print(f"wrote {args.report}: {args.steps} rows comparing {', '.join(names)}")
    return 0


def _cmd_ahp(args) -> int:
    value_matrix = ahp.read_matrix_csv(args.value_matrix)
    cost_matrix = ahp.read_matrix_csv(args.cost_matrix)
    for matrix, origin in ((value_matrix, args.value_matrix), (cost_matrix, args.cost_matrix)):
        for warning in matrix.warnings:
            print(f"warning [{origin}]: {warning}", file=sys.stderr)
    points = ahp.cost_value_points(ahp.priority_vector(value_matrix), ahp.priority_vector(cost_matrix))
    ahp.write_points_csv(points, args.out)
    print(f"wrote {args.out}: {len(points)} requirements ranked by value/cost")
    return 0


def load_plugin_hooks(hooks, integrators, detectors) -> None:
    """Import each ``module:function`` hook and call it with the registries."""
    for hook in hooks:
        module_name, _, function_name = hook.partition(":")
        module = __import__(module_name, fromlist=["_"])
        getattr(module, function_name or "register")(integrators, detectors)


def resolve_port(flag_value: int) -> int:
    """SOFTBODY_PORT wins over --port when set."""
    return int(os.environ.get("SOFTBODY_PORT", flag_value))


def _cmd_serve(args) -> int:
    from . import server
    from .collision import DETECTORS
    from .integrators import INTEGRATORS as integrators

    load_plugin_hooks(args.plugin, integrators, DETECTORS)
    environment = _load_environment(args.environment)
    hub = SimulationHub(max_instances=args.max_instances, default_environment=environment)
    port = resolve_port(args.port)
    print(f"serving on ws://{args.host}:{port}/ws")
    server.serve(port=port, host=args.host, hub=hub, ui_dir=args.ui_dir)
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "create": _cmd_create,
    "run": _cmd_run,
    "resume": _cmd_resume,
    "compare": _cmd_compare,
    "ahp": _cmd_ahp,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SimulationError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error [IO_FAILURE]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
