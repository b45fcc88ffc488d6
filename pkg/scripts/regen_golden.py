#!/usr/bin/env python3
"""Regenerate the byte-exact format goldens under testdata/golden/.

Run from the repository root after any deliberate format change, then review
the diff; tests compare serializer output against these bytes.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from softbody import engine, persistence
from softbody.collision import ground_plane
from softbody.engine import SimInstance
from softbody.model import create_default_soft_body

GOLDEN = pathlib.Path(__file__).resolve().parents[1] / "testdata" / "golden"


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)

    body = create_default_soft_body(2)
    persistence.export_object(body, GOLDEN / "default2d.sbobj")

    chain = create_default_soft_body(1)
    persistence.export_object(chain, GOLDEN / "default1d.sbobj")

    persistence.write_environment([ground_plane()], {"gridExtent": 5.0}, GOLDEN / "ground.sbenv")

    lifted = create_default_soft_body(2)
    lifted.positions[:, 1] += 2.0
    instance = SimInstance(1, lifted)
    engine.resume(instance)
    engine.start_recording(instance, stride=1)
    for _ in range(3):
        engine.step(instance)
    series = engine.stop_recording(instance)
    persistence.write_series(series, GOLDEN / "example.sbseries")
    persistence.save_state(instance, GOLDEN / "example.sbstate")

    for path in sorted(GOLDEN.iterdir()):
        print(f"wrote {path} ({path.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
