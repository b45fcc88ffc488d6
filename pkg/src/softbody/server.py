"""WebSocket control/streaming endpoint and the FastAPI application factory.

One JSON object per text frame. Client requests may carry a request_id that
is echoed on exactly one ack or error. Frames and events are server-push on
subscriptions. Engine error codes pass through verbatim; unknown message
types answer UNKNOWN_TYPE and keep the connection open.
"""

from __future__ import annotations

import asyncio
import json
import os
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .errors import SimulationError, err
from .hub import SimulationHub


def _require(payload: dict, key: str):
    if key not in payload:
        raise err("INVALID_PARAMS", f"message needs field {key!r}")
    return payload[key]


def _instance_id(payload: dict) -> int:
    return int(_require(payload, "instance_id"))


def handle_command(hub: SimulationHub, payload: dict) -> dict:
    """Dispatch one client message; returns the ack payload (without ids)."""
    kind = payload.get("type")
    if kind == "create":
        from .model import CreationParams, default_creation_params

        dimension = int(payload.get("dimension", 2))
        params = default_creation_params(dimension)
        overrides = {}
        for field_name, key in (
            ("particle_count", "particle_count"), ("layer_count", "layer_count"),
            ("total_mass", "total_mass"), ("size", "size"), ("inner_ratio", "inner_ratio"),
            ("pressure_coefficient", "pressure_coefficient"),
        ):
            if key in payload:
                overrides[field_name] = payload[key]
        if overrides:
            from dataclasses import replace

            params = replace(params, **{k: type(getattr(params, k))(v) for k, v in overrides.items()})
        drop = payload.get("drop_height")
        instance = hub.create_instance(creation=params, dimension=dimension,
                                       integrator_name=payload.get("integrator"),
                                       detector_name=payload.get("detector"),
                                       drop_height=None if drop is None else float(drop))
        return {"type": "ack", "instance_id": instance.id, "instance": hub.describe(instance)}
    if kind == "import_object":
        instance = hub.import_object_instance(_require(payload, "path"), payload.get("integrator"))
        return {"type": "ack", "instance_id": instance.id, "instance": hub.describe(instance)}
    if kind == "import_state":
        instance = hub.import_state_instance(_require(payload, "path"))
        return {"type": "ack", "instance_id": instance.id, "instance": hub.describe(instance),
                "warnings": list(instance.warnings)}
    if kind == "start":
        hub.start_instance(_instance_id(payload))
        return {"type": "ack"}
    if kind == "pause":
        hub.pause_instance(_instance_id(payload))
        return {"type": "ack"}
    if kind == "resume":
        hub.resume_instance(_instance_id(payload))
        return {"type": "ack"}
    if kind == "set_params":
        hub.set_params(_instance_id(payload), _require(payload, "params"))
        return {"type": "ack"}
    if kind == "swap_algorithm":
        hub.swap_algorithm(_instance_id(payload), payload.get("kind", "integrator"),
                           _require(payload, "name"))
        return {"type": "ack"}
    if kind == "apply_force":
        hub.apply_force(_instance_id(payload), _require(payload, "particle_ids"),
                        _require(payload, "force"), int(payload.get("steps", 1)))
        return {"type": "ack"}
    if kind == "drag":
        hub.apply_drag(_instance_id(payload), int(_require(payload, "particle_id")),
                       _require(payload, "target"), float(payload.get("stiffness", 50.0)),
                       int(payload.get("steps", 30)))
        return {"type": "ack"}
    if kind == "attach":
        instance = hub.attach_instances(int(_require(payload, "instance_a")),
                                        int(_require(payload, "instance_b")),
                                        [tuple(p) for p in _require(payload, "pairs")],
                                        kind=payload.get("spring_kind", "structural"))
        return {"type": "ack", "instance_id": instance.id, "instance": hub.describe(instance)}
    if kind == "add_instance":
        instance = hub.add_instance(_instance_id(payload), payload.get("mode", "new_algorithm"),
                                    payload.get("name"))
        return {"type": "ack", "instance_id": instance.id, "instance": hub.describe(instance)}
    if kind == "save_state":
        hub.save_state(_instance_id(payload), _require(payload, "path"))
        return {"type": "ack", "path": payload["path"]}
    if kind == "start_series":
        hub.start_series(_instance_id(payload), int(payload.get("stride", 1)))
        return {"type": "ack"}
    if kind == "stop_series":
        count = hub.stop_series(_instance_id(payload), _require(payload, "path"))
        return {"type": "ack", "path": payload["path"], "frame_count": count}
    if kind == "start_playback":
        instance = hub.start_playback_instance(_require(payload, "path"))
        return {"type": "ack", "instance_id": instance.id, "instance": hub.describe(instance)}
    if kind == "step_playback":
        hub.step_playback(_instance_id(payload))
        return {"type": "ack"}
    raise err("UNKNOWN_TYPE", f"unknown message type {kind!r}")


def create_app(hub: SimulationHub | None = None, ui_dir: str | None = None) -> FastAPI:
    hub = hub or SimulationHub()

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        hub.start()
        try:
            yield
        finally:
            hub.stop()

    app = FastAPI(title="softbody simulation server", lifespan=lifespan)
    app.state.hub = hub

    @app.websocket("/ws")
    async def websocket_endpoint(websocket: WebSocket):
        await websocket.accept()
        loop = asyncio.get_running_loop()
        outbox: asyncio.Queue = asyncio.Queue()
        subscriptions: dict[int, int] = {}  # instance_id -> subscription id

        def sink(payload: dict) -> None:
            # called from the hub thread; hop onto the socket's event loop
            loop.call_soon_threadsafe(outbox.put_nowait, payload)

        def on_message(raw: str) -> None:
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError:
                outbox.put_nowait({"type": "error", "code": "PARSE", "message": "frame is not valid JSON"})
                return
            if not isinstance(payload, dict):
                outbox.put_nowait({"type": "error", "code": "PARSE", "message": "frame must be a JSON object"})
                return
            request_id = payload.get("request_id")
            try:
                if payload.get("type") == "subscribe":
                    instance_id = _instance_id(payload)
                    rate = float(payload.get("rate_hz", 30.0))
                    if instance_id in subscriptions:
                        hub.unsubscribe(subscriptions.pop(instance_id))
                    subscriptions[instance_id] = hub.subscribe(instance_id, sink, rate)
                    reply = {"type": "ack"}
                elif payload.get("type") == "unsubscribe":
                    instance_id = _instance_id(payload)
                    sid = subscriptions.pop(instance_id, None)
                    if sid is not None:
                        hub.unsubscribe(sid)
                    reply = {"type": "ack"}
                else:
                    reply = handle_command(hub, payload)
            except SimulationError as exc:
                reply = {"type": "error", "code": exc.code, "message": exc.message}
            except (KeyError, ValueError, TypeError) as exc:
                reply = {"type": "error", "code": "INVALID_PARAMS", "message": str(exc)}
            if request_id is not None:
                reply = dict(reply)
                reply["request_id"] = request_id
            outbox.put_nowait(reply)

        closed = object()

        async def reader() -> None:
            try:
                while True:
                    raw = await websocket.receive_text()
                    on_message(raw)
            except (WebSocketDisconnect, RuntimeError):
                pass
            finally:
                outbox.put_nowait(closed)

        await websocket.send_text(json.dumps(hub.catalog()))
        reader_task = asyncio.create_task(reader())
        try:
            while True:
                item = await outbox.get()
                if item is closed:
                    break
                await websocket.send_text(json.dumps(item))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            reader_task.cancel()
            hub.drop_subscriptions(list(subscriptions.values()))

    if ui_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = str(bundled) if bundled.is_dir() else None
    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(port: int = 8700, host: str = "127.0.0.1", hub: SimulationHub | None = None,
          ui_dir: str | None = None) -> None:
    import uvicorn

    app = create_app(hub, ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise err("BIND_FAILURE", f"cannot bind {host}:{port}: {exc}") from exc
