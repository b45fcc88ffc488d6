"""Error type shared by the engine, persistence and server layers.

Every failure carries a stable machine-readable code; the wire protocol
forwards these codes verbatim, so tests and clients match on ``.code``
rather than on exception subclasses or messages.
"""

from __future__ import annotations


class SimulationError(Exception):
    """Domain error with a stable code (e.g. ``SELF_LOOP``, ``SCHEMA_MISMATCH``)."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"{code}: {self.message}" if message else code)


def err(code: str, message: str = "") -> SimulationError:
    return SimulationError(code, message)
