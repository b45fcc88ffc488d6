"""Interactive multi-layer mass-spring softbody simulation engine."""

from .errors import SimulationError
from .model import (
    CreationParams,
    Face,
    Particle,
    SoftBody,
    Spring,
    attach_objects,
    compute_volume,
    create_default_soft_body,
    create_soft_body,
    vec3,
)
from .forces import ExternalInput, ForceParams
from .integrators import INTEGRATORS, IntegratorSpec, register_integrator
from .collision import DETECTORS, Collider, Contact, register_detector
from .engine import Frame, Series, SimInstance, SimParams

__all__ = [
    "SimulationError",
    "CreationParams", "Face", "Particle", "SoftBody", "Spring",
    "attach_objects", "compute_volume", "create_default_soft_body", "create_soft_body", "vec3",
    "ExternalInput", "ForceParams",
    "INTEGRATORS", "IntegratorSpec", "register_integrator",
    "DETECTORS", "Collider", "Contact", "register_detector",
    "Frame", "Series", "SimInstance", "SimParams",
]

__version__ = "0.1.0"
