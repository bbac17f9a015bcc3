"""Discrete-event simulator of decentralised, agent-based application deployment
across the cloud-edge continuum."""

from .model import (
    Application,
    Capacity,
    CapacitySlice,
    Component,
    PriorityVector,
    QoSVector,
    ResourceAgent,
    SliceState,
    StateError,
    ValidationError,
    classify_tier,
    validate_application,
)
from .simulation import Simulation, SimulationResult, simulate

__version__ = "0.1.0"

__all__ = [
    "Application",
    "Capacity",
    "CapacitySlice",
    "Component",
    "PriorityVector",
    "QoSVector",
    "ResourceAgent",
    "Simulation",
    "SimulationResult",
    "SliceState",
    "StateError",
    "ValidationError",
    "classify_tier",
    "simulate",
    "validate_application",
]
