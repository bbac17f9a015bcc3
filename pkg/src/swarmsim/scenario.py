"""Scenario descriptors (JSON), random scenario generation and priority presets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from . import rng as rngmod
from .deployment import ImageRegistry
from .model import (
    Application,
    Capacity,
    PriorityVector,
    ValidationError,
    validate_application,
    validate_capacity,
)


@dataclass(frozen=True)
class ScenarioRanges:
    """Inclusive min/max bounds used when drawing a random scenario."""

    # applications
    compute_components: int = 3
    storage_components: int = 1
    cpu: tuple[int, int] = (1, 6)
    ram: tuple[int, int] = (1, 6)
    storage: tuple[int, int] = (1, 10)
    image_size: tuple[int, int] = (1, 500)
    instances: tuple[int, int] = (1, 3)
    # capacities
    locations: tuple[str, ...] = ("EU", "US")
    providers: tuple[str, ...] = ("AWS", "Azure")
    node_cpu: tuple[int, int] = (16, 100)
    node_ram: tuple[int, int] = (16, 100)
    node_storage: tuple[int, int] = (16, 100)
    idle_power: tuple[float, float] = (150.0, 225.0)
    max_power: tuple[float, float] = (500.0, 3500.0)
    bandwidth: tuple[int, int] = (50, 1200)
    latency: tuple[int, int] = (15, 100)
    price: tuple[float, float] = (0.025, 25.0)
    reliability: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self):
        for name, value in asdict(self).items():
            if isinstance(value, tuple) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
                if value[0] > value[1]:
                    raise ValueError(f"range {name}: min {value[0]} > max {value[1]}")
        if self.compute_components < 0 or self.storage_components < 0:
            raise ValueError("component counts must be >= 0")
        if self.compute_components + self.storage_components < 1:
            raise ValueError("applications need at least one component")
        if not self.locations or not self.providers:
            raise ValueError("location and provider sets must be non-empty")


DEFAULT_RANGES = ScenarioRanges()


def generate_scenario(
    seed: int,
    n_apps: int = 6,
    n_capacities: int = 8,
    ranges: ScenarioRanges = DEFAULT_RANGES,
) -> tuple[list[Capacity], list[Application]]:
    if n_apps < 1 or n_capacities < 1:
        raise ValueError("counts must be >= 1")
    g = rngmod.substream(seed, rngmod.SCENARIO)

    def integer(bounds):
        return int(g.integers(bounds[0], bounds[1] + 1))

    def real(bounds):
        return float(g.uniform(bounds[0], bounds[1]))

    capacities = []
    for i in range(n_capacities):
        capacities.append(
            Capacity(
                id=f"node{i + 1:02d}",
                provider=str(ranges.providers[int(g.integers(len(ranges.providers)))]),
                location=str(ranges.locations[int(g.integers(len(ranges.locations)))]),
                cpu_total=integer(ranges.node_cpu),
                ram_total=integer(ranges.node_ram),
                storage_total=integer(ranges.node_storage),
                idle_power=round(real(ranges.idle_power), 3),
                max_power=round(real(ranges.max_power), 3),
                latency=integer(ranges.latency),
                bandwidth=integer(ranges.bandwidth),
                price_per_hour=round(real(ranges.price), 4),
                reliability=round(real(ranges.reliability), 4),
            )
        )

    applications = []
    for a in range(n_apps):
        components = []
        for c in range(ranges.compute_components):
            components.append(
                {
                    "id": f"c{c + 1}",
                    "kind": "compute",
                    "cpu": integer(ranges.cpu),
                    "ram": integer(ranges.ram),
                    "image_size": integer(ranges.image_size),
                    "instances": integer(ranges.instances),
                }
            )
        for s in range(ranges.storage_components):
            components.append({"id": f"s{s + 1}", "kind": "storage", "storage_size": integer(ranges.storage)})
        applications.append(validate_application({"id": f"app{a + 1}", "submit_time": 0.0, "components": components}))
    return capacities, applications


# -- descriptor files ---------------------------------------------------------


def infrastructure_document(
    capacities: Sequence[Capacity], seed: int = 0, registry: Optional[ImageRegistry] = None
) -> dict:
    doc: dict[str, Any] = {"seed": seed, "capacities": [c.to_dict() for c in capacities]}
    if registry is not None:
        doc["registry"] = {"bandwidth": registry.bandwidth, "latency": registry.latency}
    return doc


def applications_document(applications: Sequence[Application]) -> dict:
    return {"applications": [a.to_dict() for a in applications]}


def dumps(doc: Mapping) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


@dataclass
class Infrastructure:
    capacities: list[Capacity]
    seed: int = 0
    registry: ImageRegistry = field(default_factory=ImageRegistry)


def parse_infrastructure(doc: Mapping) -> Infrastructure:
    raw_caps = doc.get("capacities")
    if not isinstance(raw_caps, list) or not raw_caps:
        raise ValidationError(["infrastructure: at least one capacity required"])
    errors: list[str] = []
    capacities = []
    for raw in raw_caps:
        try:
            capacities.append(validate_capacity(raw))
        except ValidationError as exc:
            errors.extend(exc.errors)
    ids = [c.id for c in capacities]
    if len(set(ids)) != len(ids):
        errors.append("infrastructure: duplicate capacity id")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        errors.append("infrastructure: seed must be an integer")
    if errors:
        raise ValidationError(errors)
    reg = doc.get("registry") or {}
    registry = ImageRegistry(bandwidth=reg.get("bandwidth", 1000.0), latency=reg.get("latency", 0.0))
    return Infrastructure(capacities, seed, registry)


def parse_applications(doc: Mapping) -> list[Application]:
    raw_apps = doc.get("applications")
    if not isinstance(raw_apps, list) or not raw_apps:
        raise ValidationError(["applications: at least one application required"])
    errors: list[str] = []
    apps = []
    for raw in raw_apps:
        try:
            apps.append(validate_application(raw))
        except ValidationError as exc:
            errors.extend(exc.errors)
    if len({a.id for a in apps}) != len(apps):
        errors.append("applications: duplicate application id")
    if errors:
        raise ValidationError(errors)
    return apps


def load_infrastructure(path) -> Infrastructure:
    return parse_infrastructure(json.loads(Path(path).read_text()))


def load_applications(path) -> list[Application]:
    return parse_applications(json.loads(Path(path).read_text()))


# -- priority presets ---------------------------------------------------------

PROFILE_NAMES = ("energy", "price", "latency", "bandwidth", "equal", "random")


def preset_priorities(profile: str) -> Optional[PriorityVector]:
    """Priority vector for a named profile or an explicit ``l:p:b:e`` vector.

    Single-attribute profiles weight their attribute 1.0 and the rest 0.1.
    ``random`` returns None because random ranking ignores priorities.
    """
    if profile == "random":
        return None
    if profile == "equal":
        return PriorityVector(1.0, 1.0, 1.0, 1.0)
    if profile in ("energy", "price", "latency", "bandwidth"):
        weights = {name: 0.1 for name in ("latency", "price", "bandwidth", "energy")}
        weights[profile] = 1.0
        return PriorityVector(**weights)
    parts = profile.split(":")
    if len(parts) == 4:
        try:
            return PriorityVector(*(float(p) for p in parts))
        except ValueError as exc:
            raise ValidationError([f"bad priority vector {profile!r}: {exc}"]) from None
    raise ValidationError([f"unknown priority profile {profile!r}"])
