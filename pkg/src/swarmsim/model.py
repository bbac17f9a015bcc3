"""Domain types for applications, capacities and the slice lifecycle."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields
from typing import Any, Iterable, Mapping, Optional

#: Resources consumed by the Resource Agent itself on its host node.
RA_FOOTPRINT_CPU = 1
RA_FOOTPRINT_RAM = 1


class ValidationError(ValueError):
    """Raised when a descriptor violates one or more type invariants.

    ``errors`` lists every violation found, not only the first one.
    """

    def __init__(self, errors: Iterable[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class StateError(RuntimeError):
    """Illegal capacity-slice state transition."""


class ComponentKind(str, enum.Enum):
    COMPUTE = "compute"
    STORAGE = "storage"


class SliceState(str, enum.Enum):
    FREE = "free"
    RESERVED = "reserved"
    ASSIGNED = "assigned"
    ALLOCATED = "allocated"


LEGAL_TRANSITIONS = frozenset(
    {
        (SliceState.FREE, SliceState.RESERVED),
        (SliceState.RESERVED, SliceState.FREE),
        (SliceState.RESERVED, SliceState.ASSIGNED),
        (SliceState.ASSIGNED, SliceState.ALLOCATED),
    }
)


class SortDirection(str, enum.Enum):
    ASCENDING = "ascending"
    DESCENDING = "descending"


@dataclass(frozen=True)
class Component:
    id: str
    kind: ComponentKind
    cpu: Optional[int] = None
    ram: Optional[int] = None
    image_size: Optional[float] = None
    storage_size: Optional[int] = None
    instances: int = 1
    provider: Optional[str] = None
    location: Optional[str] = None

    @property
    def is_compute(self) -> bool:
        return self.kind is ComponentKind.COMPUTE

    def to_dict(self) -> dict:
        if self.is_compute:
            out = {
                "id": self.id,
                "kind": self.kind.value,
                "cpu": self.cpu,
                "ram": self.ram,
                "image_size": self.image_size,
                "instances": self.instances,
            }
        else:
            out = {"id": self.id, "kind": self.kind.value, "storage_size": self.storage_size}
        if self.provider is not None:
            out["provider"] = self.provider
        if self.location is not None:
            out["location"] = self.location
        return out


@dataclass(frozen=True)
class PriorityVector:
    latency: float = 1.0
    price: float = 1.0
    bandwidth: float = 1.0
    energy: float = 1.0

    def __post_init__(self):
        values = self.as_tuple()
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ValidationError([f"priority weights must be finite and >= 0, got {values}"])
        if not any(v > 0 for v in values):
            raise ValidationError(["at least one priority weight must be > 0"])

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.latency, self.price, self.bandwidth, self.energy)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Application:
    id: str
    components: tuple[Component, ...]
    priorities: PriorityVector = field(default_factory=PriorityVector)
    submit_time: float = 0.0

    def component(self, component_id: str) -> Component:
        for comp in self.components:
            if comp.id == component_id:
                return comp
        raise KeyError(component_id)

    def placement_units(self) -> list[tuple[Component, int]]:
        """Expand compute instances into independent (component, instance) units."""
        units = []
        for comp in self.components:
            count = comp.instances if comp.is_compute else 1
            units.extend((comp, i) for i in range(count))
        return units

    def unit_keys(self) -> list[tuple[str, int]]:
        return [(c.id, i) for c, i in self.placement_units()]

    def with_priorities(self, priorities: PriorityVector) -> "Application":
        return Application(self.id, self.components, priorities, self.submit_time)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "submit_time": self.submit_time,
            "priorities": self.priorities.to_dict(),
            "components": [c.to_dict() for c in self.components],
        }


@dataclass(frozen=True)
class QoSVector:
    latency: float
    price: float
    bandwidth: float
    energy: float

    def __post_init__(self):
        for name in ("latency", "price", "bandwidth", "energy"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"QoS {name} must be finite and >= 0, got {v}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.latency, self.price, self.bandwidth, self.energy)


@dataclass
class CapacitySlice:
    """A sub-portion of a capacity bound to one placement unit.

    ``bound_component`` is ``(application id, component id, instance index)``.
    """

    cpu: int
    ram: int
    storage: int
    state: SliceState = SliceState.FREE
    bound_component: Optional[tuple[str, str, int]] = None
    capacity_id: Optional[str] = None

    def transition(self, new_state: SliceState) -> None:
        if (self.state, new_state) not in LEGAL_TRANSITIONS:
            raise StateError(
                f"illegal slice transition {self.state.value} -> {new_state.value} "
                f"for {self.bound_component} on {self.capacity_id}"
            )
        self.state = new_state
        if new_state is SliceState.FREE:
            self.bound_component = None


@dataclass
class Capacity:
    id: str
    provider: str
    location: str
    cpu_total: int
    ram_total: int
    storage_total: int
    idle_power: float
    max_power: float
    latency: float
    bandwidth: float
    price_per_hour: float
    reliability: float = 1.0
    slices: list[CapacitySlice] = field(default_factory=list, repr=False)

    def __post_init__(self):
        errors = _capacity_errors(self)
        if errors:
            raise ValidationError(errors)

    # The RA footprint is never charged against storage.
    @property
    def offerable_cpu(self) -> int:
        return self.cpu_total - RA_FOOTPRINT_CPU

    @property
    def offerable_ram(self) -> int:
        return self.ram_total - RA_FOOTPRINT_RAM

    @property
    def offerable_storage(self) -> int:
        return self.storage_total

    def bound_totals(self, *states: SliceState) -> tuple[int, int, int]:
        cpu = ram = storage = 0
        for s in self.slices:
            if not states or s.state in states:
                cpu += s.cpu
                ram += s.ram
                storage += s.storage
        return cpu, ram, storage

    def free_resources(self) -> tuple[int, int, int]:
        cpu, ram, storage = self.bound_totals()
        return (
            self.offerable_cpu - cpu,
            self.offerable_ram - ram,
            self.offerable_storage - storage,
        )

    def reserve(self, cpu: int, ram: int, storage: int, binding: tuple[str, str, int]) -> CapacitySlice:
        """Carve a reserved slice out of the free pool."""
        free_cpu, free_ram, free_storage = self.free_resources()
        if cpu > free_cpu or ram > free_ram or storage > free_storage:
            raise StateError(f"capacity {self.id} cannot fit {(cpu, ram, storage)}")
        s = CapacitySlice(cpu, ram, storage, capacity_id=self.id)
        s.transition(SliceState.RESERVED)
        s.bound_component = binding
        self.slices.append(s)
        return s

    def release(self, s: CapacitySlice) -> None:
        """Return a reserved slice to the free pool."""
        s.transition(SliceState.FREE)
        self.slices.remove(s)

    def check_conservation(self) -> None:
        """Assert slice bookkeeping balances against the offerable totals."""
        free = self.free_resources()
        if min(free) < 0:
            raise StateError(f"capacity {self.id} over-committed: free={free}")
        for s in self.slices:
            if s.state is SliceState.FREE or s.bound_component is None:
                raise StateError(f"capacity {self.id} holds an unbound or free slice {s}")

    def fresh_copy(self) -> "Capacity":
        """Copy with an empty slice list."""
        kwargs = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "slices"}
        return Capacity(**kwargs)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "slices"}


@dataclass(frozen=True)
class ResourceAgent:
    id: str
    capacity_id: str
    sort_direction: SortDirection = SortDirection.ASCENDING


def assign_agents(capacities: list[Capacity], rng) -> list[ResourceAgent]:
    """One agent per capacity; half sort ascending, half descending.

    Odd populations get the extra agent on the ascending side. ``rng`` is a
    numpy Generator choosing which capacities get which direction.
    """
    n = len(capacities)
    n_asc = (n + 1) // 2
    order = rng.permutation(n) if n else []
    direction = {}
    for rank, idx in enumerate(order):
        direction[int(idx)] = SortDirection.ASCENDING if rank < n_asc else SortDirection.DESCENDING
    return [
        ResourceAgent(f"ra-{cap.id}", cap.id, direction[i]) for i, cap in enumerate(capacities)
    ]


# -- validation -------------------------------------------------------------

_COMPUTE_FIELDS = ("cpu", "ram", "image_size")


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _component_errors(raw: Mapping[str, Any], where: str) -> list[str]:
    errors = []
    kind = raw.get("kind")
    if kind not in (ComponentKind.COMPUTE.value, ComponentKind.STORAGE.value):
        return [f"{where}: unknown component kind {kind!r}"]
    if kind == ComponentKind.COMPUTE.value:
        for name in _COMPUTE_FIELDS:
            if name not in raw or raw[name] is None:
                errors.append(f"{where}: missing mandatory field {name}")
            elif not _is_number(raw[name]) or raw[name] < 1:
                errors.append(f"{where}: {name} >= 1 violated")
        instances = raw.get("instances", 1)
        if not isinstance(instances, int) or isinstance(instances, bool) or instances < 1:
            errors.append(f"{where}: instances >= 1 violated")
        for name in ("cpu", "ram"):
            if _is_number(raw.get(name)) and raw[name] != int(raw[name]):
                errors.append(f"{where}: {name} must be a whole number")
        if raw.get("storage_size", raw.get("size")) is not None:
            errors.append(f"{where}: compute component must not carry storage_size")
    else:
        size = raw.get("storage_size", raw.get("size"))
        if size is None:
            errors.append(f"{where}: missing mandatory field storage_size")
        elif not _is_number(size) or size < 1:
            errors.append(f"{where}: storage_size >= 1 violated")
        elif size != int(size):
            errors.append(f"{where}: storage_size must be a whole number")
        for name in (*_COMPUTE_FIELDS, "instances"):
            if raw.get(name) is not None:
                errors.append(f"{where}: storage component must not carry {name}")
    return errors


def validate_application(descriptor: Mapping[str, Any]) -> Application:
    """Build an :class:`Application` from a parsed descriptor.

    Every violation is collected before raising, so a single
    :class:`ValidationError` names all offending fields.
    """
    errors: list[str] = []
    app_id = descriptor.get("id")
    if not isinstance(app_id, str) or not app_id:
        errors.append("application: missing mandatory field id")
        app_id = "<unnamed>"
    raw_components = descriptor.get("components")
    if not isinstance(raw_components, list) or not raw_components:
        errors.append(f"{app_id}: at least one component required")
        raw_components = []

    seen: set[str] = set()
    for i, raw in enumerate(raw_components):
        cid = raw.get("id") if isinstance(raw, Mapping) else None
        where = f"{app_id}/{cid if cid else f'#{i}'}"
        if not isinstance(raw, Mapping):
            errors.append(f"{where}: component must be a mapping")
            continue
        if not isinstance(cid, str) or not cid:
            errors.append(f"{where}: missing mandatory field id")
        elif cid in seen:
            errors.append(f"{where}: duplicate component id {cid}")
        else:
            seen.add(cid)
        errors.extend(_component_errors(raw, where))

    submit_time = descriptor.get("submit_time", 0.0)
    if not _is_number(submit_time) or submit_time < 0:
        errors.append(f"{app_id}: submit_time must be >= 0")
        submit_time = 0.0

    priorities = PriorityVector()
    raw_prio = descriptor.get("priorities")
    if raw_prio is not None:
        try:
            priorities = parse_priorities(raw_prio)
        except ValidationError as exc:
            errors.extend(f"{app_id}: {e}" for e in exc.errors)

    if errors:
        raise ValidationError(errors)

    components = []
    for raw in raw_components:
        if raw["kind"] == ComponentKind.COMPUTE.value:
            comp = Component(
                id=raw["id"],
                kind=ComponentKind.COMPUTE,
                cpu=int(raw["cpu"]),
                ram=int(raw["ram"]),
                image_size=raw["image_size"],
                instances=raw.get("instances", 1),
                provider=raw.get("provider"),
                location=raw.get("location"),
            )
        else:
            comp = Component(
                id=raw["id"],
                kind=ComponentKind.STORAGE,
                storage_size=int(raw.get("storage_size", raw.get("size"))),
                provider=raw.get("provider"),
                location=raw.get("location"),
            )
        components.append(comp)
    return Application(app_id, tuple(components), priorities, float(submit_time))


def parse_priorities(raw: Mapping[str, Any]) -> PriorityVector:
    unknown = set(raw) - {"latency", "price", "bandwidth", "energy"}
    if unknown:
        raise ValidationError([f"unknown priority fields {sorted(unknown)}"])
    values = {}
    for name in ("latency", "price", "bandwidth", "energy"):
        v = raw.get(name, 0.0)
        if not _is_number(v):
            raise ValidationError([f"priority {name} must be a number"])
        values[name] = float(v)
    return PriorityVector(**values)


def _capacity_errors(cap: Capacity) -> list[str]:
    errors = []
    for name in ("cpu_total", "ram_total", "storage_total"):
        v = getattr(cap, name)
        if not _is_number(v) or v <= 0:
            errors.append(f"{cap.id}: {name} > 0 violated")
    if _is_number(cap.cpu_total) and cap.cpu_total <= RA_FOOTPRINT_CPU:
        errors.append(f"{cap.id}: cpu_total must exceed the agent footprint")
    if _is_number(cap.ram_total) and cap.ram_total <= RA_FOOTPRINT_RAM:
        errors.append(f"{cap.id}: ram_total must exceed the agent footprint")
    if not (_is_number(cap.idle_power) and _is_number(cap.max_power)) or not (
        0 <= cap.idle_power < cap.max_power
    ):
        errors.append(f"{cap.id}: idle_power < max_power violated")
    for name in ("latency", "price_per_hour"):
        v = getattr(cap, name)
        if not _is_number(v) or v < 0:
            errors.append(f"{cap.id}: {name} >= 0 violated")
    if not _is_number(cap.bandwidth) or cap.bandwidth <= 0:
        errors.append(f"{cap.id}: bandwidth > 0 violated")
    if not _is_number(cap.reliability) or not 0 <= cap.reliability <= 1:
        errors.append(f"{cap.id}: reliability in [0, 1] violated")
    return errors


_CAPACITY_FIELDS = (
    "id",
    "provider",
    "location",
    "cpu_total",
    "ram_total",
    "storage_total",
    "idle_power",
    "max_power",
    "latency",
    "bandwidth",
    "price_per_hour",
)


def validate_capacity(raw: Mapping[str, Any]) -> Capacity:
    missing = [name for name in _CAPACITY_FIELDS if raw.get(name) is None]
    if missing:
        raise ValidationError([f"{raw.get('id', '<capacity>')}: missing mandatory field {m}" for m in missing])
    kwargs = {name: raw[name] for name in _CAPACITY_FIELDS}
    kwargs["reliability"] = raw.get("reliability", 1.0)
    return Capacity(**kwargs)


# -- tier classification ------------------------------------------------------


class ClassificationError(ValueError):
    pass


DEFAULT_TIER_BOUNDS = {"cpu_total": (16, 100), "ram_total": (16, 100), "storage_total": (16, 100)}


def classify_tier(capacity: Capacity, ranges: Mapping[str, tuple[float, float]] = DEFAULT_TIER_BOUNDS) -> str:
    """Return ``"cloud"`` when the normalised mean size is >= 0.5, else ``"edge"``."""
    normalised = []
    for name in ("cpu_total", "ram_total", "storage_total"):
        lo, hi = ranges[name]
        v = getattr(capacity, name)
        if not lo <= v <= hi:
            raise ClassificationError(f"{capacity.id}: {name}={v} outside [{lo}, {hi}]")
        normalised.append(0.0 if hi == lo else (v - lo) / (hi - lo))
    return "cloud" if sum(normalised) / 3 >= 0.5 else "edge"
