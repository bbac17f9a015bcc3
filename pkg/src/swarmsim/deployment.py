"""Winner confirmation, lead-resource choice, image transfers and workload tasks."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .model import Application, Capacity, SliceState, StateError
from .offers import OfferCombination, OfferPair, release_reservations
from .ranking import RankedOffers
from .simkernel import (
    DEPLOY_STEP,
    STORAGE_ATTACHED,
    TASK_COMPLETE,
    TRANSFER_COMPLETE,
    Event,
    Kernel,
    transfer_duration,
)

#: Length of the CPU-saturating task run by every deployed compute unit.
TASK_DURATION_S = 1800.0


class DeploymentFailed(RuntimeError):
    def __init__(self, message: str, application_id: Optional[str] = None):
        super().__init__(message)
        self.application_id = application_id


@dataclass(frozen=True)
class ImageRegistry:
    bandwidth: float = 1000.0
    latency: float = 0.0
    images: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("registry bandwidth must be > 0")
        if self.latency < 0:
            raise ValueError("registry latency must be >= 0")

    def pull_duration(self, image_size: float, capacity: Capacity) -> float:
        return transfer_duration(
            image_size,
            min(self.bandwidth, capacity.bandwidth),
            self.latency + capacity.latency,
        )


@dataclass
class Swarm:
    application_id: str
    lead_capacity: str
    members: frozenset[tuple[str, str, int]]
    deployed_at: dict[tuple[str, str, int], float] = field(default_factory=dict)
    started_at: float = 0.0


Availability = Union[Sequence[bool], Callable[[int, OfferCombination], bool], None]


def _available(availability: Availability, rank: int, offer: OfferCombination) -> bool:
    if availability is None:
        return True
    if callable(availability):
        return bool(availability(rank, offer))
    return bool(availability[rank])


def select_winner(
    ranked: RankedOffers,
    availability: Availability,
    capacities: Mapping[str, Capacity],
    all_pairs: Optional[Iterable[OfferPair]] = None,
    application_id: Optional[str] = None,
) -> OfferCombination:
    """First available offer in rank order; every other reservation is released.

    ``all_pairs`` defaults to the union of the ranked offers' pairs. When no
    offer is available all reservations are released and
    :class:`DeploymentFailed` is raised.
    """
    if not ranked.entries:
        raise ValueError("ranked offer list is empty")
    if all_pairs is None:
        pool: set[OfferPair] = set()
        for offer, _ in ranked.entries:
            pool.update(offer.pairs)
    else:
        pool = set(all_pairs)
    winner = None
    for rank, (offer, _) in enumerate(ranked.entries):
        if _available(availability, rank, offer):
            winner = offer
            break
    keep = winner.pairs if winner is not None else frozenset()
    release_reservations(sorted(pool - keep, key=_pair_order), capacities)
    if winner is None:
        raise DeploymentFailed("no available offer", application_id)
    return winner


def _pair_order(p: OfferPair):
    return (p.capacity_id, p.component_id, p.instance_index, p.agent_id)


def select_lead_resource(winner: OfferCombination, capacities: Mapping[str, Capacity]) -> str:
    ids = winner.capacity_ids()
    if not ids:
        raise ValueError("winner has no pairs")
    return min(ids, key=lambda c: (-capacities[c].cpu_total, c))


def deploy_application(
    kernel: Kernel,
    app: Application,
    winner: OfferCombination,
    lead: str,
    registry: ImageRegistry,
    capacities: Mapping[str, Capacity],
) -> Swarm:
    """Move the winner's slices to ``assigned`` and schedule its rollout.

    The lead Swarm Agent launch is a zero-duration event. Image pulls to
    different capacities run concurrently; pulls to one capacity queue in
    application unit order. Storage units attach immediately.
    """
    unit_order = {key: n for n, key in enumerate(app.unit_keys())}
    pairs = sorted(winner.pairs, key=lambda p: unit_order[p.unit])
    for p in pairs:
        if p.slice_ref is None or p.slice_ref.state is not SliceState.RESERVED:
            state = p.slice_ref.state.value if p.slice_ref is not None else "missing"
            raise StateError(f"slice for {p.unit} on {p.capacity_id} is {state}, expected reserved")
    for p in pairs:
        p.slice_ref.transition(SliceState.ASSIGNED)

    now = kernel.now
    swarm = Swarm(
        application_id=app.id,
        lead_capacity=lead,
        members=frozenset((p.capacity_id, p.component_id, p.instance_index) for p in pairs),
        started_at=now,
    )
    kernel.schedule(now, DEPLOY_STEP, {"app": app.id, "lead": lead, "step": "lead_sa_launch"})

    queue_end: dict[str, float] = defaultdict(lambda: now)
    for p in pairs:
        comp = app.component(p.component_id)
        payload = {
            "app": app.id,
            "component": p.component_id,
            "instance": p.instance_index,
            "capacity": p.capacity_id,
        }
        if comp.is_compute:
            size = registry.images.get(comp.id, comp.image_size)
            done = queue_end[p.capacity_id] + registry.pull_duration(size, capacities[p.capacity_id])
            queue_end[p.capacity_id] = done
            kernel.schedule(done, TRANSFER_COMPLETE, {**payload, "cpu": comp.cpu, "image_size": size})
        else:
            kernel.schedule(now, STORAGE_ATTACHED, payload)
    return swarm


def complete_unit(event: Event, swarm: Swarm, pairs: Mapping[tuple[str, int], OfferPair]) -> None:
    """Handle a transfer/attach event: ``assigned -> allocated`` plus bookkeeping."""
    p = event.payload
    pair = pairs[(p["component"], p["instance"])]
    pair.slice_ref.transition(SliceState.ALLOCATED)
    swarm.deployed_at[(p["capacity"], p["component"], p["instance"])] = event.time


def run_workload(
    kernel: Kernel,
    swarm: Swarm,
    member: tuple[str, str, int],
    cpu: int,
    duration: float = TASK_DURATION_S,
) -> Event:
    """Start the CPU-saturating task of one deployed compute unit."""
    capacity_id, component_id, instance = member
    start = swarm.deployed_at[member]
    kernel.record_interval(capacity_id, start, start + duration, cpu)
    return kernel.schedule(
        start + duration,
        TASK_COMPLETE,
        {"app": swarm.application_id, "component": component_id, "instance": instance, "capacity": capacity_id},
    )
