"""Offer collection: gateway choice, broadcast, first-fit matchmaking, combinations."""

from __future__ import annotations

import hashlib
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import (
    Application,
    Capacity,
    CapacitySlice,
    ComponentKind,
    QoSVector,
    ResourceAgent,
    SliceState,
    SortDirection,
    StateError,
)
from .simkernel import REQUEST_ARRIVAL, Kernel, path_between, transfer_duration

#: Size of every offer request / response message, in MB (2 KB).
MESSAGE_SIZE_MB = 0.002

DEFAULT_COMBINATION_GUARD = 10**6

FULL = "full"
PARTIAL = "partial"
ZERO = "zero"


class CombinationOverflowError(RuntimeError):
    pass


@dataclass(frozen=True)
class OfferPair:
    agent_id: str
    component_id: str
    instance_index: int
    capacity_id: str
    slice_ref: Optional[CapacitySlice] = field(default=None, compare=False, repr=False)

    @property
    def unit(self) -> tuple[str, int]:
        return (self.component_id, self.instance_index)


@dataclass(frozen=True)
class OfferCombination:
    pairs: frozenset[OfferPair]
    qos: Optional[QoSVector] = None
    reliability: Optional[float] = None

    def capacity_ids(self) -> list[str]:
        return sorted({p.capacity_id for p in self.pairs})

    def content_key(self) -> int:
        return content_key(self.pairs)


def content_key(pairs: Iterable[OfferPair]) -> int:
    """Stable 64-bit digest of a combination's (agent, component, instance) set."""
    canonical = "|".join(
        f"{a}\x1f{c}\x1f{i}" for a, c, i in sorted((p.agent_id, p.component_id, p.instance_index) for p in pairs)
    )
    return int.from_bytes(hashlib.blake2b(canonical.encode(), digest_size=8).digest(), "big")


# -- protocol -----------------------------------------------------------------


def select_gateway(agents: Sequence[ResourceAgent], rng: np.random.Generator) -> str:
    if not agents:
        raise ValueError("cannot select a gateway from an empty agent list")
    return agents[int(rng.integers(len(agents)))].id


def message_delay(sender: Capacity, receiver: Capacity) -> float:
    """One 2 KB message between two agents; zero when an agent talks to itself."""
    if sender.id == receiver.id:
        return 0.0
    bandwidth, latency = path_between(sender, receiver)
    return transfer_duration(MESSAGE_SIZE_MB, bandwidth, latency)


def broadcast_request(
    kernel: Kernel,
    gateway: ResourceAgent,
    agents: Sequence[ResourceAgent],
    capacities: Mapping[str, Capacity],
    app: Application,
) -> int:
    """Schedule one request arrival per agent, the gateway included.

    Returns the number of messages that cross the network (the gateway's
    own request is delivered locally).
    """
    origin = capacities[gateway.capacity_id]
    sent = 0
    for agent in agents:
        delay = message_delay(origin, capacities[agent.capacity_id])
        if agent.id != gateway.id:
            sent += 1
        kernel.schedule(
            kernel.now + delay,
            REQUEST_ARRIVAL,
            {"app": app.id, "agent": agent.id, "gateway": gateway.id},
        )
    return sent


def _allowed(comp, capacity: Capacity) -> bool:
    if comp.provider is not None and comp.provider != capacity.provider:
        return False
    if comp.location is not None and comp.location != capacity.location:
        return False
    return True


def first_fit_match(agent: ResourceAgent, app: Application, capacity: Capacity) -> list[OfferPair]:
    """Reserve as many placement units as the agent's free pool allows.

    Units are visited in CPU order (storage counts as zero CPU, ties by
    component id). A multi-instance component is reserved whole or not at all.
    """
    if capacity.id != agent.capacity_id:
        raise ValueError(f"agent {agent.id} does not own capacity {capacity.id}")
    descending = agent.sort_direction is SortDirection.DESCENDING
    comps = sorted(
        app.components,
        key=lambda c: ((-(c.cpu or 0) if descending else (c.cpu or 0)), c.id),
    )
    pairs: list[OfferPair] = []
    for comp in comps:
        if not _allowed(comp, capacity):
            continue
        if comp.kind is ComponentKind.COMPUTE:
            need = (comp.cpu, comp.ram, 0)
            count = comp.instances
        else:
            need = (0, 0, comp.storage_size)
            count = 1
        reserved: list[CapacitySlice] = []
        for instance in range(count):
            free = capacity.free_resources()
            if any(n > f for n, f in zip(need, free)):
                break
            reserved.append(capacity.reserve(*need, binding=(app.id, comp.id, instance)))
        if len(reserved) < count:
            for s in reserved:
                capacity.release(s)
            continue
        pairs.extend(
            OfferPair(agent.id, comp.id, i, capacity.id, s) for i, s in enumerate(reserved)
        )
    return pairs


def classify_coverage(response: Sequence[OfferPair], app: Application) -> str:
    units = set(app.unit_keys())
    covered = set()
    for p in response:
        if p.unit not in units:
            raise KeyError(f"pair references unknown unit {p.unit} of {app.id}")
        covered.add(p.unit)
    if not covered:
        return ZERO
    return FULL if covered == units else PARTIAL


def release_reservations(losing_pairs: Iterable[OfferPair], capacities: Mapping[str, Capacity]) -> None:
    for p in losing_pairs:
        s = p.slice_ref
        if s is None:
            continue
        if s.state is not SliceState.RESERVED:
            raise StateError(f"cannot release {p.unit} on {p.capacity_id}: slice is {s.state.value}")
        capacities[p.capacity_id].release(s)


# -- combinations -------------------------------------------------------------


@dataclass
class CombinationTable:
    """Array-backed set of offer combinations.

    Each axis is one choice the gateway has to make: a placement unit, or a
    whole component when instances are bundled. ``choices[i, a]`` indexes
    ``options[a]`` for combination ``i``.
    """

    axes: list
    options: list[list[str]]
    choices: np.ndarray
    pairs: dict
    capacity_of: dict[str, str]
    qos: Optional[np.ndarray] = None
    reliability: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.choices.shape[0]

    def pairs_of(self, i: int) -> frozenset[OfferPair]:
        row = self.choices[i]
        out = []
        for a, axis in enumerate(self.axes):
            out.extend(self.pairs[(axis, self.options[a][row[a]])])
        return frozenset(out)

    def combination(self, i: int) -> OfferCombination:
        qos = None
        rel = None
        if self.qos is not None:
            qos = QoSVector(*(float(v) for v in self.qos[i]))
            rel = float(self.reliability[i])
        return OfferCombination(self.pairs_of(i), qos, rel)

    def content_key(self, i: int) -> int:
        return content_key(self.pairs_of(i))

    def combinations(self) -> list[OfferCombination]:
        return [self.combination(i) for i in range(len(self))]

    def attach_qos(self, capacities: Mapping[str, Capacity]) -> None:
        """Vectorised QoS/reliability over the distinct capacities of each row."""
        cap_ids = sorted({self.capacity_of[a] for opts in self.options for a in opts})
        col = {c: j for j, c in enumerate(cap_ids)}
        attrs = np.array(
            [
                [capacities[c].latency, capacities[c].price_per_hour, capacities[c].bandwidth, capacities[c].max_power]
                for c in cap_ids
            ],
            dtype=float,
        ).reshape(len(cap_ids), 4)
        rel = np.array([capacities[c].reliability for c in cap_ids], dtype=float)
        n = len(self)
        used = np.zeros((n, len(cap_ids)), dtype=bool)
        rows = np.arange(n)
        for a, opts in enumerate(self.options):
            opt_cols = np.array([col[self.capacity_of[ag]] for ag in opts], dtype=np.intp)
            used[rows, opt_cols[self.choices[:, a]]] = True
        usedf = used.astype(float)
        self.qos = usedf @ attrs
        counts = usedf.sum(axis=1)
        self.reliability = (usedf @ rel) / np.where(counts == 0, 1.0, counts)


def build_combination_table(
    pairs: Iterable[OfferPair],
    axes: Sequence,
    bundle_instances: bool = False,
    guard: int = DEFAULT_COMBINATION_GUARD,
) -> CombinationTable:
    """Group pairs by axis and lay out the full Cartesian product.

    With ``bundle_instances`` the axes are component ids and an agent's
    offer for a component carries all of its instances together.
    """
    grouped: dict = defaultdict(list)
    capacity_of: dict[str, str] = {}
    for p in pairs:
        axis = p.component_id if bundle_instances else p.unit
        grouped[(axis, p.agent_id)].append(p)
        capacity_of[p.agent_id] = p.capacity_id
    options: list[list[str]] = []
    for axis in axes:
        opts = sorted({agent for (ax, agent) in grouped if ax == axis})
        options.append(opts)
    if bundle_instances:
        for (axis, agent), ps in grouped.items():
            ps.sort(key=lambda p: p.instance_index)
    count = math.prod(len(o) for o in options) if options else 0
    if count > guard:
        raise CombinationOverflowError(f"{count} combinations exceed the guard of {guard}")
    if count == 0:
        choices = np.zeros((0, len(axes)), dtype=np.intp)
    else:
        grids = np.meshgrid(*[np.arange(len(o)) for o in options], indexing="ij")
        choices = np.stack([g.ravel() for g in grids], axis=1).astype(np.intp)
    return CombinationTable(list(axes), options, choices, dict(grouped), capacity_of)


def generate_combinations(
    pairs: Iterable[OfferPair],
    units: int | Sequence[tuple[str, int]],
    guard: int = DEFAULT_COMBINATION_GUARD,
    capacities: Optional[Mapping[str, Capacity]] = None,
) -> list[OfferCombination]:
    """Every combination covering each placement unit exactly once.

    ``units`` is either the list of unit keys or, for convenience, the unit
    count, in which case the units are taken from the pairs themselves (and
    no combination exists if fewer distinct units were offered).
    """
    pairs = list(pairs)
    if isinstance(units, int):
        offered = sorted({p.unit for p in pairs})
        if len(offered) < units:
            return []
        if len(offered) > units:
            raise ValueError(f"pairs cover {len(offered)} units but {units} were declared")
        axes = offered
    else:
        axes = list(units)
    table = build_combination_table(pairs, axes, guard=guard)
    if capacities is not None and len(table):
        table.attach_qos(capacities)
    return table.combinations()


def aggregate_offer_qos(combo: OfferCombination, capacities: Mapping[str, Capacity]) -> QoSVector:
    """Sum latency, price, bandwidth and max power over the distinct capacities used."""
    caps = [capacities[c] for c in combo.capacity_ids()]
    return QoSVector(
        latency=sum(c.latency for c in caps),
        price=sum(c.price_per_hour for c in caps),
        bandwidth=sum(c.bandwidth for c in caps),
        energy=sum(c.max_power for c in caps),
    )


def offer_reliability(combo: OfferCombination, capacities: Mapping[str, Capacity]) -> float:
    caps = [capacities[c] for c in combo.capacity_ids()]
    return sum(c.reliability for c in caps) / len(caps)
