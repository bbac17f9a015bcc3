"""One deterministic run of the full deployment pipeline for a scenario."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import rng as rngmod
from .deployment import (
    ImageRegistry,
    Swarm,
    complete_unit,
    deploy_application,
    run_workload,
    select_lead_resource,
)
from .model import Application, Capacity, PriorityVector, ResourceAgent, SliceState, StateError, assign_agents
from .offers import (
    DEFAULT_COMBINATION_GUARD,
    OfferCombination,
    OfferPair,
    broadcast_request,
    build_combination_table,
    classify_coverage,
    first_fit_match,
    message_delay,
    release_reservations,
    select_gateway,
)
from .ranking import NONE, RANDOM, rank_indices
from .simkernel import (
    APPLICATION_REJECTED,
    REQUEST_ARRIVAL,
    RESPONSE_ARRIVAL,
    RESUBMIT,
    STORAGE_ATTACHED,
    SUBMIT,
    TRANSFER_COMPLETE,
    Event,
    EventLog,
    Kernel,
)

log = logging.getLogger(__name__)

#: ``availability(app_id, rank, offer) -> bool``; rank is 0-based.
AvailabilityFn = Callable[[str, int, OfferCombination], bool]


@dataclass
class _Round:
    app: Application
    gateway: ResourceAgent
    responses: dict[str, list[OfferPair]] = field(default_factory=dict)
    coverage: dict[str, str] = field(default_factory=dict)
    pairs_by_unit: dict = field(default_factory=dict)
    swarm: Optional[Swarm] = None
    received: int = 0
    attempt: int = 0
    collecting: bool = True
    epoch: int = 0


@dataclass
class SimulationResult:
    log: EventLog
    capacities: dict[str, Capacity]
    applications: list[Application]
    agents: list[ResourceAgent]
    swarms: dict[str, Swarm]
    rejected: list[str]
    gateways: dict[str, str]
    offer_counts: dict[str, int]


class Simulation:
    """Wire offers, ranking and deployment onto one kernel.

    ``priorities`` overrides every application's own priority vector when
    given. With ``bundle_instances`` (the default) the gateway combines
    offers per component, so all instances of a component land on the
    agent that offered it; otherwise every placement unit is a separate
    choice.
    """

    def __init__(
        self,
        capacities: Sequence[Capacity],
        applications: Sequence[Application],
        *,
        method: str = "cost",
        priorities: Optional[PriorityVector] = None,
        reliability_mode: str = NONE,
        seed: int = 0,
        registry: Optional[ImageRegistry] = None,
        combination_guard: int = DEFAULT_COMBINATION_GUARD,
        availability: Optional[AvailabilityFn] = None,
        bundle_instances: bool = True,
        check_invariants: bool = False,
    ):
        if not capacities:
            raise ValueError("scenario needs at least one capacity")
        self.capacities = {c.id: c.fresh_copy() for c in capacities}
        if len(self.capacities) != len(capacities):
            raise ValueError("capacity ids must be unique")
        self.applications = [a if priorities is None else a.with_priorities(priorities) for a in applications]
        if len({a.id for a in self.applications}) != len(self.applications):
            raise ValueError("application ids must be unique")
        self.method = method
        self.reliability_mode = reliability_mode
        self.registry = registry or ImageRegistry()
        self.guard = combination_guard
        self.availability = availability
        self.bundle_instances = bundle_instances

        self.agents = assign_agents(list(self.capacities.values()), rngmod.substream(seed, rngmod.SORT_DIRECTION))
        self.agent_by_id = {a.id: a for a in self.agents}
        self._gateway_rng = rngmod.substream(seed, rngmod.GATEWAY)
        self._rank_rng = rngmod.substream(seed, rngmod.RANDOM_RANK)

        self.kernel = Kernel(after_event=self._check if check_invariants else None)
        self.kernel.on(SUBMIT, self._on_submit)
        self.kernel.on(REQUEST_ARRIVAL, self._on_request)
        self.kernel.on(RESPONSE_ARRIVAL, self._on_response)
        self.kernel.on(RESUBMIT, self._on_resubmit)
        self.kernel.on(TRANSFER_COMPLETE, self._on_unit_ready)
        self.kernel.on(STORAGE_ATTACHED, self._on_unit_ready)

        self._apps = {a.id: a for a in self.applications}
        self._rounds: dict[str, _Round] = {}
        self.rejected: list[str] = []
        self.offer_counts: dict[str, int] = {}
        # Apps without full coverage wait for another deployment to free
        # capacity; _epoch counts successful deployments.
        self._epoch = 0
        self._waiting: dict[str, int] = {}

    # -- handlers ---------------------------------------------------------

    def _on_submit(self, event: Event) -> None:
        app = self._apps[event.payload["app"]]
        gateway = self.agent_by_id[select_gateway(self.agents, self._gateway_rng)]
        self._rounds[app.id] = _Round(app, gateway, epoch=self._epoch)
        broadcast_request(self.kernel, gateway, self.agents, self.capacities, app)

    def _on_resubmit(self, event: Event) -> None:
        rnd = self._rounds[event.payload["app"]]
        rnd.responses.clear()
        rnd.coverage.clear()
        rnd.received = 0
        rnd.attempt = event.payload["attempt"]
        rnd.epoch = self._epoch
        broadcast_request(self.kernel, rnd.gateway, self.agents, self.capacities, rnd.app)

    def _on_request(self, event: Event) -> None:
        rnd = self._rounds[event.payload["app"]]
        agent = self.agent_by_id[event.payload["agent"]]
        capacity = self.capacities[agent.capacity_id]
        pairs = first_fit_match(agent, rnd.app, capacity)
        rnd.responses[agent.id] = pairs
        coverage = classify_coverage(pairs, rnd.app)
        rnd.coverage[agent.id] = coverage
        delay = message_delay(capacity, self.capacities[rnd.gateway.capacity_id])
        self.kernel.schedule(
            self.kernel.now + delay,
            RESPONSE_ARRIVAL,
            {"app": rnd.app.id, "agent": agent.id, "pairs": len(pairs), "coverage": coverage},
        )

    def _on_response(self, event: Event) -> None:
        rnd = self._rounds[event.payload["app"]]
        rnd.received += 1
        if rnd.received == len(self.agents):
            rnd.collecting = False
            self._select_and_deploy(rnd)
            self._wake_waiting()

    def _wake_waiting(self) -> None:
        for app_id, epoch in sorted(self._waiting.items()):
            if epoch < self._epoch:
                del self._waiting[app_id]
                rnd = self._rounds[app_id]
                rnd.collecting = True
                self.kernel.schedule(self.kernel.now, RESUBMIT, {"app": app_id, "attempt": rnd.attempt + 1})
        if self._waiting and not any(r.collecting for r in self._rounds.values()):
            for app_id in sorted(self._waiting):
                self._reject(self._rounds[app_id].app, [], "no full-coverage combination")
            self._waiting.clear()

    def _select_and_deploy(self, rnd: _Round) -> None:
        app = rnd.app
        all_pairs = [p for agent in self.agents for p in rnd.responses.get(agent.id, [])]
        if self.bundle_instances:
            axes = [c.id for c in app.components]
        else:
            axes = app.unit_keys()
        table = build_combination_table(all_pairs, axes, self.bundle_instances, self.guard)
        self.offer_counts[app.id] = len(table)
        if len(table) == 0:
            release_reservations(all_pairs, self.capacities)
            self._waiting[app.id] = self._rounds[app.id].epoch
            return
        if self.method != RANDOM:
            table.attach_qos(self.capacities)
        order, _ = rank_indices(
            self.method,
            table.qos,
            table.reliability,
            app.priorities,
            self.reliability_mode,
            table.content_key,
            rng=self._rank_rng,
            n=len(table),
        )
        winner = None
        for rank, idx in enumerate(order):
            offer = table.combination(int(idx))
            if self.availability is None or self.availability(app.id, rank, offer):
                winner = offer
                break
        if winner is None:
            self._reject(app, all_pairs, "no available offer")
            return
        losing = [p for p in all_pairs if p not in winner.pairs]
        release_reservations(losing, self.capacities)
        lead = select_lead_resource(winner, self.capacities)
        rnd.pairs_by_unit = {p.unit: p for p in winner.pairs}
        rnd.swarm = deploy_application(self.kernel, app, winner, lead, self.registry, self.capacities)
        self._epoch += 1

    def _reject(self, app: Application, pairs: list[OfferPair], reason: str) -> None:
        if pairs:
            release_reservations(pairs, self.capacities)
        self.rejected.append(app.id)
        log.info("application %s rejected: %s", app.id, reason)
        self.kernel.schedule(self.kernel.now, APPLICATION_REJECTED, {"app": app.id, "reason": reason})

    def _on_unit_ready(self, event: Event) -> None:
        rnd = self._rounds[event.payload["app"]]
        complete_unit(event, rnd.swarm, rnd.pairs_by_unit)
        if event.kind == TRANSFER_COMPLETE:
            p = event.payload
            run_workload(self.kernel, rnd.swarm, (p["capacity"], p["component"], p["instance"]), p["cpu"])

    def _check(self, event: Event) -> None:
        for cap in self.capacities.values():
            cap.check_conservation()

    # -- driver -----------------------------------------------------------

    def run(self) -> SimulationResult:
        for app in self.applications:
            self.kernel.schedule(app.submit_time, SUBMIT, {"app": app.id})
        result_log = self.kernel.run_until_idle()
        for cap in self.capacities.values():
            for s in cap.slices:
                if s.state in (SliceState.RESERVED, SliceState.ASSIGNED):
                    raise StateError(f"slice {s.bound_component} on {cap.id} left {s.state.value}")
        return SimulationResult(
            log=result_log,
            capacities=self.capacities,
            applications=self.applications,
            agents=self.agents,
            swarms={k: r.swarm for k, r in self._rounds.items() if r.swarm is not None},
            rejected=list(self.rejected),
            gateways={k: r.gateway.id for k, r in self._rounds.items()},
            offer_counts=dict(self.offer_counts),
        )


def simulate(
    capacities: Sequence[Capacity],
    applications: Sequence[Application],
    **kwargs,
) -> SimulationResult:
    return Simulation(capacities, applications, **kwargs).run()
