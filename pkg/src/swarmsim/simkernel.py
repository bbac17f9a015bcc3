"""Discrete-event kernel plus the network-transfer and power models."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional

#: Seconds per kWh-watt conversion (1 kWh = 3.6e6 J).
JOULES_PER_KWH = 3.6e6

SUBMIT = "submit"
REQUEST_ARRIVAL = "request_arrival"
RESPONSE_ARRIVAL = "response_arrival"
RESUBMIT = "resubmit"
DEPLOY_STEP = "deploy_step"
TRANSFER_COMPLETE = "transfer_complete"
STORAGE_ATTACHED = "storage_attached"
TASK_COMPLETE = "task_complete"
APPLICATION_REJECTED = "application_rejected"


class KernelError(RuntimeError):
    pass


class SimulationError(RuntimeError):
    """A handler failed; ``log`` holds everything executed before the failure."""

    def __init__(self, message: str, log: "EventLog"):
        super().__init__(message)
        self.log = log


@dataclass(frozen=True)
class Event:
    time: float
    sequence: int
    kind: str
    payload: Mapping[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {"time": self.time, "seq": self.sequence, "kind": self.kind, "payload": dict(self.payload)},
            sort_keys=True,
        )


@dataclass(frozen=True)
class UtilisationInterval:
    node: str
    start: float
    end: float
    cpu_cores_busy: float


@dataclass
class EventLog:
    entries: list[Event] = field(default_factory=list)
    intervals: list[UtilisationInterval] = field(default_factory=list)

    def append(self, event: Event) -> None:
        if self.entries and event.time < self.entries[-1].time:
            raise KernelError("event log times must be non-decreasing")
        self.entries.append(event)

    def of_kind(self, *kinds: str) -> list[Event]:
        return [e for e in self.entries if e.kind in kinds]

    def to_ndjson(self) -> str:
        lines = [e.to_json() for e in self.entries]
        lines.extend(
            json.dumps(
                {"kind": "utilisation", "node": iv.node, "start": iv.start, "end": iv.end, "cpu": iv.cpu_cores_busy},
                sort_keys=True,
            )
            for iv in self.intervals
        )
        return "".join(line + "\n" for line in lines)

    def window(self) -> tuple[float, float]:
        """(first submission, last task completion) or (0, 0) when nothing was submitted.

        Without any completed task the window closes at the last executed event.
        """
        submits = [e.time for e in self.entries if e.kind == SUBMIT]
        if not submits:
            return 0.0, 0.0
        start = min(submits)
        done = [e.time for e in self.entries if e.kind == TASK_COMPLETE]
        end = max(done) if done else self.entries[-1].time
        return start, end


Handler = Callable[[Event], None]


class Kernel:
    """Single-threaded event loop ordered by ``(time, sequence)``."""

    def __init__(self, after_event: Optional[Callable[[Event], None]] = None):
        self.now = 0.0
        self._queue: list[tuple[float, int, Event]] = []
        self._sequence = 0
        self._handlers: dict[str, Handler] = {}
        self.after_event = after_event
        self.log = EventLog()

    def on(self, kind: str, handler: Handler) -> None:
        self._handlers[kind] = handler

    def schedule(self, at: float, kind: str, payload: Optional[Mapping[str, Any]] = None) -> Event:
        if at < self.now:
            raise KernelError(f"cannot schedule {kind} at {at} < now {self.now}")
        event = Event(float(at), self._sequence, kind, dict(payload or {}))
        self._sequence += 1
        heapq.heappush(self._queue, (event.time, event.sequence, event))
        return event

    def record_interval(self, node: str, start: float, end: float, cpu: float) -> None:
        self.log.intervals.append(UtilisationInterval(node, start, end, cpu))

    def run_until_idle(self) -> EventLog:
        while self._queue:
            _, _, event = heapq.heappop(self._queue)
            self.now = event.time
            self.log.append(event)
            handler = self._handlers.get(event.kind)
            try:
                if handler is not None:
                    handler(event)
                if self.after_event is not None:
                    self.after_event(event)
            except KernelError:
                raise
            except Exception as exc:
                raise SimulationError(f"{event.kind} at t={event.time}: {exc}", self.log) from exc
        return self.log


def transfer_duration(size_mb: float, path_bandwidth: float, path_latency: float) -> float:
    """Seconds to move ``size_mb`` megabytes over a path.

    Latency is in milliseconds and bandwidth in Mbps; the result is the
    one-way latency plus the serialisation time.
    """
    if path_bandwidth <= 0:
        raise ValueError("path bandwidth must be > 0")
    if size_mb < 0 or path_latency < 0:
        raise ValueError("size and latency must be >= 0")
    return path_latency / 1000.0 + size_mb * 8.0 / path_bandwidth


def path_between(a, b) -> tuple[float, float]:
    """Bottleneck bandwidth and summed latency between two endpoints."""
    return min(a.bandwidth, b.bandwidth), a.latency + b.latency


def node_power(capacity, utilisation: float) -> float:
    if not 0.0 <= utilisation <= 1.0:
        raise ValueError(f"utilisation {utilisation} outside [0, 1]")
    return capacity.idle_power + (capacity.max_power - capacity.idle_power) * utilisation


def _overlap(a0: float, a1: float, b0: float, b1: float) -> float:
    return max(0.0, min(a1, b1) - max(a0, b0))


def energy_until(capacity, intervals: Iterable[UtilisationInterval], start: float, t: float) -> float:
    """Energy in kWh drawn by one node over ``[start, t]``.

    Power is linear in utilisation, so overlapping task intervals simply add.
    """
    if t <= start:
        return 0.0
    joules = capacity.idle_power * (t - start)
    dynamic = capacity.max_power - capacity.idle_power
    for iv in intervals:
        joules += dynamic * iv.cpu_cores_busy / capacity.cpu_total * _overlap(iv.start, iv.end, start, t)
    return joules / JOULES_PER_KWH


def accumulate_energy(log: EventLog, capacities: Iterable) -> dict[str, float]:
    """Per-node kWh over the simulation window (first submission to last task)."""
    capacities = list(capacities)
    if not log.entries:
        return {}
    start, end = log.window()
    by_node: dict[str, list[UtilisationInterval]] = {c.id: [] for c in capacities}
    for iv in log.intervals:
        by_node.setdefault(iv.node, []).append(iv)
    return {c.id: energy_until(c, by_node[c.id], start, end) for c in capacities}
