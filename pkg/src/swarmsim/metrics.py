"""Report metrics and per-node energy series derived from an event log."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .simkernel import (
    STORAGE_ATTACHED,
    SUBMIT,
    TRANSFER_COMPLETE,
    EventLog,
    accumulate_energy,
    energy_until,
)

METRICS_HEADER = (
    "strategy",
    "method",
    "reliability_mode",
    "seed",
    "simulation_time_min",
    "total_price_eur",
    "avg_deployment_time_min",
    "total_energy_kwh",
)
ENERGY_HEADER = ("strategy", "method", "reliability_mode", "seed", "node_id", "time_s", "cumulative_kwh")


@dataclass(frozen=True)
class MetricsReport:
    simulation_time: float = 0.0
    total_price: float = 0.0
    avg_deployment_time: float = 0.0
    total_energy: float = 0.0
    per_application: Mapping[str, float] = field(default_factory=dict)
    per_node_energy: Mapping[str, float] = field(default_factory=dict)


def _index_capacities(capacities) -> dict:
    if isinstance(capacities, Mapping):
        return dict(capacities)
    return {c.id: c for c in capacities}


def compute_metrics(log: EventLog, capacities) -> MetricsReport:
    """Simulation time, prorated price, mean deployment time and energy.

    Times are reported in minutes. Each (application, capacity) pair is
    billed from its first allocated unit until the end of the simulation
    window. Deployment time is averaged per application first, then across
    applications.
    """
    caps = _index_capacities(capacities)
    submits = {e.payload["app"]: e.time for e in log.entries if e.kind == SUBMIT}
    if not submits:
        return MetricsReport()
    start, end = log.window()

    unit_delays: dict[str, list[float]] = defaultdict(list)
    first_alloc: dict[tuple[str, str], float] = {}
    for e in log.entries:
        if e.kind not in (TRANSFER_COMPLETE, STORAGE_ATTACHED):
            continue
        app = e.payload["app"]
        unit_delays[app].append(e.time - submits[app])
        key = (app, e.payload["capacity"])
        if key not in first_alloc:
            first_alloc[key] = e.time

    per_app = {app: float(np.mean(d)) / 60.0 for app, d in sorted(unit_delays.items())}
    avg = float(np.mean(list(per_app.values()))) if per_app else 0.0

    price = 0.0
    for (app, cap_id), t in sorted(first_alloc.items()):
        price += caps[cap_id].price_per_hour * max(0.0, end - t) / 3600.0

    energy = accumulate_energy(log, caps.values())
    return MetricsReport(
        simulation_time=(end - start) / 60.0,
        total_price=price,
        avg_deployment_time=avg,
        total_energy=float(sum(energy.values())),
        per_application=per_app,
        per_node_energy=energy,
    )


def per_node_energy_series(log: EventLog, capacities, step: float) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Cumulative kWh per node sampled every ``step`` seconds over the window.

    Sample times are relative to the first submission. When the window is
    not a multiple of ``step`` a final sample is added at its end, so the
    last value always equals the node's total.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    caps = _index_capacities(capacities)
    start, end = log.window() if log.entries else (0.0, 0.0)
    span = end - start
    n = int(np.floor(span / step + 1e-9))
    times = np.arange(n + 1, dtype=float) * step
    if span - times[-1] > 1e-9:
        times = np.append(times, span)
    by_node = defaultdict(list)
    for iv in log.intervals:
        by_node[iv.node].append(iv)
    series = {}
    for cid, cap in caps.items():
        values = np.array([energy_until(cap, by_node[cid], start, start + t) for t in times])
        series[cid] = (times.copy(), values)
    return series


def _fmt(v: float) -> str:
    return format(float(v), ".10g")


def metrics_row(strategy: str, method: str, reliability_mode: str, seed: int, report: MetricsReport) -> list[str]:
    return [
        strategy,
        method,
        reliability_mode,
        str(seed),
        _fmt(report.simulation_time),
        _fmt(report.total_price),
        _fmt(report.avg_deployment_time),
        _fmt(report.total_energy),
    ]


def metrics_csv(rows: Iterable[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def energy_rows(strategy: str, method: str, reliability_mode: str, seed: int, series) -> list[list[str]]:
    rows = []
    for node in sorted(series):
        times, values = series[node]
        for t, v in zip(times, values):
            rows.append([strategy, method, reliability_mode, str(seed), node, _fmt(t), _fmt(v)])
    return rows


def energy_csv(rows: Iterable[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ENERGY_HEADER)
    writer.writerows(rows)
    return buf.getvalue()
