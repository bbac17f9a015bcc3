"""
One deployment run, step by step
================================

Draws a random infrastructure of 8 capacities and 6 applications, deploys
every application with the latency-priority Cost strategy and prints what
happened along the way.
"""

import numpy as np

from swarmsim.metrics import compute_metrics, per_node_energy_series
from swarmsim.scenario import generate_scenario, preset_priorities
from swarmsim.simulation import simulate

SEED = 4

# The scenario: capacities are the machines behind the Resource Agents,
# applications are 3 compute components plus 1 storage component each.
capacities, applications = generate_scenario(SEED)
for cap in capacities:
    print(
        f"{cap.id}: {cap.cpu_total:3d} cores {cap.ram_total:3d} GB RAM "
        f"{cap.latency:3.0f} ms {cap.bandwidth:5.0f} Mbps {cap.price_per_hour:6.3f} EUR/h"
    )

app = applications[0]
print(f"\n{app.id} needs {len(app.unit_keys())} placement units:")
for comp in app.components:
    if comp.is_compute:
        print(f"  {comp.id}: {comp.instances} x ({comp.cpu} cpu, {comp.ram} GB, {comp.image_size} MB image)")
    else:
        print(f"  {comp.id}: {comp.storage_size} GB storage")

# %%
# Run the pipeline. All six applications are submitted at t=0; each one
# gets a random gateway agent that broadcasts the request and ranks the
# combinations it can assemble from the replies.
result = simulate(
    capacities,
    applications,
    method="cost",
    priorities=preset_priorities("latency"),
    seed=SEED,
)

for app_id, swarm in sorted(result.swarms.items()):
    hosts = sorted({m[0] for m in swarm.members})
    print(
        f"{app_id}: gateway {result.gateways[app_id]}, {result.offer_counts[app_id]} offers, "
        f"lead {swarm.lead_capacity}, hosts {', '.join(hosts)}"
    )
print("rejected:", result.rejected or "none")

# %%
# The event log drives every metric.
kinds, counts = np.unique([e.kind for e in result.log.entries], return_counts=True)
for kind, n in zip(kinds, counts):
    print(f"{kind:22s} {n}")

report = compute_metrics(result.log, result.capacities)
print(f"\nsimulation time      {report.simulation_time:8.3f} min")
print(f"total price          {report.total_price:8.3f} EUR")
print(f"avg deployment time  {report.avg_deployment_time:8.3f} min")
print(f"total energy         {report.total_energy:8.3f} kWh")

# %%
# Cumulative energy per node, sampled every five minutes. Nodes that host
# tasks climb faster once their tasks start.
series = per_node_energy_series(result.log, result.capacities, step=300)
times = next(iter(series.values()))[0]
print("\nnode    " + " ".join(f"{t / 60:6.1f}" for t in times))
for node, (_, kwh) in sorted(series.items()):
    print(f"{node}  " + " ".join(f"{v:6.3f}" for v in kwh))
