"""
Comparing selection strategies across seeds
===========================================

Runs the six Cost-based strategies (four single-attribute priorities,
equal weights, and a random pick) on 20 random scenarios and summarises
each metric per strategy. The same scenario is reused across strategies
for a given seed, so differences come from the selection alone.
"""

import numpy as np

from swarmsim.cli import expand_strategies, run_strategy
from swarmsim.scenario import PROFILE_NAMES, generate_scenario

SEEDS = range(20)
strategies = expand_strategies(PROFILE_NAMES, ["cost"])

# rows: strategy, columns: seed
names = [s.profile for s in strategies]
sim_time = np.zeros((len(strategies), len(SEEDS)))
price = np.zeros_like(sim_time)
deploy = np.zeros_like(sim_time)
energy = np.zeros_like(sim_time)

for j, seed in enumerate(SEEDS):
    capacities, applications = generate_scenario(seed)
    for i, strategy in enumerate(strategies):
        _, report = run_strategy(capacities, applications, strategy, seed)
        sim_time[i, j] = report.simulation_time
        price[i, j] = report.total_price
        deploy[i, j] = report.avg_deployment_time
        energy[i, j] = report.total_energy

print(f"{'strategy':10s} {'sim (min)':>10s} {'price (EUR)':>12s} {'deploy (min)':>13s} {'energy (kWh)':>13s}")
for i, name in enumerate(names):
    print(
        f"{name:10s} {sim_time[i].mean():10.2f} {price[i].mean():12.2f} "
        f"{deploy[i].mean():13.3f} {energy[i].mean():13.2f}"
    )

# %%
# Means hide how often a strategy actually wins. Count, per metric, how
# many seeds each strategy had the best value.
for label, table in (("price", price), ("deploy", deploy), ("energy", energy)):
    wins = np.bincount(table.argmin(axis=0), minlength=len(names))
    print(f"\nlowest {label}: " + ", ".join(f"{n} {w}" for n, w in zip(names, wins) if w))

# %%
# The two orderings the simulator is expected to reproduce.
p, r = names.index("price"), names.index("random")
b, l = names.index("bandwidth"), names.index("latency")
print(f"\nprice-priority cheaper than or equal to random in {np.mean(price[p] <= price[r]):.0%} of seeds")
print(f"bandwidth-priority deploys faster than latency-priority in {np.mean(deploy[b] < deploy[l]):.0%} of seeds")
