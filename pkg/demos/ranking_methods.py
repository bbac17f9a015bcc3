"""
Cost function versus Borda count
================================

Ranks a handful of hand-written offers with both methods and with the two
ways of folding reliability into the score.
"""

import numpy as np

from swarmsim.model import PriorityVector
from swarmsim.ranking import (
    ADDITIVE,
    MULTIPLICATIVE,
    NONE,
    borda_scores,
    cost_scores,
    normalize_attribute,
)

# Each row is one offer: latency (ms), price (EUR/h), bandwidth (Mbps),
# energy proxy (W). Reliability is a separate column in [0, 1].
labels = ["fast-edge", "cheap-cloud", "big-pipe", "balanced"]
qos = np.array(
    [
        [18, 4.00, 300, 1200],
        [90, 0.05, 150, 2800],
        [60, 2.50, 1100, 2000],
        [35, 1.00, 600, 1500],
    ]
)
reliability = np.array([0.6, 0.95, 0.7, 0.85])

# %%
# Min-max scaling puts every attribute on [0, 1]. Bandwidth is flipped
# because more of it is better.
for j, name in enumerate(("latency", "price", "bandwidth", "energy")):
    print(f"{name:9s}", np.round(normalize_attribute(qos[:, j], invert=(name == "bandwidth")), 3))

# %%
# A latency-first user. Cost scores are lower-is-better, Borda points are
# higher-is-better.
latency_first = PriorityVector(latency=1.0, price=0.1, bandwidth=0.1, energy=0.1)
for mode in (NONE, ADDITIVE, MULTIPLICATIVE):
    c = cost_scores(qos, reliability, latency_first, mode)
    b = borda_scores(qos, reliability, latency_first, mode)
    print(f"\nreliability {mode}")
    print("  cost  ", "  ".join(f"{n} {v:.3f}" for n, v in zip(labels, c)), "->", labels[int(np.argmin(c))])
    print("  borda ", "  ".join(f"{n} {v:.2f}" for n, v in zip(labels, b)), "->", labels[int(np.argmax(b))])

# %%
# Borda only looks at positions, so a huge lead on one attribute counts
# the same as a small one, while the cost function keeps the distances.
# Compare the full orders for a price-first user.
price_first = PriorityVector(latency=0.1, price=1.0, bandwidth=0.1, energy=0.1)
c = cost_scores(qos, reliability, price_first)
b = borda_scores(qos, reliability, price_first)
print("\nprice-first cost order: ", [labels[i] for i in np.argsort(c, kind="stable")])
print("price-first borda order:", [labels[i] for i in np.argsort(-b, kind="stable")])
