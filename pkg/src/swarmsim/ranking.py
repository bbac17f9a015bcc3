"""Offer ranking: min-max cost function, Borda count and a random baseline.

The array functions (:func:`cost_scores`, :func:`borda_scores`) work on a
QoS matrix with columns ``latency, price, bandwidth, energy`` and are what
the simulator calls on large combination tables. The list-based
``*_rank`` functions wrap them for :class:`OfferCombination` inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .model import PriorityVector
from .offers import OfferCombination

COST = "cost"
BORDA = "borda"
RANDOM = "random"
METHODS = (COST, BORDA, RANDOM)

NONE = "none"
ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"
RELIABILITY_MODES = (NONE, ADDITIVE, MULTIPLICATIVE)

# Column order of QoS matrices, and whether a larger raw value is preferable.
QOS_COLUMNS = ("latency", "price", "bandwidth", "energy")
HIGHER_IS_BETTER = (False, False, True, False)


@dataclass(frozen=True)
class RankedOffers:
    entries: list[tuple[OfferCombination, float]]
    method: str
    reliability_mode: str = NONE

    @property
    def best(self) -> OfferCombination:
        return self.entries[0][0]

    def __len__(self) -> int:
        return len(self.entries)


def normalize_attribute(values: Sequence[float], invert: bool = False) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant column maps to all zeros.

    ``invert`` flips the scaled values (``1 - v``) for attributes where a
    larger raw value is preferable. The degenerate column stays 0 after
    inversion as well, so it never influences the ranking.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot normalise an empty attribute")
    if not np.all(np.isfinite(v)):
        raise ValueError("attribute values must be finite")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    out = (v - lo) / (hi - lo)
    return 1.0 - out if invert else out


def _check_mode(mode: str) -> None:
    if mode not in RELIABILITY_MODES:
        raise ValueError(f"unknown reliability mode {mode!r}")


def cost_scores(
    qos: np.ndarray,
    reliability: np.ndarray,
    priorities: PriorityVector,
    mode: str = NONE,
) -> np.ndarray:
    """Weighted normalised cost per offer; lower is better."""
    _check_mode(mode)
    qos = np.asarray(qos, dtype=float)
    if qos.shape[0] == 0:
        raise ValueError("no offers to rank")
    total = np.zeros(qos.shape[0])
    for j, weight in enumerate(priorities.as_tuple()):
        total += weight * normalize_attribute(qos[:, j], invert=HIGHER_IS_BETTER[j])
    rel = np.asarray(reliability, dtype=float)
    if mode == ADDITIVE:
        return total - rel
    if mode == MULTIPLICATIVE:
        return (1.0 - rel) * total
    return total


def positional_scores(values: np.ndarray, higher_is_better: bool) -> np.ndarray:
    """Borda points for one attribute: ``n-1`` for the best down to 0.

    Tied offers all get the points of the best position in their group,
    i.e. ``n - 1 - (number of strictly better offers)``.
    """
    v = np.asarray(values, dtype=float)
    key = -v if higher_is_better else v
    n = key.size
    strictly_better = np.searchsorted(np.sort(key), key, side="left")
    return (n - 1 - strictly_better).astype(float)


def borda_scores(
    qos: np.ndarray,
    reliability: np.ndarray,
    priorities: PriorityVector,
    mode: str = NONE,
) -> np.ndarray:
    """Weighted Borda score per offer; higher is better."""
    _check_mode(mode)
    qos = np.asarray(qos, dtype=float)
    if qos.shape[0] == 0:
        raise ValueError("no offers to rank")
    total = np.zeros(qos.shape[0])
    for j, weight in enumerate(priorities.as_tuple()):
        total += weight * positional_scores(qos[:, j], HIGHER_IS_BETTER[j])
    rel = np.asarray(reliability, dtype=float)
    if mode == ADDITIVE:
        return positional_scores(rel, higher_is_better=True) + total
    if mode == MULTIPLICATIVE:
        return rel * total
    return total


def order_by_score(
    scores: np.ndarray,
    content_key: Callable[[int], int],
    descending: bool = False,
) -> np.ndarray:
    """Indices best-first; exact score ties fall back to content key, then index.

    ``content_key`` is only evaluated for offers whose score is shared.
    """
    s = -np.asarray(scores, dtype=float) if descending else np.asarray(scores, dtype=float)
    n = s.size
    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    tied = counts[inverse] > 1
    keys = np.zeros(n, dtype=np.uint64)
    for i in np.flatnonzero(tied):
        keys[i] = content_key(int(i))
    return np.lexsort((np.arange(n), keys, s))


def _qos_matrix(offers: Sequence[OfferCombination]) -> tuple[np.ndarray, np.ndarray]:
    if not offers:
        raise ValueError("no offers to rank")
    for o in offers:
        if o.qos is None or o.reliability is None:
            raise ValueError("offers must carry aggregated QoS and reliability")
    qos = np.array([o.qos.as_tuple() for o in offers], dtype=float)
    rel = np.array([o.reliability for o in offers], dtype=float)
    return qos, rel


def _ranked(offers, scores, order, method, mode) -> RankedOffers:
    return RankedOffers([(offers[i], float(scores[i])) for i in order], method, mode)


def cost_rank(offers: Sequence[OfferCombination], priorities: PriorityVector, reliability_mode: str = NONE) -> RankedOffers:
    qos, rel = _qos_matrix(offers)
    scores = cost_scores(qos, rel, priorities, reliability_mode)
    order = order_by_score(scores, lambda i: offers[i].content_key())
    return _ranked(offers, scores, order, COST, reliability_mode)


def borda_rank(offers: Sequence[OfferCombination], priorities: PriorityVector, reliability_mode: str = NONE) -> RankedOffers:
    qos, rel = _qos_matrix(offers)
    scores = borda_scores(qos, rel, priorities, reliability_mode)
    order = order_by_score(scores, lambda i: offers[i].content_key(), descending=True)
    return _ranked(offers, scores, order, BORDA, reliability_mode)


def random_rank(offers: Sequence, rng: np.random.Generator) -> RankedOffers:
    """Uniform random permutation; the score is the drawn position."""
    if not offers:
        raise ValueError("no offers to rank")
    order = rng.permutation(len(offers))
    return RankedOffers([(offers[i], float(pos)) for pos, i in enumerate(order)], RANDOM, NONE)


def rank_indices(
    method: str,
    qos: Optional[np.ndarray],
    reliability: Optional[np.ndarray],
    priorities: PriorityVector,
    mode: str,
    content_key: Callable[[int], int],
    rng: Optional[np.random.Generator] = None,
    n: Optional[int] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Best-first order and per-offer scores for an array-backed offer set."""
    if method == COST:
        scores = cost_scores(qos, reliability, priorities, mode)
        return order_by_score(scores, content_key), scores
    if method == BORDA:
        scores = borda_scores(qos, reliability, priorities, mode)
        return order_by_score(scores, content_key, descending=True), scores
    if method == RANDOM:
        count = n if n is not None else qos.shape[0]
        if count == 0:
            raise ValueError("no offers to rank")
        order = rng.permutation(count)
        scores = np.empty(count)
        scores[order] = np.arange(count, dtype=float)
        return order, scores
    raise ValueError(f"unknown ranking method {method!r}")
