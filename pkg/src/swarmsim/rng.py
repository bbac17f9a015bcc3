"""Per-purpose random substreams derived from one scenario seed.

Each consumer (gateway choice, scenario generation, random ranking, agent
sort directions) draws from its own stream, so adding draws in one place
never shifts the numbers seen by another.
"""

import zlib

import numpy as np

GATEWAY = "gateway"
SCENARIO = "scenario"
RANDOM_RANK = "random-rank"
SORT_DIRECTION = "sort-direction"


def substream(seed: int, purpose: str) -> np.random.Generator:
    key = zlib.crc32(purpose.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), key])))
