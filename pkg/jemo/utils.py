from enum import Enum
from typing import List

import numpy as np


class StringEnum(Enum):
    def __str__(self) -> str:
        return str(self.value)


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Derive `count` independent 64-bit seeds from a master seed.

    Child i does not depend on `count`, so a longer list extends a shorter one.
    """
    states = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    return [int(state) for state in states]


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=stream))
