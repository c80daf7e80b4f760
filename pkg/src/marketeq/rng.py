"""Deterministic, splittable random streams built on the Philox counter-based generator.

Every stochastic component draws from a stream addressed by
(master seed, iteration, coordinate, role).  The address maps to a disjoint
Philox key/counter block, so draws are reproducible under any evaluation
order or degree of parallelism.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_MASK64 = (1 << 64) - 1

# Role tags double as key material; add new roles here rather than reusing one.
ROLE_CODES = {
    "price": 0,
    "utility": 1,
    "values": 2,
    "budgets": 3,
    "noise": 4,
}


@dataclass(frozen=True)
class RngStream:
    """Family of independent generators keyed by (seed, iteration, coordinate, role)."""

    master_seed: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise DomainError(f"master seed must be a 64-bit unsigned integer, got {self.master_seed}")

    def generator(self, iteration: int, coordinate: int, role: str) -> np.random.Generator:
        """Return the generator owned by one (iteration, coordinate, role) cell.

        Identical arguments always yield an identical draw sequence; distinct
        arguments yield streams in disjoint Philox counter blocks.
        """
        if role not in ROLE_CODES:
            raise DomainError(f"unknown rng role {role!r}")
        if iteration < 0 or coordinate < 0:
            raise DomainError("iteration and coordinate must be nonnegative")
        key = np.array([self.master_seed & _MASK64, ROLE_CODES[role]], dtype=np.uint64)
        # The two high counter words address the cell; draws advance the low words.
        counter = np.array([0, 0, coordinate & _MASK64, iteration & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))
