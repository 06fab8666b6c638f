"""Seed plumbing.

Every random stream in the package is addressed by a master seed plus a path
of integer indices, e.g. ``(master, rep, iteration)``.  The mapping goes
through :class:`numpy.random.SeedSequence`, so a stream depends only on its
address and never on how many other streams were opened before it.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

SEED_ENV = "LIEBSCHER_SEED"
DEFAULT_SEED = 20190101


@dataclass(frozen=True)
class Seed:
    master: int
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master) < 2**64:
            raise ValueError("master seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "master", int(self.master))
        object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))

    def child(self, *index: int) -> "Seed":
        return Seed(self.master, self.stream + tuple(index))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.master, spawn_key=self.stream))
        )

    def to_json(self) -> dict:
        return {"master": self.master, "stream": list(self.stream)}


def as_seed(seed) -> Seed:
    if isinstance(seed, Seed):
        return seed
    if seed is None:
        return Seed(default_master())
    return Seed(int(seed))


def make_rng(seed, *index: int) -> np.random.Generator:
    return as_seed(seed).child(*index).generator()


def default_master() -> int:
    value = os.environ.get(SEED_ENV)
    return int(value) if value else DEFAULT_SEED
