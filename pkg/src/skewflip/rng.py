"""Counter-based random substreams.

Every draw in the package comes from a Philox generator keyed through
:class:`numpy.random.SeedSequence` with
``entropy=seed`` and ``spawn_key=(path_index, crc32(role), *extra)``.
The key depends only on those integers, never on processing order, so an
ensemble is reproducible under any thread schedule and the drivers ``B``,
``W``, ``D`` of one path are independent.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def role_code(role: str) -> int:
    return zlib.crc32(role.encode("utf-8"))


def substream(seed: int, path_index: int, role: str, *extra: int) -> np.random.Generator:
    if seed < 0 or path_index < 0:
        raise ValueError("seed and path_index must be non-negative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(path_index, role_code(role), *extra))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Streams:
    """Substream factory bound to one ``(seed, path_index)``."""

    seed: int
    path_index: int

    def __call__(self, role: str, *extra: int) -> np.random.Generator:
        return substream(self.seed, self.path_index, role, *extra)
