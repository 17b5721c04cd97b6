"""
rng.py

Counter-based random substreams.

Every random field in a run is a pure function of (master seed, key...), where
the key names the replicate and the field. Values inside a field are produced
in vertex-index order by a Philox counter generator, so the value at vertex v
does not depend on evaluation order, chunking or thread count.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

# Field tags of the substream key. Never renumber: stored seeds depend on them.
FIELD_OMEGA = 0
FIELD_OMEGA_PRIME = 1
FIELD_CLOCK = 2
FIELD_VERTEX_SAMPLE = 3
FIELD_INNER_DRAWS = 4
FIELD_CONFIGURATION = 5
FIELD_PILOT = 6

MAX_SEED = 2**64 - 1


def validate_seed(seed: int) -> int:
    """Return the seed as int, rejecting values outside the u64 range."""

    seed = int(seed)
    if seed < 0 or seed > MAX_SEED:
        raise ValueError(f"Seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the Philox generator for (seed, key...)."""

    seq = np.random.SeedSequence(entropy=validate_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(seed: int, *key: int) -> int:
    """Derive a child u64 seed, used to record per-cell and pilot seeds."""

    seq = np.random.SeedSequence(entropy=validate_seed(seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def replicate_streams(seed: int, replicates: Iterable[int], field: int) -> list[np.random.Generator]:
    return [substream(seed, int(r), field) for r in replicates]
