"""
dynamics.py

DESCRIPTION
Resampling coupling of two weight configurations.

A coupling holds base weights w, refresh weights w' and clocks U, all drawn
from their own substreams of (seed, replicate). At time t the configuration is

  w_v(t) = w'_v  if U_v <= t
           w_v   otherwise

so every vertex is refreshed independently with probability t and the
refreshed set only grows with t. Clocks live in (0, 1], which makes t = 0
return w and t = 1 return w' exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Sequence

import numpy as np

from lpp.distributions import WeightDistribution, sample_array
from lpp.lattice import Grid
from lpp.lpp_core import Configuration
from lpp.rng import FIELD_CLOCK, FIELD_OMEGA, FIELD_OMEGA_PRIME, substream, validate_seed


def _check_time(t: float) -> float:
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"Time must lie in [0, 1], got {t}")
    return t


@dataclass(frozen=True)
class DynamicCoupling:
    """The triple (w, w', U) of one replicate.

    Attributes:
        grid: Lattice the fields live on.
        dist: Law of w and w'.
        base: Weights at time 0.
        refresh: Independent weights reached at time 1.
        clocks: Refresh times in (0, 1].
        seed: Master seed of the run.
        replicate: Replicate index used in the substream keys.
    """

    grid: Grid
    dist: WeightDistribution
    base: np.ndarray
    refresh: np.ndarray
    clocks: np.ndarray
    seed: int
    replicate: int = 0

    def weights_at(self, t: float) -> np.ndarray:
        t = _check_time(t)
        return np.where(self.clocks <= t, self.refresh, self.base)


@dataclass(frozen=True)
class CouplingBatch:
    """Couplings of consecutive replicates stacked as (replicates x N) arrays."""

    grid: Grid
    dist: WeightDistribution
    base: np.ndarray
    refresh: np.ndarray
    clocks: np.ndarray
    seed: int
    replicates: np.ndarray

    def weights_at(self, t: float) -> np.ndarray:
        t = _check_time(t)
        return np.where(self.clocks <= t, self.refresh, self.base)

    def __len__(self) -> int:
        return len(self.replicates)


def _draw_fields(grid: Grid, dist: WeightDistribution, seed: int, replicate: int):
    base = sample_array(dist, substream(seed, replicate, FIELD_OMEGA), grid.size)
    refresh = sample_array(dist, substream(seed, replicate, FIELD_OMEGA_PRIME), grid.size)
    clocks = 1.0 - substream(seed, replicate, FIELD_CLOCK).random(grid.size)
    return base, refresh, clocks


def build_coupling(grid: Grid, dist: WeightDistribution, seed: int, replicate: int = 0) -> DynamicCoupling:
    seed = validate_seed(seed)
    base, refresh, clocks = _draw_fields(grid, dist, seed, int(replicate))
    return DynamicCoupling(grid, dist, base, refresh, clocks, seed, int(replicate))


def build_coupling_batch(
    grid: Grid, dist: WeightDistribution, seed: int, replicates: Sequence[int]
) -> CouplingBatch:
    """Stack the couplings of ``replicates``; row r equals build_coupling(..., replicate=r)."""

    seed = validate_seed(seed)
    reps = np.asarray(replicates, dtype=np.int64)
    fields = [_draw_fields(grid, dist, seed, int(r)) for r in reps]
    if fields:
        base, refresh, clocks = (np.stack(parts) for parts in zip(*fields))
    else:
        dtype = np.int64 if dist.integer_valued else np.float64
        base = refresh = np.empty((0, grid.size), dtype=dtype)
        clocks = np.empty((0, grid.size))
    return CouplingBatch(grid, dist, base, refresh, clocks, seed, reps)


def configuration_at(coupling: DynamicCoupling, t: float) -> Configuration:
    return Configuration(coupling.grid, coupling.weights_at(t))


def resampled_set(coupling: DynamicCoupling, t: float) -> FrozenSet[int]:
    """Flat indices of the vertices refreshed by time t."""

    t = _check_time(t)
    return frozenset(int(v) for v in np.flatnonzero(coupling.clocks <= t))


def resample_fraction(coupling: DynamicCoupling, t: float) -> float:
    t = _check_time(t)
    return float(np.mean(coupling.clocks <= t))
