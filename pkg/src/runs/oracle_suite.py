"""
oracle_suite.py

DESCRIPTION
Equivalence of the batch dynamic-programming kernels with brute-force path
enumeration on small grids.

For every (law, d, n) a block of random configurations is drawn from its own
substream, and every operation is compared for every vertex:

  passage        T
  geodesic_set   vertices on some maximising path (mismatch count)
  avoid          best path sum avoiding v, and whether one exists
  threshold      k_v = max(0, avoid - through)
  resampled      T with the weight at v replaced by a fresh draw

Integer-valued laws must agree exactly; continuous laws within REL_TOL of the
configuration's passage time.
"""

from __future__ import annotations

import logging
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from lpp.distributions import WeightDistribution, sample_array
from lpp.lattice import Grid, path_matrix
from lpp.lpp_core import batch_avoid, batch_passage, batch_threshold, tie_tolerance
from lpp.rng import FIELD_CONFIGURATION, FIELD_INNER_DRAWS, substream

from runs.run_config import OracleConfig

LOGGER = logging.getLogger("lpp.runs.oracle_suite")

REL_TOL = 1e-12

OPERATIONS = ("passage", "geodesic_set", "avoid", "threshold", "resampled")

ORACLE_COLUMNS = [
    "dist",
    "d",
    "n",
    "operation",
    "configs",
    "comparisons",
    "max_abs_error",
    "max_rel_error",
    "mismatches",
    "passed",
]


def incidence_matrix(grid: Grid) -> np.ndarray:
    """Boolean (paths x N) matrix: entry (p, v) is True when path p visits v."""

    paths = path_matrix(grid)
    inc = np.zeros((len(paths), grid.size), dtype=bool)
    inc[np.arange(len(paths))[:, None], paths] = True
    return inc


class _Tally:
    """Running discrepancy of one operation."""

    def __init__(self) -> None:
        self.comparisons = 0
        self.max_abs = 0.0
        self.max_rel = 0.0
        self.mismatches = 0

    def values(self, got: np.ndarray, expected: np.ndarray, scale: np.ndarray, exact: bool) -> None:
        err = np.abs(np.asarray(got, dtype=float) - np.asarray(expected, dtype=float))
        rel = err / np.maximum(np.abs(np.asarray(scale, dtype=float)), np.finfo(float).tiny)
        self.comparisons += err.size
        if err.size:
            self.max_abs = max(self.max_abs, float(err.max()))
            self.max_rel = max(self.max_rel, float(rel.max()))
        bad = err > 0 if exact else rel > REL_TOL
        self.mismatches += int(np.count_nonzero(bad))

    def flags(self, got: np.ndarray, expected: np.ndarray) -> None:
        got = np.asarray(got, dtype=bool)
        expected = np.asarray(expected, dtype=bool)
        self.comparisons += got.size
        self.mismatches += int(np.count_nonzero(got != expected))


def _draw_configurations(dist: WeightDistribution, grid: Grid, seed: int, law: int, configs: int) -> np.ndarray:
    stream = substream(seed, FIELD_CONFIGURATION, law, grid.d, grid.n)
    return sample_array(dist, stream, configs * grid.size).reshape(configs, grid.size)


def compare_grid(
    dist: WeightDistribution, grid: Grid, seed: int, law: int, configs: int
) -> Dict[str, _Tally]:
    w = _draw_configurations(dist, grid, seed, law, configs)
    exact = dist.integer_valued
    inc = incidence_matrix(grid)
    dtype = np.int64 if exact else np.float64
    sums = w.astype(dtype) @ inc.T.astype(dtype)
    best = sums.max(axis=1)
    scale = np.maximum(np.abs(best.astype(float)), 1.0)
    tally = {op: _Tally() for op in OPERATIONS}

    passage = batch_passage(grid, w)
    tally["passage"].values(passage.T, best, scale, exact)

    tol = tie_tolerance(best, exact)
    near = sums >= (best - tol)[:, None]
    brute_mask = (near[:, :, None] & inc[None, :, :]).any(axis=1)
    tally["geodesic_set"].flags(passage.geodesic, brute_mask)

    rows = np.arange(configs)
    fresh = sample_array(dist, substream(seed, FIELD_INNER_DRAWS, law, grid.d, grid.n), configs * grid.size)
    fresh = fresh.reshape(configs, grid.size)
    for v in range(grid.size):
        on = inc[:, v]
        vertices = np.full(configs, v, dtype=np.int64)

        through_brute = np.where(on[None, :], sums, sums.min() - 1).max(axis=1) - w[:, v]
        exists_brute = bool((~on).any())
        avoid_brute = np.where(~on[None, :], sums, sums.min() - 1).max(axis=1) if exists_brute else None

        avoid, exists = batch_avoid(grid, w, vertices)
        tally["avoid"].flags(exists, np.full(configs, exists_brute))
        if exists_brute:
            tally["avoid"].values(avoid, avoid_brute, scale, exact)

        k = batch_threshold(grid, w, vertices, passage=passage)
        k_brute = np.maximum(avoid_brute - through_brute, 0) if exists_brute else np.zeros(configs, dtype=w.dtype)
        tally["threshold"].values(k, k_brute, scale, exact)

        x = fresh[:, v]
        through = passage.forward[rows, v] + passage.backward[rows, v] - 2 * w[rows, v]
        resampled = np.where(exists, np.maximum(avoid, through + x), through + x)
        swapped = sums + np.outer(x - w[:, v], on.astype(w.dtype))
        tally["resampled"].values(resampled, swapped.max(axis=1), np.maximum(scale, np.abs(x)), exact)
    return tally


def run_oracle_suite(config: OracleConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    rows: List[Dict[str, Any]] = []
    for law, dist in enumerate(config.dists):
        for d, n in config.grids:
            grid = Grid(n, d)
            tally = compare_grid(dist, grid, config.seed, law, config.configs)
            for op in OPERATIONS:
                t = tally[op]
                rows.append(
                    {
                        "dist": dist.spec,
                        "d": d,
                        "n": n,
                        "operation": op,
                        "configs": config.configs,
                        "comparisons": t.comparisons,
                        "max_abs_error": t.max_abs,
                        "max_rel_error": t.max_rel,
                        "mismatches": t.mismatches,
                        "passed": t.mismatches == 0,
                    }
                )
            LOGGER.info(
                "ORACLE_DONE dist=%s d=%s n=%s mismatches=%s",
                dist.spec,
                d,
                n,
                sum(tally[op].mismatches for op in OPERATIONS),
            )
    frame = pd.DataFrame(rows, columns=ORACLE_COLUMNS)
    passed = bool(frame["passed"].all()) if len(frame) else True
    return frame, {
        "command": "oracle",
        "distributions": [dist.spec for dist in config.dists],
        "grids": [list(g) for g in config.grids],
        "configs": config.configs,
        "seed": config.seed,
        "rel_tol": REL_TOL,
        "passed": passed,
        "failures": frame.loc[~frame["passed"], ["dist", "d", "n", "operation"]].to_dict(orient="records"),
    }
