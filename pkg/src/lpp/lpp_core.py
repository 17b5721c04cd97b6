"""
lpp_core.py

DESCRIPTION
Passage-time dynamic programme on the directed cube.

  Fwd(v) = w_v + max over in-neighbours u of Fwd(u)       (origin: w_origin)
  Bwd(v) = w_v + max over out-neighbours u of Bwd(u)      (target: w_target)
  T      = Fwd(target) = Bwd(origin)
  pi     = {v : Fwd(v) + Bwd(v) - w_v >= T - tol}

All kernels work on a (replicates x N) weight matrix and sweep layer by layer,
gathering the d neighbours of a whole layer at once. Excluded vertices are
handled with a reachability mask; weights are non-negative, so masked
neighbours are replaced by 0 inside the maximum and never reach the result.

For a vertex v with S_v = Fwd(v) + Bwd(v) - 2 w_v (best sum of the other
weights on a path through v) and A_v the best path sum avoiding v:
  k_v         = max(0, A_v - S_v)       (0 when no avoiding path exists)
  T^{v -> x}  = max(A_v, S_v + x)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple, Union

import numpy as np

from lpp.lattice import DEFAULT_PATH_CAP, Grid, Vertex, coordinates, path_matrix, vertex_index

LOGGER = logging.getLogger(__name__)

Number = Union[int, float]

DEFAULT_REL_TOL = 1e-9

# Rows per chunk when all vertices of one configuration are excluded in turn.
AVOID_CHUNK_ELEMENTS = 2**22


# -----------------------------
# Types
# -----------------------------


@dataclass(frozen=True)
class Configuration:
    """A weight field over the grid; int64 for integer-valued laws, float64 otherwise."""

    grid: Grid
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, copy=True)
        if w.dtype.kind not in "iuf":
            raise ValueError(f"Weights must be numeric, got dtype {w.dtype}")
        w = w.astype(np.int64 if w.dtype.kind in "iu" else np.float64)
        if w.shape != (self.grid.size,):
            raise ValueError(f"Expected {self.grid.size} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("Weights must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def integer(self) -> bool:
        return self.weights.dtype.kind == "i"

    def with_weight(self, v: Vertex, x: Number) -> "Configuration":
        """Copy with the weight at v replaced by x."""

        idx = vertex_index(self.grid, v)
        w = self.weights.copy()
        if self.integer and float(x) != int(x):
            w = w.astype(np.float64)
        w[idx] = x
        return Configuration(self.grid, w)


@dataclass(frozen=True)
class PassageResult:
    """Passage time with the forward/backward value fields and the geodesic union."""

    grid: Grid
    T: Number
    forward: np.ndarray
    backward: np.ndarray
    geodesic_mask: np.ndarray
    tie_tolerance: float

    @property
    def geodesic_indices(self) -> np.ndarray:
        return np.flatnonzero(self.geodesic_mask)

    @property
    def geodesic_set(self) -> FrozenSet[Tuple[int, ...]]:
        return frozenset(coordinates(self.grid, i) for i in self.geodesic_indices)


@dataclass(frozen=True)
class BatchPassage:
    """Row-wise passage results of a (replicates x N) weight matrix."""

    T: np.ndarray
    forward: np.ndarray
    backward: np.ndarray
    geodesic: np.ndarray
    tolerance: np.ndarray


# -----------------------------
# Batch kernels
# -----------------------------


def _as_batch(weights: np.ndarray) -> np.ndarray:
    w = np.asarray(weights)
    return w[None, :] if w.ndim == 1 else w


def forward_sweep(
    grid: Grid, weights: np.ndarray, exclude: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Return (Fwd, reachable) for every row; row r skips vertex ``exclude[r]`` when it is >= 0.

    Fwd is 0 wherever the vertex cannot be reached from the origin.
    """

    w = _as_batch(weights)
    rows = w.shape[0]
    fwd = np.zeros_like(w)
    reach = np.zeros(w.shape, dtype=bool)
    blocked = np.zeros(w.shape, dtype=bool)
    if exclude is not None:
        exclude = np.broadcast_to(np.asarray(exclude, dtype=np.int64), (rows,))
        hit = exclude >= 0
        blocked[np.flatnonzero(hit), exclude[hit]] = True

    reach[:, grid.origin] = ~blocked[:, grid.origin]
    fwd[:, grid.origin] = np.where(reach[:, grid.origin], w[:, grid.origin], 0)
    for table in grid.layers[1:]:
        ok = table.pred_ok[None, :, :] & reach[:, table.pred]
        best = np.where(ok, fwd[:, table.pred], 0).max(axis=2)
        alive = ok.any(axis=2) & ~blocked[:, table.vertices]
        reach[:, table.vertices] = alive
        fwd[:, table.vertices] = np.where(alive, w[:, table.vertices] + best, 0)
    return fwd, reach


def backward_sweep(grid: Grid, weights: np.ndarray) -> np.ndarray:
    w = _as_batch(weights)
    bwd = np.zeros_like(w)
    bwd[:, grid.target] = w[:, grid.target]
    for table in reversed(grid.layers[:-1]):
        best = np.where(table.succ_ok[None, :, :], bwd[:, table.succ], 0).max(axis=2)
        bwd[:, table.vertices] = w[:, table.vertices] + best
    return bwd


def tie_tolerance(T: np.ndarray, integer: bool, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """0 for integer weights, rel_tol * T otherwise."""

    if integer:
        return np.zeros(np.shape(T))
    return rel_tol * np.abs(np.asarray(T, dtype=float))


def batch_passage(grid: Grid, weights: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> BatchPassage:
    w = _as_batch(weights)
    fwd, _ = forward_sweep(grid, w)
    bwd = backward_sweep(grid, w)
    T = fwd[:, grid.target]
    tol = tie_tolerance(T, w.dtype.kind in "iu", rel_tol)
    through = fwd + bwd - w
    geodesic = through >= (T - tol)[:, None]
    return BatchPassage(T=T, forward=fwd, backward=bwd, geodesic=geodesic, tolerance=tol)


def batch_avoid(grid: Grid, weights: np.ndarray, vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Best path sum of row r avoiding ``vertices[r]``; returns (values, exists)."""

    w = _as_batch(weights)
    fwd, reach = forward_sweep(grid, w, exclude=vertices)
    return fwd[:, grid.target], reach[:, grid.target]


def batch_threshold(
    grid: Grid,
    weights: np.ndarray,
    vertices: np.ndarray,
    passage: Optional[BatchPassage] = None,
) -> np.ndarray:
    """k_v of row r at vertex ``vertices[r]``; a full exclusion re-sweep per row."""

    w = _as_batch(weights)
    vertices = np.broadcast_to(np.asarray(vertices, dtype=np.int64), (w.shape[0],))
    if passage is None:
        passage = batch_passage(grid, w)
    rows = np.arange(w.shape[0])
    through = passage.forward[rows, vertices] + passage.backward[rows, vertices] - 2 * w[rows, vertices]
    avoid, exists = batch_avoid(grid, w, vertices)
    return np.where(exists, np.maximum(avoid - through, 0), 0)


# -----------------------------
# Single-configuration API
# -----------------------------


def passage_time(config: Configuration, rel_tol: float = DEFAULT_REL_TOL) -> PassageResult:
    res = batch_passage(config.grid, config.weights, rel_tol)
    T = res.T[0]
    return PassageResult(
        grid=config.grid,
        T=int(T) if config.integer else float(T),
        forward=res.forward[0],
        backward=res.backward[0],
        geodesic_mask=res.geodesic[0],
        tie_tolerance=float(res.tolerance[0]),
    )


def geodesic_membership_count(result: PassageResult) -> int:
    return int(np.count_nonzero(result.geodesic_mask))


def _scalar(config: Configuration, value: np.generic) -> Number:
    return int(value) if config.integer else float(value)


def avoid_passage_time(config: Configuration, v: Vertex) -> Optional[Number]:
    """Best path sum avoiding v; None for the origin and the target."""

    idx = vertex_index(config.grid, v)
    value, exists = batch_avoid(config.grid, config.weights, np.array([idx]))
    return _scalar(config, value[0]) if exists[0] else None


def through_weight(config: Configuration, v: Vertex, result: Optional[PassageResult] = None) -> Number:
    """S_v: best sum of the other weights over paths through v."""

    idx = vertex_index(config.grid, v)
    result = result or passage_time(config)
    return _scalar(config, result.forward[idx] + result.backward[idx] - 2 * config.weights[idx])


def threshold_weight(config: Configuration, v: Vertex) -> Number:
    """Smallest weight at v that puts v on some geodesic."""

    idx = vertex_index(config.grid, v)
    k = batch_threshold(config.grid, config.weights, np.array([idx]))
    return _scalar(config, k[0])


def resampled_passage_time(config: Configuration, v: Vertex, x: Number) -> Number:
    """T with the weight at v replaced by x."""

    if x < 0:
        raise ValueError(f"Replacement weight must be >= 0, got {x}")
    through = through_weight(config, v)
    avoid = avoid_passage_time(config, v)
    value = through + x
    return value if avoid is None else max(avoid, value)


def thresholds_all(config: Configuration) -> np.ndarray:
    """k_v for every vertex, excluding vertices in chunks of rows."""

    grid = config.grid
    passage = batch_passage(grid, config.weights)
    chunk = max(1, AVOID_CHUNK_ELEMENTS // grid.size)
    out = np.zeros(grid.size, dtype=config.weights.dtype)
    for start in range(0, grid.size, chunk):
        verts = np.arange(start, min(start + chunk, grid.size))
        block = np.broadcast_to(config.weights, (len(verts), grid.size))
        rows = BatchPassage(
            T=np.repeat(passage.T, len(verts)),
            forward=np.broadcast_to(passage.forward[0], block.shape),
            backward=np.broadcast_to(passage.backward[0], block.shape),
            geodesic=np.broadcast_to(passage.geodesic[0], block.shape),
            tolerance=np.repeat(passage.tolerance, len(verts)),
        )
        out[verts] = batch_threshold(grid, block, verts, passage=rows)
    return out


def squared_weight_passage_time(config: Configuration) -> Number:
    """T evaluated on the squared weights."""

    squared = Configuration(config.grid, config.weights * config.weights)
    return passage_time(squared).T


# -----------------------------
# Oracles
# -----------------------------


def brute_force_passage_time(config: Configuration, cap: int = DEFAULT_PATH_CAP) -> Number:
    """max over all enumerated paths of the weight sum."""

    sums = config.weights[path_matrix(config.grid, cap)].sum(axis=1)
    return _scalar(config, sums.max())


def brute_force_avoid(config: Configuration, v: Vertex, cap: int = DEFAULT_PATH_CAP) -> Optional[Number]:
    idx = vertex_index(config.grid, v)
    paths = path_matrix(config.grid, cap)
    keep = ~(paths == idx).any(axis=1)
    if not keep.any():
        return None
    return _scalar(config, config.weights[paths[keep]].sum(axis=1).max())


def brute_force_geodesic_mask(config: Configuration, cap: int = DEFAULT_PATH_CAP) -> np.ndarray:
    paths = path_matrix(config.grid, cap)
    sums = config.weights[paths].sum(axis=1)
    best = sums.max()
    tol = float(tie_tolerance(np.array(best), config.integer))
    mask = np.zeros(config.grid.size, dtype=bool)
    mask[np.unique(paths[sums >= best - tol])] = True
    return mask


def avoid_by_layer(config: Configuration, v: Vertex, result: Optional[PassageResult] = None) -> Optional[Number]:
    """Avoid-v passage time from the other vertices of v's layer.

    Every path meets each layer exactly once, so a path avoiding v passes through
    some other vertex u of the same layer; the best such path is Fwd(u) + Bwd(u) - w_u.
    """

    grid = config.grid
    idx = vertex_index(grid, v)
    result = result or passage_time(config)
    layer = grid.layers[int(grid.layer_index[idx])].vertices
    others = layer[layer != idx]
    if len(others) == 0:
        return None
    through = result.forward[others] + result.backward[others] - config.weights[others]
    return _scalar(config, through.max())
