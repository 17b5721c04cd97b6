"""
lattice.py

DESCRIPTION
The cube V = [0, n]^d of the integer lattice with directed up-right adjacency.

Vertices are flat row-major indices (the last coordinate varies fastest);
coordinates appear only at the API boundary. Layer l(v) = sum of coordinates
orders the dynamic programme: every directed edge goes from layer l to l + 1,
so every origin-to-target path meets each layer exactly once.

The brute-force path enumerator is a testing oracle; its output size is capped.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np

from lpp.errors import GridTooLargeError, PathCapExceededError, VertexOutOfRangeError

Vertex = Union[int, Sequence[int]]

# Vertex budget; batch kernels hold several (replicates x N) arrays.
DEFAULT_MAX_VERTICES = int(os.environ.get("LPP_MAX_VERTICES", str(2**22)))

DEFAULT_PATH_CAP = 10**6


@dataclass(frozen=True)
class LayerTable:
    """Vertices of one layer with their in- and out-neighbours.

    Attributes:
        vertices: Flat indices of the layer, ascending.
        pred: (m, d) indices v - e_i; entries with ``pred_ok`` False are placeholders.
        pred_ok: (m, d) mask, True where coordinate i of v is > 0.
        succ: (m, d) indices v + e_i.
        succ_ok: (m, d) mask, True where coordinate i of v is < n.
    """

    vertices: np.ndarray
    pred: np.ndarray
    pred_ok: np.ndarray
    succ: np.ndarray
    succ_ok: np.ndarray


@dataclass(frozen=True)
class Grid:
    """The cube [0, n]^d with N = (n + 1)^d vertices.

    Attributes:
        n: Side length (>= 1).
        d: Dimension (>= 2).
        max_vertices: Memory budget; construction fails above it.
    """

    n: int
    d: int
    max_vertices: int = field(default=DEFAULT_MAX_VERTICES, compare=False, repr=False)

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"Side length n must be a positive integer, got {self.n}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"Dimension d must be an integer >= 2, got {self.d}")
        size = (self.n + 1) ** self.d
        if size > sys.maxsize:
            raise GridTooLargeError(f"Grid n={self.n} d={self.d} has {size} vertices, beyond the platform word")
        if size > self.max_vertices:
            raise GridTooLargeError(
                f"Grid n={self.n} d={self.d} has {size} vertices, above the budget of {self.max_vertices}"
            )

    @property
    def size(self) -> int:
        return (self.n + 1) ** self.d

    @property
    def origin(self) -> int:
        return 0

    @property
    def target(self) -> int:
        return self.size - 1

    @property
    def path_length(self) -> int:
        """Vertices on any origin-to-target path."""

        return self.d * self.n + 1

    @cached_property
    def strides(self) -> np.ndarray:
        return np.array([(self.n + 1) ** (self.d - 1 - i) for i in range(self.d)], dtype=np.int64)

    @cached_property
    def coords(self) -> np.ndarray:
        """(N, d) coordinates of every vertex."""

        shape = (self.n + 1,) * self.d
        return np.stack(np.unravel_index(np.arange(self.size), shape), axis=1).astype(np.int64)

    @cached_property
    def layer_index(self) -> np.ndarray:
        return self.coords.sum(axis=1)

    @cached_property
    def layers(self) -> List[LayerTable]:
        coords = self.coords
        tables: List[LayerTable] = []
        for level in range(self.d * self.n + 1):
            vertices = np.flatnonzero(self.layer_index == level)
            c = coords[vertices]
            pred_ok = c > 0
            succ_ok = c < self.n
            pred = np.where(pred_ok, vertices[:, None] - self.strides[None, :], 0)
            succ = np.where(succ_ok, vertices[:, None] + self.strides[None, :], 0)
            tables.append(LayerTable(vertices, pred, pred_ok, succ, succ_ok))
        return tables

    @cached_property
    def order(self) -> np.ndarray:
        return np.concatenate([t.vertices for t in self.layers])


# -----------------------------
# Coordinates
# -----------------------------


def index_of(grid: Grid, coords: Sequence[int]) -> int:
    c = [int(x) for x in coords]
    if len(c) != grid.d or any(x < 0 or x > grid.n for x in c):
        raise VertexOutOfRangeError(f"Vertex {tuple(c)} is outside [0, {grid.n}]^{grid.d}")
    return int(np.dot(c, grid.strides))


def coordinates(grid: Grid, index: int) -> Tuple[int, ...]:
    index = int(index)
    if index < 0 or index >= grid.size:
        raise VertexOutOfRangeError(f"Vertex index {index} is outside 0..{grid.size - 1}")
    return tuple(int(x) for x in grid.coords[index])


def vertex_index(grid: Grid, v: Vertex) -> int:
    """Flat index of ``v``, given either as an index or as coordinates."""

    if isinstance(v, (int, np.integer)):
        coordinates(grid, int(v))
        return int(v)
    return index_of(grid, v)


# -----------------------------
# Adjacency and ordering
# -----------------------------


def up_neighbors(grid: Grid, v: Vertex) -> List[Tuple[int, ...]]:
    """Coordinates of v + e_i for every i with v_i < n."""

    c = coordinates(grid, vertex_index(grid, v))
    out = []
    for i in range(grid.d):
        if c[i] < grid.n:
            out.append(c[:i] + (c[i] + 1,) + c[i + 1 :])
    return out


def layer_order(grid: Grid) -> List[Tuple[int, ...]]:
    """All vertices by ascending layer; ascending flat index within a layer."""

    return [tuple(int(x) for x in grid.coords[i]) for i in grid.order]


def layer_sizes(grid: Grid) -> List[int]:
    return [len(t.vertices) for t in grid.layers]


# -----------------------------
# Path enumeration (oracle)
# -----------------------------


def path_count(grid: Grid) -> int:
    """Multinomial (dn)! / (n!)^d."""

    return math.factorial(grid.d * grid.n) // math.factorial(grid.n) ** grid.d


def _check_cap(grid: Grid, cap: int) -> None:
    count = path_count(grid)
    if count > cap:
        raise PathCapExceededError(f"Grid n={grid.n} d={grid.d} has {count} paths, above the cap of {cap}")


def _index_paths(grid: Grid) -> Iterator[List[int]]:
    strides = [int(s) for s in grid.strides]
    n, d = grid.n, grid.d
    coords = [0] * d
    path = [0]

    def walk() -> Iterator[List[int]]:
        if len(path) == grid.path_length:
            yield list(path)
            return
        for i in range(d):
            if coords[i] < n:
                coords[i] += 1
                path.append(path[-1] + strides[i])
                yield from walk()
                path.pop()
                coords[i] -= 1

    yield from walk()


def enumerate_paths(grid: Grid, cap: int = DEFAULT_PATH_CAP) -> Iterator[Tuple[Tuple[int, ...], ...]]:
    """Yield every directed origin-to-target path once, as coordinate tuples."""

    _check_cap(grid, cap)
    for p in _index_paths(grid):
        yield tuple(tuple(int(x) for x in grid.coords[i]) for i in p)


def path_matrix(grid: Grid, cap: int = DEFAULT_PATH_CAP) -> np.ndarray:
    """(paths, dn + 1) matrix of flat vertex indices, one row per path."""

    _check_cap(grid, cap)
    rows = list(_index_paths(grid))
    return np.asarray(rows, dtype=np.int64).reshape(len(rows), grid.path_length)
