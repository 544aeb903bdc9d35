"""Rectangular study regions, uniform grids, rook adjacency and binning.

Boxes are indexed row-major starting from the ``(x_min, y_min)`` corner::

    index = row * n_x + col

where ``row`` counts boxes along ``y`` and ``col`` along ``x``.  Boxes are
half-open ``[x0, x1) x [y0, y1)`` except on the region's maximum edges, which
are closed, so a point lying on a shared edge belongs to the box with the
larger column/row.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np


class OutsideRegionError(ValueError):
    """A point falls outside the study region."""

    def __init__(self, index, point):
        self.index = index
        self.point = point
        super().__init__(f"point {index} at {tuple(point)} lies outside the study region")


@dataclass(frozen=True)
class StudyRegion:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("region bounds must be finite")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate region {vals}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, x, y):
        """Elementwise closed-rectangle membership test."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (x >= self.x_min) & (x <= self.x_max) & (y >= self.y_min) & (y <= self.y_max)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min, "y_max": self.y_max}

    @classmethod
    def from_dict(cls, d) -> "StudyRegion":
        return cls(float(d["x_min"]), float(d["x_max"]), float(d["y_min"]), float(d["y_max"]))


@dataclass(frozen=True)
class Grid:
    region: StudyRegion
    n_x: int
    n_y: int

    def __post_init__(self):
        for name in ("n_x", "n_y"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def n(self) -> int:
        return self.n_x * self.n_y

    @property
    def dx(self) -> float:
        return self.region.width / self.n_x

    @property
    def dy(self) -> float:
        return self.region.height / self.n_y

    @property
    def box_area(self) -> float:
        return self.region.area / (self.n_x * self.n_y)

    @property
    def areas(self) -> np.ndarray:
        """Per-box areas (uniform), length ``n``."""
        return np.full(self.n, self.box_area)

    def index(self, row, col):
        return np.asarray(row) * self.n_x + np.asarray(col)

    def row_col(self, index):
        index = np.asarray(index)
        return index // self.n_x, index % self.n_x

    def box_bounds(self, index):
        """Return ``(x0, x1, y0, y1)`` of a single box."""
        row, col = self.row_col(int(index))
        r = self.region
        return (
            r.x_min + col * self.dx,
            r.x_min + (col + 1) * self.dx,
            r.y_min + row * self.dy,
            r.y_min + (row + 1) * self.dy,
        )

    def centers(self) -> np.ndarray:
        """Box centers as an ``(n, 2)`` array in index order."""
        rows, cols = np.divmod(np.arange(self.n), self.n_x)
        xs = self.region.x_min + (cols + 0.5) * self.dx
        ys = self.region.y_min + (rows + 0.5) * self.dy
        return np.column_stack([xs, ys])

    def locate(self, x, y) -> np.ndarray:
        """Box index of each point; points must lie inside the region."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = self.region
        col = np.floor((x - r.x_min) * self.n_x / r.width).astype(np.int64)
        row = np.floor((y - r.y_min) * self.n_y / r.height).astype(np.int64)
        # closed on the region's max edges
        col = np.clip(col, 0, self.n_x - 1)
        row = np.clip(row, 0, self.n_y - 1)
        return row * self.n_x + col

    def to_matrix(self, values) -> np.ndarray:
        """Reshape a per-box vector into ``(n_y, n_x)``; row 0 is the lowest ``y``."""
        values = np.asarray(values)
        if values.shape != (self.n,):
            raise ValueError(f"expected {self.n} values, got shape {values.shape}")
        return values.reshape(self.n_y, self.n_x)

    def to_dict(self) -> dict:
        return {"region": self.region.to_dict(), "n_x": self.n_x, "n_y": self.n_y}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "Grid":
        return cls(StudyRegion.from_dict(d["region"]), int(d["n_x"]), int(d["n_y"]))


@dataclass(frozen=True)
class NeighborGraph:
    """Symmetric weighted adjacency in CSR layout.

    Neighbors of box ``i`` are ``indices[indptr[i]:indptr[i+1]]`` with weights
    ``weights[indptr[i]:indptr[i+1]]``.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    def neighbors(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def permuted(self, perm) -> "NeighborGraph":
        """Relabel boxes so that new box ``k`` is old box ``perm[k]``."""
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        adj = [[] for _ in range(self.n)]
        for new_i, old_i in enumerate(perm):
            nb, w = self.neighbors(old_i)
            adj[new_i] = sorted(zip(inv[nb].tolist(), w.tolist()))
        return _csr_from_lists(adj)


def _csr_from_lists(adj) -> NeighborGraph:
    indptr = np.zeros(len(adj) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(a) for a in adj])
    indices = np.array([j for a in adj for j, _ in a], dtype=np.int64)
    weights = np.array([w for a in adj for _, w in a], dtype=np.float64)
    return NeighborGraph(indptr, indices, weights)


@dataclass(frozen=True)
class PointPattern:
    points: np.ndarray
    region: StudyRegion

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        inside = self.region.contains(pts[:, 0], pts[:, 1])
        if not inside.all():
            bad = int(np.flatnonzero(~inside)[0])
            raise OutsideRegionError(bad, pts[bad])

    @property
    def N(self) -> int:
        return len(self.points)

    def __len__(self):
        return self.N


@dataclass(frozen=True)
class BinnedPattern:
    grid: Grid
    counts: np.ndarray
    box_of_point: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (self.grid.n,):
            raise ValueError(f"counts must have length {self.grid.n}")
        if (counts < 0).any():
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def areas(self) -> np.ndarray:
        return self.grid.areas

    def counts_matrix(self) -> np.ndarray:
        return self.grid.to_matrix(self.counts)

    def counts_csv(self) -> str:
        return matrix_to_csv(self.counts_matrix())


def build_grid(region: StudyRegion, n_x: int, n_y: int) -> Grid:
    return Grid(region, n_x, n_y)


def rook_neighbors(grid: Grid, weight: float = 1.0) -> NeighborGraph:
    """4-neighbourhood adjacency with a common edge weight."""
    adj = []
    for i in range(grid.n):
        row, col = divmod(i, grid.n_x)
        nb = []
        if row > 0:
            nb.append(i - grid.n_x)
        if col > 0:
            nb.append(i - 1)
        if col < grid.n_x - 1:
            nb.append(i + 1)
        if row < grid.n_y - 1:
            nb.append(i + grid.n_x)
        adj.append([(j, weight) for j in nb])
    return _csr_from_lists(adj)


def bin_points(pattern: PointPattern, grid: Grid) -> BinnedPattern:
    pts = pattern.points
    inside = grid.region.contains(pts[:, 0], pts[:, 1])
    if not inside.all():
        bad = int(np.flatnonzero(~inside)[0])
        raise OutsideRegionError(bad, pts[bad])
    idx = grid.locate(pts[:, 0], pts[:, 1])
    counts = np.bincount(idx, minlength=grid.n)
    return BinnedPattern(grid, counts, idx)


def matrix_to_csv(matrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(matrix):
        writer.writerow([repr(v.item()) if isinstance(v, np.floating) else v.item() for v in row])
    return buf.getvalue()


def csv_to_matrix(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    return np.array([[float(v) for v in r] for r in rows])
