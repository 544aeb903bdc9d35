"""Piecewise-constant NHPP generation and the three benchmark settings."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, PointPattern, StudyRegion, build_grid


@dataclass(frozen=True)
class IntensitySurface:
    grid: Grid
    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if lam.shape != (self.grid.n,):
            raise ValueError(f"intensity must have length {self.grid.n}")
        if not (lam > 0).all():
            raise ValueError("intensity values must be positive")
        object.__setattr__(self, "lam", lam)

    def expected_counts(self) -> np.ndarray:
        return self.lam * self.grid.areas

    def integral(self) -> float:
        return float(self.expected_counts().sum())


@dataclass(frozen=True)
class SimulationSetting:
    name: str
    grid: Grid
    component_values: tuple
    assignment: np.ndarray

    def __post_init__(self):
        assignment = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "assignment", assignment)
        if assignment.shape != (self.grid.n,):
            raise ValueError("assignment must cover every box")
        if len(set(self.component_values)) != len(self.component_values):
            raise ValueError("component values must be distinct")

    @property
    def K(self) -> int:
        return len(self.component_values)

    @property
    def counts_per_component(self) -> tuple:
        return tuple(np.bincount(self.assignment, minlength=self.K).tolist())

    def surface(self) -> IntensitySurface:
        return IntensitySurface(self.grid, np.asarray(self.component_values)[self.assignment])


def simulate_nhpp(surface: IntensitySurface, seed=None) -> PointPattern:
    """Draw a point pattern from a piecewise-constant intensity.

    Each box gets a Poisson(lambda_i * area_i) count and its points are placed
    uniformly inside the box.  Points are ordered by box index.
    """
    rng = np.random.default_rng(seed)
    grid = surface.grid
    counts = rng.poisson(surface.expected_counts())
    box = np.repeat(np.arange(grid.n), counts)
    rows, cols = np.divmod(box, grid.n_x)
    u = rng.random((len(box), 2))
    r = grid.region
    x = r.x_min + (cols + u[:, 0]) * grid.dx
    y = r.y_min + (rows + u[:, 1]) * grid.dy
    # guard against rounding onto the closed max edge of a neighbouring box
    x = np.minimum(x, r.x_max)
    y = np.minimum(y, r.y_max)
    return PointPattern(np.column_stack([x, y]), r)


SETTING_VALUES = {
    1: (0.2, 4.0, 12.0),
    2: (0.2, 1.0, 4.0, 8.0, 16.0),
    3: (0.2, 4.0, 10.0, 20.0),
}
SETTING_COUNTS = {
    1: (90, 211, 99),
    2: (80, 80, 80, 80, 80),
    3: (90, 145, 66, 99),
}


def default_sim_grid() -> Grid:
    return build_grid(StudyRegion(0.0, 20.0, 0.0, 20.0), 20, 20)


def _layout(setting_id: int) -> np.ndarray:
    # labels[row, col]; row is y, col is x, both 0..19
    labels = np.zeros((20, 20), dtype=np.int64)
    if setting_id == 1:
        # low block in the lower-left, high block in the upper-right,
        # medium intensity everywhere else
        labels[:, :] = 1
        labels[0:9, 0:10] = 0
        labels[11:20, 9:20] = 2
    elif setting_id == 2:
        # five vertical bands of four columns each
        for k in range(5):
            labels[:, 4 * k:4 * (k + 1)] = k
    elif setting_id == 3:
        # lambda=4 occupies two disconnected corner blocks
        labels[:, :] = 2
        labels[0:10, 0:10] = 1
        labels[11:20, 15:20] = 1
        labels[0:10, 10:19] = 0
        labels[11:20, 0:11] = 3
    else:
        raise ValueError(f"unknown setting id {setting_id!r}; expected 1, 2 or 3")
    return labels.ravel()


def make_setting(setting_id: int, grid: Grid | None = None) -> SimulationSetting:
    """Build one of the three benchmark settings on the 20x20 unit grid."""
    if setting_id not in SETTING_VALUES:
        raise ValueError(f"unknown setting id {setting_id!r}; expected 1, 2 or 3")
    grid = grid or default_sim_grid()
    if (grid.n_x, grid.n_y) != (20, 20) or not np.isclose(grid.box_area, 1.0):
        raise ValueError("settings are defined on a 20x20 grid of unit boxes")
    setting = SimulationSetting(
        name=f"setting{setting_id}",
        grid=grid,
        component_values=SETTING_VALUES[setting_id],
        assignment=_layout(setting_id),
    )
    assert setting.counts_per_component == SETTING_COUNTS[setting_id]
    return setting
