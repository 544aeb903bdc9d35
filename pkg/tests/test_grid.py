import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mrfnhpp.grid import (Grid, OutsideRegionError, PointPattern, StudyRegion, bin_points,
                          build_grid, csv_to_matrix, rook_neighbors)


def test_simulation_grid_has_400_unit_boxes():
    g = build_grid(StudyRegion(0, 20, 0, 20), 20, 20)
    assert g.n == 400
    assert g.box_area == 1.0


def test_single_box():
    g = build_grid(StudyRegion(0, 1, 0, 1), 1, 1)
    assert g.n == 1
    assert g.box_area == 1.0


def test_court_grid_boxes_are_one_square_foot():
    g = build_grid(StudyRegion(-250, 250, -50, 300), 50, 35)
    assert g.n == 1750
    assert g.box_area == pytest.approx(100.0, rel=1e-12)


@pytest.mark.parametrize("nx,ny", [(0, 1), (1, 0), (-3, 2), (2.5, 2)])
def test_rejects_bad_dimensions(nx, ny):
    with pytest.raises(ValueError):
        build_grid(StudyRegion(0, 1, 0, 1), nx, ny)


@pytest.mark.parametrize("bounds", [(0, 0, 0, 1), (1, 0, 0, 1), (0, 1, 2, 2)])
def test_rejects_degenerate_region(bounds):
    with pytest.raises(ValueError):
        StudyRegion(*bounds)


@given(st.integers(1, 40), st.integers(1, 40),
       st.floats(-1e3, 1e3), st.floats(0.01, 1e3), st.floats(-1e3, 1e3), st.floats(0.01, 1e3))
def test_tiling_reproduces_area(nx, ny, x0, w, y0, h):
    g = build_grid(StudyRegion(x0, x0 + w, y0, y0 + h), nx, ny)
    assert g.areas.sum() == pytest.approx(g.region.area, rel=1e-12)


def test_row_major_indexing_from_lower_left():
    g = build_grid(StudyRegion(0, 3, 0, 2), 3, 2)
    assert g.locate(0.5, 0.5) == 0
    assert g.locate(2.5, 0.5) == 2
    assert g.locate(0.5, 1.5) == 3
    assert g.row_col(5) == (1, 2)
    assert g.box_bounds(4) == (1.0, 2.0, 1.0, 2.0)


def test_rook_degrees_3x3():
    nb = rook_neighbors(build_grid(StudyRegion(0, 3, 0, 3), 3, 3))
    assert nb.degree()[4] == 4
    assert nb.degree()[0] == 2
    assert nb.degree()[1] == 3


def test_rook_edge_count_20x20():
    g = build_grid(StudyRegion(0, 20, 0, 20), 20, 20)
    nb = rook_neighbors(g)
    # brute force: all ordered pairs of boxes at Manhattan distance 1
    rc = np.array([g.row_col(i) for i in range(g.n)])
    dist = np.abs(rc[:, None, :] - rc[None, :, :]).sum(-1)
    assert int((dist == 1).sum()) == 1520
    assert len(nb.indices) == 1520
    assert np.all(nb.weights == 1.0)


@settings(max_examples=60)
@given(st.integers(1, 12), st.integers(1, 12))
def test_neighbor_graph_symmetric_without_self_loops(nx, ny):
    nb = rook_neighbors(build_grid(StudyRegion(0, nx, 0, ny), nx, ny))
    edges = {}
    for i in range(nb.n):
        idx, w = nb.neighbors(i)
        assert i not in idx
        for j, wij in zip(idx, w):
            edges[(i, int(j))] = wij
    for (i, j), w in edges.items():
        assert edges[(j, i)] == w
    deg = nb.degree()
    assert deg.max(initial=0) <= 4
    if nx >= 3 and ny >= 3:
        assert deg.max() == 4 and deg.min() == 2


def test_bin_empty_pattern():
    g = build_grid(StudyRegion(0, 2, 0, 2), 2, 2)
    b = bin_points(PointPattern(np.zeros((0, 2)), g.region), g)
    assert b.N == 0
    assert b.counts.tolist() == [0, 0, 0, 0]


def test_bin_box_center():
    g = build_grid(StudyRegion(0, 2, 0, 2), 2, 2)
    b = bin_points(PointPattern([[1.5, 0.5]], g.region), g)
    assert b.counts.tolist() == [0, 1, 0, 0]


def test_boundary_convention():
    g = build_grid(StudyRegion(0, 2, 0, 2), 2, 2)
    pts = [[1.0, 0.5],   # shared vertical edge -> right box
           [0.5, 1.0],   # shared horizontal edge -> upper box
           [2.0, 2.0],   # region max corner -> last box
           [0.0, 0.0]]   # region min corner -> first box
    b = bin_points(PointPattern(pts, g.region), g)
    assert b.box_of_point.tolist() == [1, 2, 3, 0]


def test_outside_point_reports_index():
    region = StudyRegion(0, 1, 0, 1)
    with pytest.raises(OutsideRegionError) as err:
        PointPattern([[0.5, 0.5], [1.5, 0.2]], region)
    assert err.value.index == 1


def test_bin_rejects_points_outside_grid_region():
    pat = PointPattern([[0.5, 0.5], [3.0, 3.0]], StudyRegion(0, 4, 0, 4))
    g = build_grid(StudyRegion(0, 2, 0, 2), 2, 2)
    with pytest.raises(OutsideRegionError) as err:
        bin_points(pat, g)
    assert err.value.index == 1


def test_uniform_binning_chi_square():
    rng = np.random.default_rng(12345)
    g = build_grid(StudyRegion(0, 20, 0, 20), 20, 20)
    pts = rng.uniform(0, 20, size=(10_000, 2))
    b = bin_points(PointPattern(pts, g.region), g)
    assert b.N == 10_000
    assert b.counts.mean() == 25
    chi2 = ((b.counts - 25.0) ** 2 / 25.0).sum()
    assert chi2 < stats.chi2.ppf(0.999, df=399)


@given(st.lists(st.tuples(st.floats(0, 5), st.floats(0, 3)), max_size=200),
       st.integers(1, 7), st.integers(1, 7))
def test_binning_conserves_mass(pts, nx, ny):
    g = build_grid(StudyRegion(0, 5, 0, 3), nx, ny)
    b = bin_points(PointPattern(np.array(pts).reshape(-1, 2), g.region), g)
    assert b.N == len(pts)


def test_grid_json_and_counts_csv_roundtrip():
    g = build_grid(StudyRegion(-250, 250, -50, 300), 50, 35)
    assert Grid.from_dict(json.loads(g.to_json())) == g
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-250, 250, 300), rng.uniform(-50, 300, 300)])
    b = bin_points(PointPattern(pts, g.region), g)
    m = csv_to_matrix(b.counts_csv())
    assert m.shape == (35, 50)
    assert m.ravel().tolist() == b.counts.tolist()


def test_permuted_graph_consistent():
    g = build_grid(StudyRegion(0, 3, 0, 2), 3, 2)
    nb = rook_neighbors(g)
    perm = np.array([3, 0, 5, 1, 4, 2])
    pnb = nb.permuted(perm)
    inv = np.argsort(perm)
    for new_i, old_i in enumerate(perm):
        old_nb = sorted(nb.neighbors(old_i)[0].tolist())
        new_nb = sorted(perm[pnb.neighbors(new_i)[0]].tolist())
        assert old_nb == new_nb
    assert sorted(inv.tolist()) == list(range(6))
