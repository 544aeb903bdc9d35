import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mrfnhpp.grid import StudyRegion, bin_points, build_grid, rook_neighbors
from mrfnhpp.simulate import (SETTING_VALUES, IntensitySurface, make_setting,
                              simulate_nhpp)


def _counts(surface, seed):
    return bin_points(simulate_nhpp(surface, seed), surface.grid).counts


def test_setting1_expected_total():
    s = make_setting(1)
    assert s.surface().integral() == pytest.approx(90 * 0.2 + 211 * 4 + 99 * 12)
    assert s.surface().integral() == pytest.approx(2050.0)


def test_setting_component_values():
    assert SETTING_VALUES[1] == (0.2, 4.0, 12.0)
    assert SETTING_VALUES[2] == (0.2, 1.0, 4.0, 8.0, 16.0)
    assert SETTING_VALUES[3] == (0.2, 4.0, 10.0, 20.0)


@pytest.mark.parametrize("sid,counts", [(1, (90, 211, 99)), (2, (80,) * 5), (3, (90, 145, 66, 99))])
def test_setting_box_counts(sid, counts):
    s = make_setting(sid)
    assert s.counts_per_component == counts
    assert sum(counts) == 400


def _components(mask, grid):
    """Connected components of a box mask under rook adjacency (plain BFS)."""
    nb = rook_neighbors(grid)
    seen = np.zeros(grid.n, bool)
    comps = 0
    for start in np.flatnonzero(mask):
        if seen[start]:
            continue
        comps += 1
        stack = [start]
        seen[start] = True
        while stack:
            i = stack.pop()
            for j in nb.neighbors(i)[0]:
                if mask[j] and not seen[j]:
                    seen[j] = True
                    stack.append(j)
    return comps


def test_setting3_has_disconnected_component():
    s = make_setting(3)
    comps = [_components(s.assignment == k, s.grid) for k in range(s.K)]
    assert comps[1] == 2
    assert max(comps[:1] + comps[2:]) == 1


@pytest.mark.parametrize("sid", [1, 2])
def test_components_connected(sid):
    s = make_setting(sid)
    assert all(_components(s.assignment == k, s.grid) == 1 for k in range(s.K))


def test_unknown_setting():
    with pytest.raises(ValueError, match="setting"):
        make_setting(4)


def test_single_box_mean_over_many_draws():
    g = build_grid(StudyRegion(0, 1, 0, 1), 1, 1)
    surf = IntensitySurface(g, np.array([5.0]))
    rng = np.random.default_rng(99)
    seeds = rng.integers(0, 2**63, size=10_000)
    draws = np.array([simulate_nhpp(surf, int(s)).N for s in seeds])
    assert 4.85 <= draws.mean() <= 5.15


def test_per_box_moments_within_three_sigma():
    # oracle: Poisson mean = variance = lambda * mu
    g = build_grid(StudyRegion(0, 4, 0, 2), 4, 1)
    lam = np.array([0.2, 1.5, 4.0, 12.0])
    surf = IntensitySurface(g, lam)
    mu = lam * g.box_area
    R = 10_000
    counts = np.array([_counts(surf, (11, r)) for r in range(R)])
    mean = counts.mean(0)
    var = counts.var(0, ddof=1)
    # sd of the sample mean and of the sample variance for Poisson(m)
    assert np.all(np.abs(mean - mu) < 3 * np.sqrt(mu / R))
    var_sd = np.sqrt((mu + 2 * mu ** 2) / R)
    assert np.all(np.abs(var - mu) < 3 * var_sd)
    # the whole count distribution, not only two moments
    for k, m in enumerate(mu):
        vals, freq = np.unique(counts[:, k], return_counts=True)
        emp_cdf = np.cumsum(freq) / R
        assert np.max(np.abs(emp_cdf - stats.poisson.cdf(vals, m))) < 1.63 / np.sqrt(R)


def test_points_fall_in_their_boxes():
    s = make_setting(1)
    pat = simulate_nhpp(s.surface(), 3)
    b = bin_points(pat, s.grid)
    assert (np.diff(b.box_of_point) >= 0).all()
    assert b.N == pat.N


def test_seeded_determinism_byte_exact():
    s = make_setting(2)
    p1 = simulate_nhpp(s.surface(), 42)
    p2 = simulate_nhpp(s.surface(), 42)
    p3 = simulate_nhpp(s.surface(), 43)
    assert p1.points.tobytes() == p2.points.tobytes()
    assert p1.points.tobytes() != p3.points.tobytes()


def test_rejects_nonpositive_intensity():
    g = build_grid(StudyRegion(0, 2, 0, 1), 2, 1)
    with pytest.raises(ValueError):
        IntensitySurface(g, np.array([1.0, 0.0]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.floats(0.05, 30.0), st.integers(0, 2**32))
def test_pattern_inside_region(nx, ny, lam, seed):
    g = build_grid(StudyRegion(-3, 2, 1, 4), nx, ny)
    pat = simulate_nhpp(IntensitySurface(g, np.full(g.n, lam)), seed)
    assert g.region.contains(pat.points[:, 0], pat.points[:, 1]).all()
