import numpy as np
import pytest

from spinelig.edges import compute_edge_values
from spinelig.errors import MissingRule
from spinelig.frame import AnatomicalFrame
from spinelig.landmarks import Landmark, LandmarkSet, LigamentGroup, landmark_group_stats
from spinelig.projection import DEFAULT_AXES, ProjectionRule, default_rules, project_landmarks, select_candidate

from conftest import grid_cube
from oracles import brute_group_centroids

WORLD = AnatomicalFrame(np.zeros(3), [0, 1, 0], [1, 0, 0], [0, 0, 1])


@pytest.fixture(scope="module")
def cube():
    # 20 mm cube, 2 mm grid
    m = grid_cube(10, size=20.0)
    return m, compute_edge_values(m, radius=4.0)


def lm(xyz, group="SSL", bundle=0, side="midline"):
    return Landmark(group, bundle, side, xyz, "registered")


def rules_for(group, axis, radius=5.0, mode="bundle"):
    return {group: ProjectionRule(group, axis, radius, mode)}


def test_snaps_to_cube_edge(cube):
    m, f = cube
    # 2 mm below the x = 20, z = 20 edge; the AP cut runs across that edge
    out = project_landmarks(m, WORLD, f, LandmarkSet([lm([20, 10, 18])]), rules_for("SSL", "AP"))
    e = out.entries[0]
    assert e.status == "projected"
    np.testing.assert_allclose(e.position, [20, 10, 20], atol=1e-6)
    # exhaustive scan of the cut's interpolated edge values inside the search ball
    from spinelig.frame import CuttingPlane
    from spinelig.intersect import plane_mesh_intersection
    c = plane_mesh_intersection(m, CuttingPlane([20, 10, 18], [0, 1, 0]), f.values)
    best = max((v, p.tolist()) for p, v in zip(c.points, c.values) if np.linalg.norm(p - [20, 10, 18]) <= 5.0)
    np.testing.assert_array_equal(e.position, best[1])


def test_point_on_ridge_is_fixed_point(cube):
    m, f = cube
    out = project_landmarks(m, WORLD, f, LandmarkSet([lm([20, 10, 20])]), rules_for("SSL", "AP"))
    np.testing.assert_allclose(out.entries[0].position, [20, 10, 20], atol=1e-12)


def test_idempotent(cube):
    m, f = cube
    rng = np.random.default_rng(0)
    # near the x = 20, z = 20 edge, so the ridge is inside both searches
    pts = np.c_[20 - rng.uniform(0, 2, 12), rng.uniform(3, 17, 12), 20 - rng.uniform(0, 2, 12)]
    s = LandmarkSet(lm(p, bundle=i) for i, p in enumerate(pts))
    rules = rules_for("SSL", "AP")
    once = project_landmarks(m, WORLD, f, s, rules)
    twice = project_landmarks(m, WORLD, f, once, rules)
    np.testing.assert_array_equal(once.positions, twice.positions)


def test_projected_points_on_plane_and_surface(cube):
    m, f = cube
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 21, size=(20, 3))
    s = LandmarkSet(lm(p, bundle=i) for i, p in enumerate(pts))
    out = project_landmarks(m, WORLD, f, s, rules_for("SSL", "AP"))
    for a, b in zip(s, out):
        if b.status == "projected":
            assert abs(b.position[1] - a.position[1]) < 1e-9
            # on the cube surface: some coordinate at 0 or 20
            assert np.min(np.minimum(abs(b.position), abs(b.position - 20))) < 1e-9
            assert np.linalg.norm(b.position - a.position) <= 5.0 + 1e-12


def test_far_landmark_falls_back_to_nearest_vertex(cube):
    m, f = cube
    out = project_landmarks(m, WORLD, f, LandmarkSet([lm([120, 10, 10])]), rules_for("SSL", "AP"))
    e = out.entries[0]
    assert e.status == "fallback_nearest_vertex"
    np.testing.assert_array_equal(e.position, [20, 10, 10])


def test_larger_radius_never_lowers_edge_value(cube):
    m, f = cube
    p = np.array([17.0, 7.0, 9.0])
    from spinelig.frame import CuttingPlane
    from spinelig.intersect import plane_mesh_intersection
    c = plane_mesh_intersection(m, CuttingPlane(p, [0, 1, 0]), f.values)
    last = -1.0
    for r in (3.1, 4.0, 6.0, 9.0, 14.0):
        i = select_candidate(c.points, c.values, p, r)
        assert i is not None
        assert c.values[i] >= last
        last = c.values[i]


def test_select_candidate_tie_break():
    pts = np.array([[0.0, 0, 2], [0, 0, 1], [0, 0, -1], [0, 0, 9]])
    vals = np.array([0.5, 0.5, 0.5, 0.9])
    assert select_candidate(pts, vals, np.zeros(3), 3.0) == 1
    assert select_candidate(pts, vals, np.zeros(3), 0.5) is None


def test_missing_rule(cube):
    m, f = cube
    with pytest.raises(MissingRule):
        project_landmarks(m, WORLD, f, LandmarkSet([lm([20, 10, 18], "ALL")]), rules_for("SSL", "AP"))


def test_group_and_side_planes(cube):
    m, f = cube
    s = LandmarkSet([lm([20, 8, 18], "LF", 0, "left"), lm([20, 12, 18], "LF", 1, "left")])
    out = project_landmarks(m, WORLD, f, s, rules_for("LF", "AP", mode="group"))
    # both cut by the plane through their centroid, y = 10
    np.testing.assert_allclose(out.positions[:, 1], 10.0, atol=1e-12)


def test_rule_validation():
    with pytest.raises(ValueError):
        ProjectionRule("SSL", "XY")
    with pytest.raises(ValueError):
        ProjectionRule("SSL", "AP", 0.0)
    with pytest.raises(ValueError):
        ProjectionRule("SSL", "AP", 5.0, "nearest")
    assert ProjectionRule("SSL", "ap").plane_axis == "AP"


def test_default_rules_cover_all_groups():
    r = default_rules()
    assert set(r) == set(LigamentGroup)
    assert all(x.search_radius == 5.0 and x.per_bundle_plane for x in r.values())
    assert {g.value: x.plane_axis for g, x in r.items()} == DEFAULT_AXES


def test_group_stats_match_oracle(atlas):
    by_group, by_side = landmark_group_stats(atlas.landmarks)
    want = brute_group_centroids(atlas.landmarks)
    for g, c in want.items():
        np.testing.assert_allclose(by_group[g], c, atol=1e-12)
    for (g, side), c in by_side.items():
        pts = [e.position for e in atlas.landmarks if e.group.value == g and e.side == side]
        np.testing.assert_allclose(c, np.mean(pts, axis=0), atol=1e-12)


def test_atlas_self_projection_is_stable(atlas):
    # landmarks already on the ridges of their own mesh barely move
    f = compute_edge_values(atlas.mesh)
    from spinelig.frame import compute_frame
    out = project_landmarks(atlas.mesh, compute_frame(atlas.mesh), f, atlas.landmarks)
    d = np.linalg.norm(out.positions - atlas.landmarks.positions, axis=1)
    assert all(s == "projected" for s in out.statuses)
    assert np.median(d) < 0.5 and d.max() < 2.0
