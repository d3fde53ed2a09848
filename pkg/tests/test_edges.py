import csv

import numpy as np
import pytest

from spinelig.edges import AUTO_RADIUS_FACTOR, compute_edge_values, resolve_radius
from spinelig.errors import EmptyMesh, NonPositiveRadius
from spinelig.mesh import TriangleMesh, compute_stats, load_mesh

from conftest import grid_cube, icosphere, random_rotation, unit_cube
from oracles import brute_edge_values


@pytest.mark.parametrize("mesh_fn, r", [(lambda: grid_cube(6), 0.4), (lambda: icosphere(3), 0.3),
                                        (lambda: grid_cube(10), 0.2)])
def test_bit_exact_against_oracle(mesh_fn, r):
    m = mesh_fn()
    got = compute_edge_values(m, radius=r).values
    assert got.tolist() == brute_edge_values(m.vertices, r)


def test_random_cloud_against_oracle():
    rng = np.random.default_rng(4)
    v = rng.uniform(-5, 5, size=(1500, 3))
    m = TriangleMesh(v, [[0, 1, 2]])
    assert compute_edge_values(m, radius=1.3).values.tolist() == brute_edge_values(v, 1.3)


def test_corners_and_edges_beat_face_interiors():
    n = 10
    m = grid_cube(n)
    vals = compute_edge_values(m, radius=2.1 / n).values
    g = np.rint(m.vertices * n).astype(int)
    on_bound = ((g == 0) | (g == n)).sum(axis=1)
    interior, edge, corner = vals[on_bound == 1], vals[on_bound == 2], vals[on_bound == 3]
    # far from every cube edge the neighbourhood is symmetric
    deep = (on_bound == 1) & (((g >= 3) & (g <= n - 3)).sum(axis=1) == 2)
    assert deep.sum() == 6 * 5 * 5
    assert np.all(vals[deep] < 1e-12)
    assert edge.min() > interior.max()
    assert corner.min() > edge.max()
    assert interior.min() >= 0 and corner.max() <= 1


def test_flat_grid_interior_is_zero():
    g = np.arange(11, dtype=float)
    x, y = np.meshgrid(g, g)
    v = np.c_[x.ravel(), y.ravel(), np.zeros(121)]
    m = TriangleMesh(v, [[0, 1, 11]])
    vals = compute_edge_values(m, radius=2.0).values.reshape(11, 11)
    assert np.all(vals[2:-2, 2:-2] == 0.0)
    assert vals[0, 0] > vals[0, 5] > 0


def test_isolated_vertex_gets_zero():
    v = np.array([[0.0, 0, 0], [0.1, 0, 0], [0, 0.1, 0], [50, 50, 50]])
    vals = compute_edge_values(TriangleMesh(v, [[0, 1, 2]]), radius=1.0).values
    assert vals[3] == 0.0
    assert np.all((vals >= 0) & (vals <= 1))


def test_clamped_to_one():
    # one neighbour at exactly the radius: |v - c| / r = 1
    v = np.array([[0.0, 0, 0], [1.0, 0, 0], [5, 5, 5]])
    vals = compute_edge_values(TriangleMesh(v, [[0, 1, 2]]), radius=1.0).values
    assert vals[0] == 1.0 and vals[1] == 1.0


def test_scale_invariance():
    m = icosphere(2)
    a = compute_edge_values(m, radius=0.5).values
    b = compute_edge_values(TriangleMesh(m.vertices * 4, m.faces), radius=2.0).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_rigid_invariance():
    m = grid_cube(6)
    rot = random_rotation(np.random.default_rng(8))
    moved = TriangleMesh(m.vertices @ rot.T + [10, -20, 30], m.faces)
    # r avoids the exact lattice distances 1/6, sqrt(2)/6, ... where rounding could flip membership
    a = compute_edge_values(m, radius=0.3).values
    b = compute_edge_values(moved, radius=0.3).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_auto_radius():
    m = icosphere(2)
    f = compute_edge_values(m)
    assert f.radius_used == pytest.approx(AUTO_RADIUS_FACTOR * compute_stats(m).mean_edge_length)
    assert resolve_radius(m, None) == f.radius_used


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_nonpositive_radius(r):
    with pytest.raises(NonPositiveRadius):
        compute_edge_values(unit_cube(), radius=r)


def test_empty_mesh():
    with pytest.raises(EmptyMesh):
        compute_edge_values(TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), int)))


def test_csv_and_ply_output(tmp_path):
    m = grid_cube(3)
    f = compute_edge_values(m, radius=0.5)
    f.to_csv(tmp_path / "e.csv")
    with open(tmp_path / "e.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["vertex_index", "value"]
    assert [float(r[1]) for r in rows[1:]] == f.values.tolist()
    f.to_ply(m, tmp_path / "e.ply")
    back = load_mesh(tmp_path / "e.ply")
    assert back.n_vertices == m.n_vertices and back.n_faces == m.n_faces
    assert "edge_value" in (tmp_path / "e.ply").read_text(errors="ignore")
