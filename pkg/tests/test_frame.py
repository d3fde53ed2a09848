import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinelig.errors import DegenerateGeometry
from spinelig.frame import AnatomicalFrame, compute_frame, frontal_plane, sagittal_plane, snap_to_rotation
from spinelig.linalg import jacobi_eigh
from spinelig.mesh import TriangleMesh
from spinelig.registration import SimilarityTransform, quat_from_axis_angle

from conftest import icosphere, random_rotation


def angle(u, v):
    return np.degrees(np.arccos(np.clip(abs(np.dot(u, v)), -1, 1)))


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 4), st.integers(0, 2**32 - 1))
def test_jacobi_matches_definition(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    a = a + a.T
    w, v = jacobi_eigh(a)
    assert np.all(np.diff(w) <= 0)
    np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(a @ v, v * w, atol=1e-12 * max(1, np.abs(a).max()))
    np.testing.assert_allclose(w, np.linalg.eigvalsh(a)[::-1], atol=1e-12 * max(1, np.abs(a).max()))


def test_jacobi_diagonal_input_untouched():
    w, v = jacobi_eigh(np.diag([1.0, 3.0, 2.0]))
    np.testing.assert_array_equal(w, [3.0, 2.0, 1.0])
    assert np.array_equal(np.abs(v), np.eye(3)[:, [1, 2, 0]])


def check_frame(f):
    axes = np.array([f.axis_lr, f.axis_ap, f.axis_si])
    np.testing.assert_allclose(np.linalg.norm(axes, axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(axes @ axes.T, np.eye(3), atol=1e-9)
    assert np.cross(f.axis_lr, f.axis_ap) @ f.axis_si > 0


def test_proxy_frame_aligned_with_world(atlas):
    f = compute_frame(atlas.mesh)
    check_frame(f)
    assert angle(f.axis_lr, [1, 0, 0]) < 5
    assert angle(f.axis_ap, [0, 1, 0]) < 5
    assert angle(f.axis_si, [0, 0, 1]) < 5
    # signs too: anterior is +y, superior is +z
    assert f.axis_ap[1] > 0 and f.axis_si[2] > 0
    np.testing.assert_allclose(f.origin, atlas.mesh.vertices.mean(axis=0), atol=1e-12)


def test_proxy_rotated_about_z(atlas):
    r = SimilarityTransform(quat_from_axis_angle([0, 0, 1], np.radians(30)))
    f0 = compute_frame(atlas.mesh)
    f1 = compute_frame(atlas.mesh.transformed(r.apply))
    for a, b in ((f0.axis_lr, f1.axis_lr), (f0.axis_ap, f1.axis_ap), (f0.axis_si, f1.axis_si)):
        assert angle(r.matrix @ a, b) < 5
        assert (r.matrix @ a) @ b > 0


@pytest.mark.parametrize("seed", range(10))
def test_frame_equivariance(atlas, seed):
    rng = np.random.default_rng(seed)
    rot = random_rotation(rng)
    t = rng.uniform(-100, 100, 3)
    f0 = compute_frame(atlas.mesh)
    f1 = compute_frame(atlas.mesh.transformed(lambda p: p @ rot.T + t))
    for a, b in ((f0.axis_lr, f1.axis_lr), (f0.axis_ap, f1.axis_ap), (f0.axis_si, f1.axis_si)):
        # signed: the sign rules are themselves rotation invariant
        err = np.arccos(np.clip((rot @ a) @ b, -1, 1))
        assert err < 1e-6
    np.testing.assert_allclose(f1.origin, rot @ f0.origin + t, atol=1e-9)


def test_frame_deterministic(atlas):
    a, b = compute_frame(atlas.mesh), compute_frame(atlas.mesh)
    assert np.array_equal(a.basis, b.basis) and np.array_equal(a.origin, b.origin)


def test_sphere_is_degenerate_without_hints():
    m = icosphere(2)
    with pytest.raises(DegenerateGeometry):
        compute_frame(m)
    f = compute_frame(m, hints=np.eye(3))
    check_frame(f)
    np.testing.assert_allclose(f.basis, np.eye(3), atol=1e-12)


def test_coplanar_vertices_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], float)
    with pytest.raises(DegenerateGeometry):
        compute_frame(TriangleMesh(v, [[0, 1, 2], [1, 3, 2]]))


def test_hints_override_sign_and_order(atlas):
    # deliberately swapped and sloppy hints: lr ~ -x, ap ~ -y
    hints = np.array([[-1.0, 0.1, 0.0], [0.05, -1.0, 0.0], [0.0, 0.0, 1.0]])
    f = compute_frame(atlas.mesh, hints=hints)
    check_frame(f)
    assert f.axis_lr[0] < -0.99 and f.axis_ap[1] < -0.99


def test_snap_to_rotation_is_orthonormal():
    r = snap_to_rotation(np.eye(3) + 0.1 * np.random.default_rng(1).normal(size=(3, 3)))
    np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(r) == pytest.approx(1.0)


def test_planes_follow_frame():
    f = AnatomicalFrame(np.zeros(3), [0, 1, 0], [1, 0, 0], [0, 0, 1])
    s, fr = sagittal_plane(f), frontal_plane(f)
    np.testing.assert_array_equal(s.normal, [1, 0, 0])
    np.testing.assert_array_equal(fr.normal, [0, 1, 0])
    assert s.normal @ fr.normal == 0
    t = np.array([3.0, -2.0, 5.0])
    rot = random_rotation(np.random.default_rng(4))
    moved = f.transformed(rot, t)
    np.testing.assert_allclose(sagittal_plane(moved).point, t)
    np.testing.assert_allclose(sagittal_plane(moved).normal, rot @ s.normal, atol=1e-15)
    np.testing.assert_allclose(frontal_plane(moved).normal, rot @ fr.normal, atol=1e-15)


def test_frontal_plane_separates_body_from_spinous(atlas):
    f = compute_frame(atlas.mesh)
    plane = frontal_plane(f)
    anterior_wall = atlas.mesh.vertices[atlas.mesh.vertices[:, 1] > 18.5]
    spinous_tip = atlas.mesh.vertices[atlas.mesh.vertices[:, 1] < -50]
    assert len(anterior_wall) and len(spinous_tip)
    assert np.all(plane.signed_distance(anterior_wall) > 0)
    assert np.all(plane.signed_distance(spinous_tip) < 0)
