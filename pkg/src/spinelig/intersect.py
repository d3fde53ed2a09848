"""Plane / triangle-mesh cross sections."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree
from scipy.sparse.csgraph import connected_components

logger = logging.getLogger(__name__)

ON_PLANE_EPS = 1e-9
_EDGES = ((0, 1), (1, 2), (2, 0))


@dataclass(frozen=True, eq=False)
class IntersectionCurve:
    """Polyline soup produced by cutting a mesh with a plane.

    Curve points are shared between adjacent triangles: each point is keyed
    by the mesh edge it lies on, or by the mesh vertex when that vertex sits
    on the plane. Points are numbered in construction order (face order,
    then edge order within the face), which is the tie-break order used by
    downstream extremum searches.

    Attributes
    ----------
    points : (m, 3) float
    values : (m,) float or None
        Linearly interpolated per-vertex attribute.
    segments : (k, 2) int
        Indices into ``points``.
    faces : (k,) int
        Source triangle of each segment.
    keys : (m,) int
        ``a * n + b`` for a crossing edge ``a < b``, ``a * n + a`` for an
        on-plane vertex ``a``.
    """

    points: np.ndarray
    values: np.ndarray | None
    segments: np.ndarray
    faces: np.ndarray
    keys: np.ndarray

    def __len__(self):
        return len(self.segments)

    @property
    def is_empty(self):
        return len(self.segments) == 0

    @property
    def segment_points(self):
        """(k, 2, 3) segment endpoint coordinates."""
        return self.points[self.segments]

    def total_length(self):
        s = self.segment_points
        return float(np.linalg.norm(s[:, 1] - s[:, 0], axis=1).sum())

    def components(self, gap=0.0):
        """Connected-component label per point, numbered by first point index.

        Points closer than ``gap`` are joined even without a segment between
        them, which bridges small breaks in cuts through noisy meshes.
        """
        m = len(self.points)
        if m == 0:
            return np.zeros(0, dtype=np.int64)
        s = self.segments
        if gap > 0:
            near = cKDTree(self.points).query_pairs(gap, output_type="ndarray")
            s = np.concatenate([s, near.reshape(-1, 2)])
        g = coo_matrix((np.ones(len(s)), (s[:, 0], s[:, 1])), shape=(m, m))
        _, labels = connected_components(g, directed=False)
        _, first = np.unique(labels, return_index=True)
        relabel = np.empty(len(first), dtype=np.int64)
        relabel[np.argsort(first, kind="stable")] = np.arange(len(first))
        return relabel[labels]


def plane_mesh_intersection(mesh, plane, attributes=None):
    """Cut ``mesh`` with ``plane``.

    A vertex within 1e-9 mm of the plane counts as lying on its positive
    side. Triangles entirely on one side contribute nothing, and triangles
    that only touch the plane at a vertex contribute nothing either.

    Parameters
    ----------
    mesh : TriangleMesh
    plane : CuttingPlane
    attributes : (n,) float, optional
        Per-vertex scalars interpolated onto the curve points.

    Returns
    -------
    IntersectionCurve
        Possibly empty; an empty cut is logged, not raised.
    """
    v = mesh.vertices
    f = mesh.faces
    n = len(v)
    d = (v - plane.point) @ plane.normal
    on = np.abs(d) < ON_PLANE_EPS
    pos = d > -ON_PLANE_EPS

    side = pos[f]
    crossing = side.any(axis=1) & ~side.all(axis=1)
    fidx = np.nonzero(crossing)[0]
    vals = None if attributes is None else np.asarray(attributes, dtype=np.float64)
    if len(fidx) == 0:
        logger.debug("plane does not cut the mesh")
        return _empty(vals is not None)

    fc = f[fidx]
    # per face: the two crossing edges, in edge order
    ends = []
    for i, j in _EDGES:
        ends.append((fc[:, i], fc[:, j], pos[fc[:, i]] != pos[fc[:, j]]))
    mask = np.stack([e[2] for e in ends], axis=1)  # (k, 3), two True per row
    ea = np.stack([e[0] for e in ends], axis=1)[mask].reshape(-1, 2)
    eb = np.stack([e[1] for e in ends], axis=1)[mask].reshape(-1, 2)

    lo = np.minimum(ea, eb)
    hi = np.maximum(ea, eb)
    key = lo * n + hi
    # on-plane vertex: the crossing collapses to that vertex
    on_lo, on_hi = on[lo], on[hi]
    key = np.where(on_lo, lo * n + lo, np.where(on_hi, hi * n + hi, key))

    keep = key[:, 0] != key[:, 1]
    key = key[keep]
    seg_faces = fidx[keep]
    lo, hi = lo[keep], hi[keep]
    on_lo, on_hi = on_lo[keep], on_hi[keep]
    if len(key) == 0:
        return _empty(vals is not None)

    flat = key.ravel()
    uniq, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    segments = rank[inverse].reshape(-1, 2)

    src = first[order]
    a, b = lo.ravel()[src], hi.ravel()[src]
    va, vb = on_lo.ravel()[src], on_hi.ravel()[src]
    da, db = d[a], d[b]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(va, 0.0, np.where(vb, 1.0, da / (da - db)))
    points = v[a] + t[:, None] * (v[b] - v[a])
    points[va] = v[a[va]]
    points[vb] = v[b[vb]]
    values = None
    if vals is not None:
        values = vals[a] + t * (vals[b] - vals[a])
        values[va] = vals[a[va]]
        values[vb] = vals[b[vb]]
    return IntersectionCurve(points, values, segments, seg_faces, uniq[order])


def _empty(with_values):
    return IntersectionCurve(
        np.zeros((0, 3)),
        np.zeros(0) if with_values else None,
        np.zeros((0, 2), dtype=np.int64),
        np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.int64),
    )
