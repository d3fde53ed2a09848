"""
Indexed triangle meshes, file I/O, summary statistics and radius queries.

Meshes are immutable: the vertex and face arrays are flagged read-only
after validation, so a mesh and its spatial index can be shared freely.
"""
from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DegenerateMesh, EmptyMesh, NonPositiveRadius, ParseError

logger = logging.getLogger(__name__)

MIN_FACE_AREA = 1e-12
DEFAULT_WELD_TOL = 1e-6


def triangle_areas(vertices, faces):
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Triangle surface in millimetres.

    Parameters
    ----------
    vertices : (n, 3) float
    faces : (m, 3) int
        Zero-based vertex indices.
    meta : dict
        Load diagnostics (source path, dropped face count, welded vertices).
    """

    vertices: np.ndarray
    faces: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh coordinates must be finite")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        v.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @classmethod
    def from_arrays(cls, vertices, faces, drop_degenerate=True, meta=None):
        """Build a mesh, dropping faces with area <= 1e-12 mm^2.

        Raises ``DegenerateMesh`` when faces were given but none survive, or
        ``ValueError`` on degenerate faces when ``drop_degenerate`` is False.
        """
        meta = dict(meta or {})
        v = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        if len(f):
            keep = triangle_areas(v, f) > MIN_FACE_AREA
            dropped = int(len(f) - keep.sum())
            if dropped and not drop_degenerate:
                raise ValueError(f"{dropped} degenerate faces")
            if not keep.any():
                raise DegenerateMesh("all faces are degenerate")
            if dropped:
                logger.info("dropped %d degenerate faces", dropped)
            f = f[keep]
            meta["dropped_faces"] = dropped
        return cls(v, f, meta)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @cached_property
    def edges(self):
        """Unique undirected edges as a sorted (k, 2) array."""
        e = np.concatenate(
            [self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]]
        )
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def index(self):
        return SpatialIndex(self.vertices)

    def transformed(self, fn):
        """Return a copy with ``fn`` applied to the (n, 3) vertex array."""
        return TriangleMesh(fn(self.vertices), self.faces, dict(self.meta))


@dataclass(frozen=True)
class MeshStats:
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    bbox_diagonal: float
    centroid: np.ndarray
    mean_edge_length: float
    vertex_count: int
    face_count: int


def compute_stats(mesh):
    if mesh.n_vertices == 0:
        raise EmptyMesh("mesh has no vertices")
    v = mesh.vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    if mesh.n_faces:
        e = mesh.edges
        mean_edge = float(np.linalg.norm(v[e[:, 0]] - v[e[:, 1]], axis=1).mean())
    else:
        mean_edge = 0.0
    return MeshStats(
        bbox_min=lo,
        bbox_max=hi,
        bbox_diagonal=float(np.linalg.norm(hi - lo)),
        centroid=v.mean(axis=0),
        mean_edge_length=mean_edge,
        vertex_count=mesh.n_vertices,
        face_count=mesh.n_faces,
    )


def within_radius(points, q, r):
    """The inclusive ``|p - q| <= r`` predicate used by every radius query."""
    d = points - q
    d2 = d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2]
    return d2 <= r * r


class SpatialIndex:
    """Exact radius queries over a fixed vertex set.

    A KD-tree proposes candidates with a slightly inflated radius; the final
    membership test is ``within_radius``, so results match an exhaustive scan
    bit-for-bit, including points at exactly distance ``r``.
    """

    def __init__(self, points):
        self.points = np.asarray(points, dtype=np.float64)
        self._tree = cKDTree(self.points)

    def __len__(self):
        return len(self.points)

    @staticmethod
    def _inflate(r):
        if not r > 0:
            raise NonPositiveRadius(f"radius must be positive, got {r}")
        return r * (1.0 + 1e-9) + 1e-12

    def radius_query(self, q, r):
        """Sorted indices of points within distance ``r`` of ``q`` (inclusive)."""
        q = np.asarray(q, dtype=np.float64)
        cand = np.asarray(self._tree.query_ball_point(q, self._inflate(r)), dtype=np.int64)
        cand.sort()
        return cand[within_radius(self.points[cand], q, r)]

    def neighbor_pairs(self, r):
        """All ordered pairs ``(i, j)``, ``i != j``, within ``r``, sorted by (i, j)."""
        pairs = self._tree.query_pairs(self._inflate(r), output_type="ndarray")
        if len(pairs):
            p = self.points
            pairs = pairs[within_radius(p[pairs[:, 0]], p[pairs[:, 1]], r)]
        n = len(self.points)
        pairs = pairs.astype(np.int64)
        # pack (i, j) into one key so a single sort gives (i, j) order
        key = np.sort(np.concatenate([pairs[:, 0] * n + pairs[:, 1], pairs[:, 1] * n + pairs[:, 0]]))
        return key // n, key % n

    def nearest(self, q):
        """Index of the nearest point; ties go to the lower index."""
        q = np.asarray(q, dtype=np.float64)
        d, i = self._tree.query(q, k=1)
        near = self.radius_query(q, d) if d > 0 else np.array([i])
        return int(near[0]) if len(near) else int(i)


def radius_query(index, q, r):
    return set(index.radius_query(q, r).tolist())


# ---------------------------------------------------------------- file I/O

def _detect_format(path):
    ext = os.path.splitext(str(path))[1].lower()
    return {".obj": "obj", ".ply": "ply_ascii", ".stl": "stl_binary"}.get(ext)


def load_mesh(path, format="auto", weld_tol=None, drop_degenerate=True):
    """Read a triangle mesh from OBJ, ASCII PLY or binary STL.

    ``weld_tol`` merges vertices closer than the tolerance; it defaults to
    1e-6 mm for STL (a triangle soup) and to no welding otherwise.
    """
    path = str(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if format == "auto":
        format = _detect_format(path)
        if format is None:
            raise ParseError(f"cannot infer mesh format from {path!r}")
    readers = {"obj": _read_obj, "ply_ascii": _read_ply, "stl_binary": _read_stl}
    if format not in readers:
        raise ValueError(f"unknown mesh format {format!r}")
    vertices, faces = readers[format](path)
    if weld_tol is None and format == "stl_binary":
        weld_tol = DEFAULT_WELD_TOL
    meta = {"path": path, "format": format}
    if weld_tol:
        before = len(vertices)
        vertices, faces = weld(vertices, faces, weld_tol)
        meta["welded_vertices"] = before - len(vertices)
    if not len(faces):
        raise DegenerateMesh(f"{path} contains no faces")
    return TriangleMesh.from_arrays(vertices, faces, drop_degenerate, meta)


def weld(vertices, faces, tol):
    """Merge vertices within ``tol``; the lowest index of each cluster survives."""
    vertices = np.asarray(vertices, dtype=np.float64)
    pairs = cKDTree(vertices).query_pairs(tol, output_type="ndarray")
    n = len(vertices)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    # first occurrence of each label, in vertex order
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap_label = np.empty_like(order)
    remap_label[order] = np.arange(len(order))
    new_index = remap_label[labels]
    return vertices[np.sort(first)], new_index[np.asarray(faces)]


def _float(tok, where):
    try:
        x = float(tok)
    except ValueError:
        raise ParseError(f"bad number {tok!r}", where) from None
    if not np.isfinite(x):
        raise ParseError(f"non-finite coordinate {tok!r}", where)
    return x


def _read_obj(path):
    verts, faces = [], []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            where = f"{path}:{lineno}"
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ParseError("vertex needs 3 coordinates", where)
                verts.append([_float(t, where) for t in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise ParseError("only triangular faces are supported", where)
                try:
                    idx = [int(t.split("/")[0]) for t in parts[1:]]
                except ValueError:
                    raise ParseError("bad face index", where) from None
                if min(idx) < 1:
                    raise ParseError("face index out of range", where)
                # upper bound checked after all vertices are read
                faces.append((idx, where))
    n = len(verts)
    out = []
    for idx, where in faces:
        if max(idx) > n:
            raise ParseError(f"face index {max(idx)} exceeds vertex count {n}", where)
        out.append([i - 1 for i in idx])
    return np.array(verts, dtype=np.float64).reshape(-1, 3), np.array(out, dtype=np.int64).reshape(-1, 3)


def _read_ply(path):
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", f"{path}:1")
    elements = []  # (name, count, [property names])
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        i += 1
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            if parts[1] != "ascii":
                raise ParseError("only ASCII PLY is supported", f"{path}:{i}")
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise ParseError("property before element", f"{path}:{i}")
            elements[-1][2].append(parts[-1])
        elif parts[0] == "end_header":
            break
    else:
        raise ParseError("missing end_header", path)

    verts, faces = [], []
    for name, count, props in elements:
        for _ in range(count):
            if i >= len(lines):
                raise ParseError(f"unexpected end of file in element {name!r}", f"{path}:{i}")
            parts = lines[i].split()
            i += 1
            where = f"{path}:{i}"
            if name == "vertex":
                try:
                    xyz = [parts[props.index(k)] for k in ("x", "y", "z")]
                except (ValueError, IndexError):
                    raise ParseError("vertex row lacks x/y/z", where) from None
                verts.append([_float(t, where) for t in xyz])
            elif name == "face":
                try:
                    k = int(parts[0])
                    idx = [int(t) for t in parts[1:1 + k]]
                except (ValueError, IndexError):
                    raise ParseError("bad face row", where) from None
                if k != 3 or len(idx) != 3:
                    raise ParseError("only triangular faces are supported", where)
                faces.append((idx, where))
    n = len(verts)
    for idx, where in faces:
        if min(idx) < 0 or max(idx) >= n:
            raise ParseError(f"face index out of range for {n} vertices", where)
    return (np.array(verts, dtype=np.float64).reshape(-1, 3),
            np.array([f for f, _ in faces], dtype=np.int64).reshape(-1, 3))


_STL_DTYPE = np.dtype([("normal", "<f4", 3), ("tri", "<f4", (3, 3)), ("attr", "<u2")])


def _read_stl(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 84:
        raise ParseError("file too short for binary STL header", f"{path}@0")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise ParseError(f"expected {count} facets ({expected} bytes), got {len(data)} bytes", f"{path}@{len(data)}")
    rec = np.frombuffer(data, dtype=_STL_DTYPE, count=count, offset=84)
    tri = rec["tri"].astype(np.float64).reshape(-1, 3)
    if not np.all(np.isfinite(tri)):
        raise ParseError("non-finite coordinate", path)
    return tri, np.arange(len(tri), dtype=np.int64).reshape(-1, 3)


def save_mesh(mesh, path, format="auto"):
    path = str(path)
    if format == "auto":
        format = _detect_format(path) or "obj"
    v, f = mesh.vertices, mesh.faces
    if format == "obj":
        with open(path, "w") as fh:
            for x, y, z in v:
                fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
            for a, b, c in f + 1:
                fh.write(f"f {a} {b} {c}\n")
    elif format == "ply_ascii":
        write_ply(path, v, f)
    elif format == "stl_binary":
        rec = np.zeros(len(f), dtype=_STL_DTYPE)
        tri = v[f]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        n /= np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)
        rec["normal"] = n
        rec["tri"] = tri
        with open(path, "wb") as fh:
            fh.write(b"binary STL".ljust(80, b" "))
            fh.write(struct.pack("<I", len(f)))
            fh.write(rec.tobytes())
    else:
        raise ValueError(f"unknown mesh format {format!r}")


def write_ply(path, vertices, faces, vertex_scalars=None):
    """ASCII PLY writer; ``vertex_scalars`` maps property name to per-vertex floats."""
    vertex_scalars = vertex_scalars or {}
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(vertices)}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        for name in vertex_scalars:
            fh.write(f"property float {name}\n")
        fh.write(f"element face {len(faces)}\n")
        fh.write("property list uchar int vertex_indices\nend_header\n")
        cols = [np.asarray(s, dtype=np.float64) for s in vertex_scalars.values()]
        for k, (x, y, z) in enumerate(vertices):
            extra = "".join(f" {c[k]:.17g}" for c in cols)
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}{extra}\n")
        for a, b, c in faces:
            fh.write(f"3 {a} {b} {c}\n")
