"""
Closed-form least-squares similarity alignment of named point sets.

Rotation comes from the dominant eigenvector of Horn's 4x4 symmetric
matrix built from the cross-covariance of the centred point sets. Scale is
the least-squares optimum for mapping source onto target (not Horn's
symmetric variant), so ``apply(src)`` is the best fit of ``dst``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration, MissingLabel, SchemeMismatch, TooFewPairs
from .linalg import jacobi_eigh


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z],
    ])


def quat_multiply(p, q):
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ])


def _canonical(q):
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q)
    return -q if q[0] < 0 else q


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    return _canonical(np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis]))


def rotation_angle(r1, r2):
    """Geodesic distance between two rotation matrices, in radians."""
    d = np.asarray(r1).T @ np.asarray(r2)
    c = (np.trace(d) - 1.0) / 2.0
    # atan2 with the antisymmetric part stays accurate near 0 where arccos does not
    s = np.linalg.norm([d[2, 1] - d[1, 2], d[0, 2] - d[2, 0], d[1, 0] - d[0, 1]]) / 2.0
    return float(np.arctan2(s, c))


@dataclass(frozen=True)
class SimilarityTransform:
    """``p -> scale * R(rotation) p + translation`` with a unit quaternion (w, x, y, z)."""

    rotation: np.ndarray = (1.0, 0.0, 0.0, 0.0)
    translation: np.ndarray = (0.0, 0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "rotation", _canonical(self.rotation))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def identity(cls):
        return cls()

    @property
    def matrix(self):
        return quat_to_matrix(self.rotation)

    def apply(self, points):
        p = np.asarray(points, dtype=np.float64)
        return self.scale * (p @ self.matrix.T) + self.translation

    def inverse(self):
        qi = self.rotation * np.array([1.0, -1.0, -1.0, -1.0])
        s = 1.0 / self.scale
        t = -s * (quat_to_matrix(qi) @ self.translation)
        return SimilarityTransform(qi, t, s)

    def compose(self, other):
        """``self ∘ other``: apply ``other`` first."""
        q = quat_multiply(self.rotation, other.rotation)
        t = self.scale * (self.matrix @ other.translation) + self.translation
        return SimilarityTransform(q, t, self.scale * other.scale)

    def as_matrix4(self):
        m = np.eye(4)
        m[:3, :3] = self.scale * self.matrix
        m[:3, 3] = self.translation
        return m

    def to_json(self):
        return {"quat_wxyz": [float(x) for x in self.rotation],
                "t": [float(x) for x in self.translation],
                "s": self.scale}

    @classmethod
    def from_json(cls, data):
        return cls(data["quat_wxyz"], data["t"], data["s"])

    def dumps(self):
        return json.dumps({**self.to_json(), "matrix4_row_major": self.as_matrix4().ravel().tolist()}, indent=2)


def apply_transform(transform, points):
    return transform.apply(points)


@dataclass(frozen=True)
class CorrespondenceSet:
    names: tuple
    source: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        src = np.asarray(self.source, dtype=np.float64).reshape(-1, 3)
        dst = np.asarray(self.target, dtype=np.float64).reshape(-1, 3)
        if len(src) != len(dst) or len(src) != len(self.names):
            raise ValueError("source, target and names must have equal length")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate correspondence names")
        if len(src) < 3:
            raise TooFewPairs(f"need at least 3 pairs, got {len(src)}")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", dst)

    def __len__(self):
        return len(self.names)


def match_by_name(src, dst):
    """Pair two PoI sets of the same scheme in vocabulary order."""
    from .poi import SCHEMES

    if src.scheme != dst.scheme:
        raise SchemeMismatch(f"{src.scheme} vs {dst.scheme}")
    a, b = src.as_dict(), dst.as_dict()
    names = SCHEMES[src.scheme]
    for name in names:
        if name not in a or name not in b:
            raise MissingLabel(name)
    return CorrespondenceSet(names, [a[n] for n in names], [b[n] for n in names])


def horn_matrix(m):
    """Horn's symmetric 4x4 matrix for cross-covariance ``m = sum src_i dst_i^T``."""
    (sxx, sxy, sxz), (syx, syy, syz), (szx, szy, szz) = m
    return np.array([
        [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
        [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
        [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
        [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
    ])


def horn_align(corr, with_scale=True, weights=None):
    """Least-squares similarity (or rigid, ``with_scale=False``) source -> target.

    Raises
    ------
    TooFewPairs
    DegenerateConfiguration
        Collinear source points (rotation not unique).
    """
    src, dst = corr.source, corr.target
    if len(src) < 3:
        raise TooFewPairs(f"need at least 3 pairs, got {len(src)}")
    w = np.ones(len(src)) if weights is None else np.asarray(weights, dtype=np.float64)
    w = w / w.sum()
    cs, cd = w @ src, w @ dst
    a, b = src - cs, dst - cd
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0 or sv[1] <= 1e-9 * sv[0]:
        raise DegenerateConfiguration("source points are collinear")

    n = horn_matrix((a * w[:, None]).T @ b)
    values, vectors = jacobi_eigh(n, tol=1e-14)
    q = vectors[:, 0]
    resid = np.abs(n @ q - values[0] * q).max()
    if resid > 1e-10 * max(1.0, np.abs(n).max()):
        raise RuntimeError(f"eigenvector residual {resid:.3g} too large")
    if values[0] - values[1] <= 1e-12 * max(abs(values[0]), 1e-300):
        raise DegenerateConfiguration("rotation is not unique")
    q = _canonical(q)
    r = quat_to_matrix(q)

    s = 1.0
    if with_scale:
        s = float(np.sum(w[:, None] * (a @ r.T) * b) / np.sum(w[:, None] * a * a))
        if not s > 0:
            raise DegenerateConfiguration("non-positive scale estimate")
    t = cd - s * (r @ cs)
    return SimilarityTransform(q, t, s)


def residual(transform, corr):
    """Sum of squared distances between mapped source and target points."""
    d = transform.apply(corr.source) - corr.target
    return float(np.sum(d * d))
